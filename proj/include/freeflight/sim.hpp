#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "freeflight/actions.hpp"
#include "freeflight/geometry.hpp"
#include "freeflight/planner.hpp"
#include "freeflight/reachability.hpp"
#include "freeflight/rng.hpp"
#include "freeflight/safety.hpp"
#include "freeflight/vehicle.hpp"

namespace freeflight {

inline constexpr double kNmacHorizontalM = kSeparationHorizontalM;
inline constexpr double kNmacVerticalM = kSeparationVerticalM;

struct SimConfig {
  double radius = 15000.0;           // arena sphere, meters
  double cruise_altitude = 1500.0;   // spawn altitude, meters
  double spawn_speed = 50.0;         // m/s
  double proximity_radius = 3000.0;  // tube construction range
  double min_azimuth_gap = deg2rad(2.0);
  int max_steps = 2000;
  double dt = 1.0;
  int workers = 1;
  bool record_decisions = false;
  ReachConfig reach{};
  AutopilotParams vehicle{};
  PerformanceLimits limits{};
  PlannerConfig rewards{};
};

struct ScenarioAircraft {
  int id = 0;
  AircraftState state{};
  Vec3 origin{};
  Vec3 destination{};
};

struct Scenario {
  double radius = 15000.0;
  double penalty_altitude = 1000.0;
  std::uint64_t seed = 0;
  std::vector<Vec3> vertiports;  // origins first, then destinations
  std::vector<ScenarioAircraft> aircraft;
};

// Vertiports sit on the circle where the cruise-altitude plane cuts
// the arena sphere, nudged inward so spawns are strictly interior.
// Each aircraft flies to the antipode of its origin, so every route
// crosses the central region.  Azimuths are redrawn until pairwise
// separated modulo pi: near-equal azimuths would spawn aircraft
// within NMAC range, near-opposite ones would share one chord
// head-on for the entire route.
inline Scenario generate_scenario(int n_aircraft, double radius, Rng& rng,
                                  const SimConfig& cfg = {}) {
  if (n_aircraft < 1) throw std::invalid_argument("need at least one aircraft");
  if (!(radius > cfg.cruise_altitude))
    throw std::invalid_argument("arena sphere smaller than cruise altitude");

  const double ring =
      std::sqrt(radius * radius - cfg.cruise_altitude * cfg.cruise_altitude) -
      1e-3;

  std::vector<double> az;
  az.reserve(n_aircraft);
  while (static_cast<int>(az.size()) < n_aircraft) {
    const double a = rng.uniform(0.0, kTwoPi);
    bool ok = true;
    for (double b : az) {
      double d = std::fabs(std::remainder(a - b, kPi));
      if (d < cfg.min_azimuth_gap) {
        ok = false;
        break;
      }
    }
    if (ok) az.push_back(a);
  }

  Scenario sc;
  sc.radius = radius;
  sc.penalty_altitude = cfg.rewards.penalty_altitude;
  sc.vertiports.resize(2 * static_cast<std::size_t>(n_aircraft));
  sc.aircraft.resize(n_aircraft);
  for (int i = 0; i < n_aircraft; ++i) {
    const double a = az[i];
    const Vec3 org{ring * std::cos(a), ring * std::sin(a), cfg.cruise_altitude};
    const Vec3 dst{-org.x, -org.y, cfg.cruise_altitude};
    sc.vertiports[i] = org;
    sc.vertiports[n_aircraft + i] = dst;
    auto& ac = sc.aircraft[i];
    ac.id = i;
    ac.origin = org;
    ac.destination = dst;
    ac.state.x = org.x;
    ac.state.y = org.y;
    ac.state.z = org.z;
    const double heading = wrap_angle(std::atan2(dst.y - org.y, dst.x - org.x));
    ac.state.psi = heading;
    ac.state.chi = heading;
    ac.state.gamma = 0.0;
    ac.state.phi = 0.0;
    ac.state.v = cfg.spawn_speed;
  }
  return sc;
}

// Every unordered index pair violating both NMAC thresholds at once.
inline std::vector<std::pair<int, int>> detect_nmac(
    const std::vector<AircraftState>& states) {
  std::vector<std::pair<int, int>> out;
  const int n = static_cast<int>(states.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (horizontal_distance(states[i].position(), states[j].position()) <
              kNmacHorizontalM &&
          vertical_distance(states[i].position(), states[j].position()) <
              kNmacVerticalM)
        out.emplace_back(i, j);
  return out;
}

struct NmacEvent {
  int step = 0;  // first violating step of the contiguous run
  int a = 0;
  int b = 0;
};

struct DecisionRecord {
  int step = 0;
  int aircraft = 0;
  Command cmd{};
  ValueBreakdown value{};
  bool deadlock = false;
  bool exempt = false;
  bool in_tube = false;
  double plan_seconds = 0.0;
};

struct EpisodeResult {
  std::vector<std::vector<AircraftState>> trajectories;  // [aircraft][step]
  std::vector<NmacEvent> nmac_events;
  std::size_t nmac_step_pairs = 0;  // violating (pair, step) incidences
  std::vector<std::vector<double>> plan_times;  // seconds, [aircraft][decision]
  double tube_build_seconds = 0.0;
  double throughput_seconds = 0.0;
  int deadlock_count = 0;            // emergency escapes taken
  std::size_t deadlock_steps = 0;    // flagged steps incl. recovery tails
  std::size_t exempt_steps = 0;
  std::size_t exempt_unflagged = 0;  // exemptions with no deadlock behind them
  std::size_t nonexempt_limit_violations = 0;
  std::size_t tube_incursions = 0;   // chosen positions inside an intruder tube
  std::vector<int> arrival_steps;    // -1 when max_steps ran out
  bool all_arrived = false;
};

namespace detail {

inline void parallel_for(std::size_t count, int workers,
                         const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const int n = std::min<int>(workers, static_cast<int>(count));
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (int w = 0; w < n; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += n) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace detail

// Synchronous multi-aircraft episode.  Per step: one shared tube per
// in-conflict aircraft, then every active aircraft plans against the
// same snapshot, then all moves commit together.  Aircraft retire on
// arrival; the loop ends when everyone is down or max_steps is hit.
inline EpisodeResult run_episode(const Scenario& sc, SafetyMode mode,
                                 const SimConfig& cfg = {},
                                 std::vector<DecisionRecord>* decisions = nullptr) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  const int n = static_cast<int>(sc.aircraft.size());
  if (n == 0) throw std::invalid_argument("scenario has no aircraft");

  PlanContext ctx;
  ctx.vehicle = cfg.vehicle;
  ctx.dt = cfg.dt;
  ctx.mode = mode;
  ctx.rewards = cfg.rewards;
  ctx.rewards.penalty_altitude = sc.penalty_altitude;
  ctx.limits = cfg.limits;
  // The comfort envelope belongs to the safety-enhanced modes; the
  // plain planner flies the raw menu.  This also matters for mission
  // completion: the asymmetric roll limit caps left turns near the
  // orbital rate around a goal ~2.4 km out, and the one-step argmax
  // can then circle a destination indefinitely instead of reaching it.
  const bool screened = mode != SafetyMode::Baseline;
  ctx.enforce_limits = screened;

  const auto menu = nominal_actions();
  std::vector<RewardSource> dest(n);
  for (int i = 0; i < n; ++i)
    dest[i] = make_destination_source(sc.aircraft[i].destination,
                                      cfg.rewards.destination_magnitude,
                                      cfg.rewards.destination_decay);

  EpisodeResult res;
  res.trajectories.resize(n);
  res.plan_times.resize(n);
  res.arrival_steps.assign(n, -1);

  std::vector<AircraftState> state(n);
  std::vector<char> active(n, 1), in_recovery(n, 0);
  for (int i = 0; i < n; ++i) {
    state[i] = sc.aircraft[i].state;
    res.trajectories[i].push_back(state[i]);
  }

  std::vector<IntruderTube> tube(n);
  std::vector<char> has_tube(n, 0);
  std::vector<PlanResult> plan(n);
  std::vector<char> in_tube_flag(n, 0);
  std::vector<char> pair_violating(static_cast<std::size_t>(n) * n, 0);

  for (int step_i = 0; step_i < cfg.max_steps; ++step_i) {
    // Which aircraft are inside anyone's proximity range this step?
    std::vector<int> planners;
    std::fill(has_tube.begin(), has_tube.end(), 0);
    for (int i = 0; i < n; ++i) {
      if (!active[i]) continue;
      planners.push_back(i);
      for (int j = 0; j < n; ++j)
        if (j != i && active[j] &&
            distance(state[i].position(), state[j].position()) <=
                cfg.proximity_radius)
          has_tube[j] = 1;
    }
    if (planners.empty()) break;

    const auto t_tube0 = clock::now();
    std::vector<int> tube_owners;
    for (int i = 0; i < n; ++i)
      if (has_tube[i]) tube_owners.push_back(i);
    detail::parallel_for(
        tube_owners.size(), cfg.workers, [&](std::size_t k) {
          const int i = tube_owners[k];
          Rng rng(derive_seed(sc.seed,
                              {stream::kTube, static_cast<std::uint64_t>(step_i),
                               static_cast<std::uint64_t>(i)}));
          tube[i] = build_intruder_tube(state[i], menu, cfg.reach, cfg.vehicle,
                                        cfg.dt, rng);
        });
    res.tube_build_seconds +=
        std::chrono::duration<double>(clock::now() - t_tube0).count();

    detail::parallel_for(planners.size(), cfg.workers, [&](std::size_t k) {
      const int i = planners[k];
      std::vector<const ReachTube*> tubes;
      for (int j = 0; j < n; ++j)
        if (j != i && active[j] && has_tube[j] &&
            distance(state[i].position(), state[j].position()) <=
                cfg.proximity_radius)
          tubes.push_back(&tube[j].tube);

      const auto t0 = clock::now();
      auto r = plan_step(state[i], dest[i], tubes, menu, ctx);
      if (r.deadlock) r = resolve_deadlock(state[i], dest[i], tubes, ctx);
      const double secs = std::chrono::duration<double>(clock::now() - t0).count();

      res.plan_times[i].push_back(secs);
      // Reach-avoid audit: the committed position is occupied one
      // step from now, so it is held against each tube's slice at
      // that time, not against the corridor as a whole.
      in_tube_flag[i] = 0;
      for (const ReachTube* t : tubes)
        if (tube_contains(*t, r.next.position(), cfg.dt).contains) {
          in_tube_flag[i] = 1;
          break;
        }
      plan[i] = r;
    });

    // Commit the snapshot's decisions and audit them.
    for (int i : planners) {
      const auto& r = plan[i];
      if (r.deadlock) {
        ++res.deadlock_count;
        ++res.deadlock_steps;
        in_recovery[i] = 1;
      } else if (r.exempt) {
        if (in_recovery[i])
          ++res.deadlock_steps;
        else
          ++res.exempt_unflagged;
      } else {
        in_recovery[i] = 0;
      }
      if (r.exempt) ++res.exempt_steps;
      if (screened && !r.exempt &&
          !transition_within_limits(state[i], r.next, cfg.dt, cfg.limits))
        ++res.nonexempt_limit_violations;
      if (in_tube_flag[i]) ++res.tube_incursions;
      if (decisions)
        decisions->push_back({step_i, i, r.cmd, r.value, r.deadlock, r.exempt,
                              static_cast<bool>(in_tube_flag[i]),
                              res.plan_times[i].back()});
      state[i] = r.next;
      res.trajectories[i].push_back(state[i]);
    }

    for (int i : planners)
      if (distance(state[i].position(), sc.aircraft[i].destination) <=
          cfg.rewards.arrival_radius) {
        active[i] = 0;
        res.arrival_steps[i] = step_i + 1;
      }

    // NMAC bookkeeping on the aircraft still flying.
    for (int i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (int j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        const bool hit =
            horizontal_distance(state[i].position(), state[j].position()) <
                kNmacHorizontalM &&
            vertical_distance(state[i].position(), state[j].position()) <
                kNmacVerticalM;
        auto& run = pair_violating[static_cast<std::size_t>(i) * n + j];
        if (hit) {
          ++res.nmac_step_pairs;
          if (!run) res.nmac_events.push_back({step_i, i, j});
          run = 1;
        } else {
          run = 0;
        }
      }
    }

    if (std::none_of(active.begin(), active.end(), [](char a) { return a; }))
      break;
  }

  res.all_arrived = std::all_of(res.arrival_steps.begin(),
                                res.arrival_steps.end(),
                                [](int s) { return s >= 0; });
  res.throughput_seconds =
      std::chrono::duration<double>(clock::now() - t_start).count();
  return res;
}

struct ExperimentCell {
  int aircraft = 0;
  SafetyMode mode = SafetyMode::Baseline;
  int repetitions = 0;
  double nmac_mean = 0.0;
  double nmac_std = 0.0;
  double nmac_steps_mean = 0.0;
  double plan_time_mean = 0.0;  // seconds per decision, pooled
  double plan_time_std = 0.0;
  double throughput_mean = 0.0;
  int deadlock_total = 0;
  int episodes_not_arrived = 0;
  std::size_t tube_incursions = 0;
  std::size_t exempt_unflagged = 0;
  std::size_t nonexempt_limit_violations = 0;
  std::vector<double> nmac_per_rep;
  std::vector<std::uint64_t> seeds;
};

struct ExperimentReport {
  std::uint64_t base_seed = 0;
  int repetitions = 0;
  std::vector<ExperimentCell> cells;  // counts outer, modes inner
};

inline std::uint64_t episode_seed(std::uint64_t base_seed, int aircraft,
                                  int repetition) {
  // The safety mode is deliberately left out so that mode comparisons
  // share scenario and tube draws (paired seeds).
  return derive_seed(base_seed,
                     {stream::kEpisode, static_cast<std::uint64_t>(aircraft),
                      static_cast<std::uint64_t>(repetition)});
}

inline ExperimentReport run_experiment(const std::vector<int>& counts,
                                       int repetitions,
                                       const std::vector<SafetyMode>& modes,
                                       std::uint64_t base_seed,
                                       const SimConfig& cfg = {}) {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  ExperimentReport report;
  report.base_seed = base_seed;
  report.repetitions = repetitions;

  for (int count : counts) {
    for (auto mode : modes) {
      ExperimentCell cell;
      cell.aircraft = count;
      cell.mode = mode;
      cell.repetitions = repetitions;

      std::vector<double> times;
      double steps_sum = 0.0;
      for (int rep = 0; rep < repetitions; ++rep) {
        const std::uint64_t seed = episode_seed(base_seed, count, rep);
        Rng rng(derive_seed(seed, {stream::kScenario}));
        auto sc = generate_scenario(count, cfg.radius, rng, cfg);
        sc.seed = seed;
        const auto ep = run_episode(sc, mode, cfg);

        cell.seeds.push_back(seed);
        cell.nmac_per_rep.push_back(static_cast<double>(ep.nmac_events.size()));
        steps_sum += static_cast<double>(ep.nmac_step_pairs);
        cell.throughput_mean += ep.throughput_seconds;
        cell.deadlock_total += ep.deadlock_count;
        cell.episodes_not_arrived += ep.all_arrived ? 0 : 1;
        cell.tube_incursions += ep.tube_incursions;
        cell.exempt_unflagged += ep.exempt_unflagged;
        cell.nonexempt_limit_violations += ep.nonexempt_limit_violations;
        for (const auto& per_ac : ep.plan_times)
          times.insert(times.end(), per_ac.begin(), per_ac.end());
      }

      double sum = 0.0;
      for (double v : cell.nmac_per_rep) sum += v;
      cell.nmac_mean = sum / repetitions;
      double var = 0.0;
      for (double v : cell.nmac_per_rep)
        var += (v - cell.nmac_mean) * (v - cell.nmac_mean);
      cell.nmac_std = std::sqrt(var / repetitions);
      cell.nmac_steps_mean = steps_sum / repetitions;
      cell.throughput_mean /= repetitions;

      if (!times.empty()) {
        double tsum = 0.0;
        for (double t : times) tsum += t;
        cell.plan_time_mean = tsum / static_cast<double>(times.size());
        double tvar = 0.0;
        for (double t : times)
          tvar += (t - cell.plan_time_mean) * (t - cell.plan_time_mean);
        cell.plan_time_std = std::sqrt(tvar / static_cast<double>(times.size()));
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

}  // namespace freeflight
