#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "freeflight/actions.hpp"
#include "freeflight/geometry.hpp"
#include "freeflight/reachability.hpp"
#include "freeflight/safety.hpp"
#include "freeflight/vehicle.hpp"

namespace freeflight {

enum class SourceKind { Destination, Intruder, Terrain };

// A reward peak: value decays per meter of Euclidean distance from
// the source location.
struct RewardSource {
  Vec3 location;
  double magnitude = 0.0;  // signed; sign handled by the breakdown
  double decay = 1.0;      // per-meter factor in (0, 1]
  SourceKind kind = SourceKind::Destination;
};

inline RewardSource make_destination_source(const Vec3& where,
                                            double magnitude = 200.0,
                                            double decay = 0.999) {
  return RewardSource{where, magnitude, decay, SourceKind::Destination};
}

// Loss-of-separation half-widths: two aircraft closer than both at
// once are in near-midair-collision range.
inline constexpr double kSeparationHorizontalM = 152.0;
inline constexpr double kSeparationVerticalM = 30.0;

// Negative peaks attached to reach-tube slices: magnitude grows with
// the slice's lookahead time.  The pads inflate each slice when
// membership is tested, so a pass that clears the reach set but still
// comes close to it is charged too.  The vertical pad is deliberately
// generous: symmetric same-sense altitude escapes leave the vertical
// gap unchanged, so they must stay charged until the gap is real.
struct IntruderRewardModel {
  double base = 500.0;        // at zero lookahead
  double per_second = 100.0;  // added per second of lookahead
  double decay = 0.97;        // per meter from the slice center
  double pad_horizontal = 100.0;  // added to slice radii, x and y
  double pad_vertical = 60.0;     // added to slice radii, z
};

struct ValueBreakdown {
  double v_plus = 0.0;
  double v_minus = 0.0;
  double v_terrain = 0.0;
  double total = 0.0;
};

// Peak magnitude felt at a state: decay^distance times |magnitude|.
inline double peak_value(const AircraftState& s, const RewardSource& src) {
  const double d = distance(s.position(), src.location);
  return std::pow(src.decay, d) * std::fabs(src.magnitude);
}

inline double terrain_penalty(const AircraftState& s,
                              double penalty_altitude = 1000.0) {
  return s.z < penalty_altitude ? 1000.0 - s.z : 0.0;
}

namespace detail {

inline bool point_in_aabb(const ReachTube& t, const Vec3& p) {
  return p.x >= t.aabb_min.x && p.x <= t.aabb_max.x && p.y >= t.aabb_min.y &&
         p.y <= t.aabb_max.y && p.z >= t.aabb_min.z && p.z <= t.aabb_max.z;
}

// Inertial velocity implied by the state's heading, path angle, speed.
inline Vec3 state_velocity(const AircraftState& s) {
  const double cg = std::cos(s.gamma);
  return {s.v * std::cos(s.psi) * cg, s.v * std::sin(s.psi) * cg,
          s.v * std::sin(s.gamma)};
}

// Largest negative peak the state collects across the tube horizon.
// The state holds its course: its straight extrapolation is tested
// against each slice at that slice's own lookahead time, so a course
// that meets the intruder's corridor when the intruder is there is
// charged, while one that crosses behind it is not.  at_t is the time
// the state itself belongs to, anchoring the extrapolation.
inline double anticipated_peak(const ReachTube& t, const Vec3& p,
                               const Vec3& vel, double at_t,
                               const IntruderRewardModel& m) {
  const Vec3 q0 = p + vel * (t.times.front() - at_t);
  const Vec3 q1 = p + vel * (t.times.back() - at_t);
  if (std::fmax(q0.x, q1.x) < t.aabb_min.x - m.pad_horizontal ||
      std::fmin(q0.x, q1.x) > t.aabb_max.x + m.pad_horizontal ||
      std::fmax(q0.y, q1.y) < t.aabb_min.y - m.pad_horizontal ||
      std::fmin(q0.y, q1.y) > t.aabb_max.y + m.pad_horizontal ||
      std::fmax(q0.z, q1.z) < t.aabb_min.z - m.pad_vertical ||
      std::fmin(q0.z, q1.z) > t.aabb_max.z + m.pad_vertical)
    return 0.0;
  double best = 0.0;
  for (std::size_t k = 0; k < t.times.size(); ++k) {
    const Vec3 q = p + vel * (t.times[k] - at_t);
    const Vec3& c = t.centers[k];
    const double rh = t.radii[k] + m.pad_horizontal;
    if (std::fabs(q.x - c.x) > rh || std::fabs(q.y - c.y) > rh ||
        std::fabs(q.z - c.z) > t.radii[k] + m.pad_vertical)
      continue;
    const double mag = m.base + m.per_second * t.times[k];
    const double v = std::pow(m.decay, distance(q, c)) * mag;
    if (v > best) best = v;
  }
  return best;
}

}  // namespace detail

// True when p sits inside at least one stored slice of any tube.
inline bool inside_any_slice(std::span<const ReachTube* const> tubes,
                             const Vec3& p) {
  for (const ReachTube* t : tubes) {
    if (!detail::point_in_aabb(*t, p)) continue;
    for (std::size_t k = 0; k < t->times.size(); ++k)
      if (chebyshev(p, t->centers[k]) <= t->radii[k]) return true;
  }
  return false;
}

// Values a projected future state against the reward landscape.  The
// destination contributes the positive peak.  Negative rewards carry
// the whole tube horizon: the state's constant-course extrapolation,
// anchored at lookahead_t, is tested against each slice at that
// slice's own time, and the largest contained peak is kept (deeper
// slices weigh more).  The slice at lookahead_t tests the state's own
// position, so a state already inside the corridor is always charged.
inline ValueBreakdown evaluate_state(const AircraftState& future,
                                     double lookahead_t,
                                     const RewardSource& destination,
                                     std::span<const ReachTube* const> tubes,
                                     double penalty_altitude = 1000.0,
                                     const IntruderRewardModel& intruder = {}) {
  for (const ReachTube* t : tubes)
    if (t->horizon() < lookahead_t)
      throw std::invalid_argument("tube horizon shorter than lookahead");
  ValueBreakdown v;
  v.v_plus = peak_value(future, destination);
  const Vec3 vel = detail::state_velocity(future);
  for (const ReachTube* t : tubes) {
    const double peak = detail::anticipated_peak(*t, future.position(), vel,
                                                 lookahead_t, intruder);
    if (peak > v.v_minus) v.v_minus = peak;
  }
  v.v_terrain = terrain_penalty(future, penalty_altitude);
  v.total = v.v_plus - v.v_minus - v.v_terrain;
  return v;
}

struct Candidate {
  Command cmd;
  AircraftState next;
  ValueBreakdown value;
  std::uint32_t index = 0;  // enumeration index, used for tie breaks
};

namespace detail {

// Batched one-step projection of every joint action.  Exploits the
// cross-product structure: the tracking channels depend on one
// command axis each, and with course == heading the turn-rate stages
// depend only on (speed, roll).  Reproduces step() bit for bit.
inline void project_all_fast(const AircraftState& s, const ActionSet& a,
                             const AutopilotParams& p, double dt,
                             std::vector<Candidate>& out) {
  const std::size_t ng = a.gamma_levels_deg.size();
  const std::size_t np = a.phi_levels_deg.size();
  const std::size_t nv = a.v_levels_mps.size();
  const double h2 = 0.5 * dt;

  struct GammaTab {
    double out_wrapped, cg2, sg2, cg3, sg3, cg4, sg4, s2, s3, s4;
  };
  struct PhiTab {
    double out_wrapped, s2, s3, s4;
  };
  struct VTab {
    double out, s2, s3, s4;
  };
  std::vector<GammaTab> gt(ng);
  std::vector<PhiTab> pt(np);
  std::vector<VTab> vt(nv);
  for (std::size_t i = 0; i < ng; ++i) {
    const auto t = rk4_track(s.gamma, deg2rad(a.gamma_levels_deg[i]), p.b_gamma, dt);
    gt[i] = {wrap_angle(t.out), std::cos(t.s2), std::sin(t.s2), std::cos(t.s3),
             std::sin(t.s3),    std::cos(t.s4), std::sin(t.s4), t.s2, t.s3, t.s4};
  }
  for (std::size_t i = 0; i < np; ++i) {
    const auto t = rk4_track(s.phi, deg2rad(a.phi_levels_deg[i]), p.b_phi, dt);
    pt[i] = {wrap_angle(t.out), t.s2, t.s3, t.s4};
  }
  for (std::size_t i = 0; i < nv; ++i) {
    const auto t = rk4_track(s.v, a.v_levels_mps[i], p.b_v, dt);
    vt[i] = {t.out, t.s2, t.s3, t.s4};
  }

  // Shared course channel pieces (stage 1 is command independent).
  const double kc1 = turn_rate(p.g, s.v, s.phi, s.chi - s.psi);
  const double c2 = s.chi + h2 * kc1;
  const double p2 = s.psi + h2 * kc1;
  const double cp2 = std::cos(p2), sp2 = std::sin(p2);
  const double cg1 = std::cos(s.gamma), sg1 = std::sin(s.gamma);
  const double cp1 = std::cos(s.psi), sp1 = std::sin(s.psi);
  const double kx1 = s.v * (cp1 * cg1);
  const double ky1 = s.v * (sp1 * cg1);
  const double kz1 = s.v * sg1;

  // Per (speed, roll): the full course channel and its stage headings.
  struct CourseTab {
    double chi_wrapped, cp3, sp3, cp4, sp4;
  };
  std::vector<CourseTab> ct(nv * np);
  for (std::size_t ip = 0; ip < np; ++ip) {
    for (std::size_t iv = 0; iv < nv; ++iv) {
      const double kc2 = turn_rate(p.g, vt[iv].s2, pt[ip].s2, c2 - p2);
      const double c3 = s.chi + h2 * kc2;
      const double p3 = s.psi + h2 * kc2;
      const double kc3 = turn_rate(p.g, vt[iv].s3, pt[ip].s3, c3 - p3);
      const double c4 = s.chi + dt * kc3;
      const double p4 = s.psi + dt * kc3;
      const double kc4 = turn_rate(p.g, vt[iv].s4, pt[ip].s4, c4 - p4);
      auto& e = ct[ip * nv + iv];
      e.chi_wrapped = wrap_angle(rk4_combine(s.chi, dt, kc1, kc2, kc3, kc4));
      e.cp3 = std::cos(p3);
      e.sp3 = std::sin(p3);
      e.cp4 = std::cos(p4);
      e.sp4 = std::sin(p4);
    }
  }

  out.clear();
  out.reserve(ng * np * nv);
  std::uint32_t idx = 0;
  for (std::size_t ig = 0; ig < ng; ++ig) {
    const auto& g = gt[ig];
    const double gamma_cmd = deg2rad(a.gamma_levels_deg[ig]);
    for (std::size_t ip = 0; ip < np; ++ip) {
      const double phi_cmd = deg2rad(a.phi_levels_deg[ip]);
      const std::size_t row = ip * nv;
      for (std::size_t iv = 0; iv < nv; ++iv, ++idx) {
        const auto& c = ct[row + iv];
        const auto& v = vt[iv];
        const double kx2 = v.s2 * (cp2 * g.cg2);
        const double kx3 = v.s3 * (c.cp3 * g.cg3);
        const double kx4 = v.s4 * (c.cp4 * g.cg4);
        const double ky2 = v.s2 * (sp2 * g.cg2);
        const double ky3 = v.s3 * (c.sp3 * g.cg3);
        const double ky4 = v.s4 * (c.sp4 * g.cg4);
        const double kz2 = v.s2 * g.sg2;
        const double kz3 = v.s3 * g.sg3;
        const double kz4 = v.s4 * g.sg4;
        Candidate cand;
        cand.cmd = Command{gamma_cmd, phi_cmd, a.v_levels_mps[iv]};
        cand.next.x = rk4_combine(s.x, dt, kx1, kx2, kx3, kx4);
        cand.next.y = rk4_combine(s.y, dt, ky1, ky2, ky3, ky4);
        cand.next.z = rk4_combine(s.z, dt, kz1, kz2, kz3, kz4);
        cand.next.chi = c.chi_wrapped;
        cand.next.psi = c.chi_wrapped;
        cand.next.gamma = g.out_wrapped;
        cand.next.phi = pt[ip].out_wrapped;
        cand.next.v = v.out;
        cand.index = idx;
        if (!state_is_finite(cand.next))
          throw std::domain_error("integration produced non-finite state");
        out.push_back(cand);
      }
    }
  }
}

}  // namespace detail

// One-step projection of the whole action menu.  Falls back to the
// scalar integrator when course and heading have drifted apart.
inline std::vector<Candidate> project_candidates(const AircraftState& s,
                                                 const ActionSet& actions,
                                                 const AutopilotParams& p = {},
                                                 double dt = 1.0) {
  detail::validate_state(s);
  std::vector<Candidate> out;
  if (s.chi == s.psi) {
    detail::project_all_fast(s, actions, p, dt, out);
    return out;
  }
  const auto cmds = enumerate_commands(actions);
  out.reserve(cmds.size());
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    Candidate c;
    c.cmd = cmds[i];
    c.next = step(s, cmds[i], p, dt);
    c.index = static_cast<std::uint32_t>(i);
    out.push_back(c);
  }
  return out;
}

struct PlannerConfig {
  double destination_magnitude = 200.0;
  double destination_decay = 0.999;
  IntruderRewardModel intruder{};
  double penalty_altitude = 1000.0;
  double arrival_radius = 300.0;
  double shaping_kappa = 0.97;
};

struct PlanContext {
  AutopilotParams vehicle{};
  double dt = 1.0;
  SafetyMode mode = SafetyMode::Baseline;
  PlannerConfig rewards{};
  PerformanceLimits limits{};
  bool enforce_limits = true;  // screen candidates against the envelope
};

struct PlanResult {
  bool deadlock = false;  // shield blocked everything
  bool exempt = false;    // limits screening was suspended
  Command cmd{};
  AircraftState next{};
  ValueBreakdown value{};
  ValueBreakdown current{};  // ownship value before moving (shaping mode)
  double score = 0.0;        // ranking value under the active mode
  std::uint32_t action_index = 0;
  std::size_t candidate_count = 0;
};

// Reward actually collected on contact: the undecayed slice magnitude
// when the state enters a tube box padded by the loss-of-separation
// standard, the arrival bonus inside the destination threshold.  Used
// by shaping mode, where the shaped reward is this contact term plus
// the potential difference.  Contact uses the fixed separation
// half-widths, not the tunable field pads: it prices the outcome the
// episode is scored on.
inline double raw_contact_reward(const AircraftState& s,
                                 const RewardSource& destination,
                                 std::span<const ReachTube* const> tubes,
                                 const PlannerConfig& cfg) {
  const Vec3 p = s.position();
  double r = 0.0;
  double worst = 0.0;
  for (const ReachTube* t : tubes) {
    if (p.x < t->aabb_min.x - kSeparationHorizontalM ||
        p.x > t->aabb_max.x + kSeparationHorizontalM ||
        p.y < t->aabb_min.y - kSeparationHorizontalM ||
        p.y > t->aabb_max.y + kSeparationHorizontalM ||
        p.z < t->aabb_min.z - kSeparationVerticalM ||
        p.z > t->aabb_max.z + kSeparationVerticalM)
      continue;
    for (std::size_t k = 0; k < t->times.size(); ++k) {
      const Vec3& c = t->centers[k];
      const double rh = t->radii[k] + kSeparationHorizontalM;
      if (std::fabs(p.x - c.x) > rh || std::fabs(p.y - c.y) > rh ||
          std::fabs(p.z - c.z) > t->radii[k] + kSeparationVerticalM)
        continue;
      const double mag = cfg.intruder.base + cfg.intruder.per_second * t->times[k];
      if (mag > worst) worst = mag;
    }
  }
  r -= worst;
  if (distance(s.position(), destination.location) <= cfg.arrival_radius)
    r += std::fabs(destination.magnitude);
  return r;
}

// Projects every joint action one control step ahead, values the
// futures, and picks the argmax under the active safety mode.  Ties
// break toward the lowest enumeration index.
inline PlanResult plan_step(const AircraftState& ownship,
                            const RewardSource& destination,
                            std::span<const ReachTube* const> tubes,
                            const ActionSet& actions, const PlanContext& ctx) {
  auto candidates = project_candidates(ownship, actions, ctx.vehicle, ctx.dt);
  PlanResult res;
  res.candidate_count = candidates.size();

  if (ctx.enforce_limits) {
    // Screen against the envelope; when nothing legal remains (only
    // possible while recovering from an emergency manoeuvre) fly the
    // unscreened menu and mark the step exempt.
    std::vector<Candidate> legal;
    legal.reserve(candidates.size());
    for (const auto& c : candidates)
      if (transition_within_limits(ownship, c.next, ctx.dt, ctx.limits))
        legal.push_back(c);
    if (legal.empty())
      res.exempt = true;
    else
      candidates = std::move(legal);
  }

  for (auto& c : candidates)
    c.value = evaluate_state(c.next, ctx.dt, destination, tubes,
                             ctx.rewards.penalty_altitude, ctx.rewards.intruder);

  const Candidate* best = nullptr;
  double best_score = 0.0;
  if (ctx.mode == SafetyMode::Shaping) {
    res.current =
        evaluate_state(ownship, 0.0, destination, tubes,
                       ctx.rewards.penalty_altitude, ctx.rewards.intruder);
    for (const auto& c : candidates) {
      const double shaped =
          raw_contact_reward(c.next, destination, tubes, ctx.rewards) +
          c.value.total +
          shaping_bonus(res.current.total, c.value.total,
                        ctx.rewards.shaping_kappa);
      if (!best || shaped > best_score) {
        best = &c;
        best_score = shaped;
      }
    }
  } else {
    for (const auto& c : candidates) {
      if (ctx.mode == SafetyMode::Shield && c.value.total < 0.0) continue;
      if (!best || c.value.total > best_score) {
        best = &c;
        best_score = c.value.total;
      }
    }
    if (ctx.mode == SafetyMode::Shield && !best) {
      res.deadlock = true;
      return res;
    }
  }

  res.cmd = best->cmd;
  res.next = best->next;
  res.value = best->value;
  res.score = best_score;
  res.action_index = best->index;
  return res;
}

// Deadlock fallback: re-plans over the emergency menu with the shield
// and the comfort envelope suspended.  Refuses to run when the
// nominal plan would not actually deadlock.
inline PlanResult resolve_deadlock(const AircraftState& ownship,
                                   const RewardSource& destination,
                                   std::span<const ReachTube* const> tubes,
                                   const PlanContext& ctx) {
  PlanContext nominal = ctx;
  nominal.mode = SafetyMode::Shield;
  auto check = plan_step(ownship, destination, tubes, nominal_actions(), nominal);
  if (!check.deadlock)
    throw std::logic_error("resolve_deadlock called without a deadlock");

  PlanContext esc = ctx;
  esc.mode = SafetyMode::Baseline;
  esc.enforce_limits = false;
  auto res = plan_step(ownship, destination, tubes, emergency_actions(), esc);
  res.exempt = true;
  res.deadlock = true;
  return res;
}

inline std::vector<const ReachTube*> tube_ptrs(
    const std::vector<ReachTube>& tubes) {
  std::vector<const ReachTube*> p;
  p.reserve(tubes.size());
  for (const auto& t : tubes) p.push_back(&t);
  return p;
}

}  // namespace freeflight
