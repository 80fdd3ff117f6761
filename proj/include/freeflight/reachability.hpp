#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "freeflight/actions.hpp"
#include "freeflight/geometry.hpp"
#include "freeflight/rng.hpp"
#include "freeflight/vehicle.hpp"

namespace freeflight {

// Distances this small are treated as zero when forming log ratios.
inline constexpr double kSpreadFloor = 1e-6;

struct ReachConfig {
  int sample_count = 20;      // trajectories drawn per tube, incl. reference
  int segment_count = 5;      // time windows of the growth envelope
  double initial_radius = 5.0;  // position offset ball, meters
  double horizon = 10.0;        // seconds
};

// Bundle of sampled trajectories over a shared time grid.  Index 0 is
// the reference started at the exact center.
struct TrajectorySet {
  std::vector<double> times;
  std::vector<std::vector<AircraftState>> trajs;

  // Largest pairwise position separation (infinity norm) at t = 0.
  double initial_spread() const {
    double m = 0.0;
    for (std::size_t i = 0; i < trajs.size(); ++i)
      for (std::size_t j = i + 1; j < trajs.size(); ++j)
        m = std::fmax(m, chebyshev(trajs[i][0].position(), trajs[j][0].position()));
    return m;
  }
};

namespace detail {

inline Command draw_command(const ActionSet& a, Rng& rng) {
  const double g = a.gamma_levels_deg[rng.index(a.gamma_levels_deg.size())];
  const double p = a.phi_levels_deg[rng.index(a.phi_levels_deg.size())];
  const double v = a.v_levels_mps[rng.index(a.v_levels_mps.size())];
  return Command{deg2rad(g), deg2rad(p), v};
}

inline std::vector<AircraftState> roll_out(const AircraftState& start,
                                           const ActionSet& actions,
                                           std::size_t steps,
                                           const AutopilotParams& p, double dt,
                                           Rng& rng) {
  std::vector<AircraftState> traj;
  traj.reserve(steps + 1);
  traj.push_back(start);
  AircraftState cur = start;
  for (std::size_t k = 0; k < steps; ++k) {
    cur = step(cur, draw_command(actions, rng), p, dt);
    traj.push_back(cur);
  }
  return traj;
}

}  // namespace detail

// Draws n trajectories from the given state: the reference plus n - 1
// started at position offsets uniform in a Euclidean ball.  Every
// trajectory re-draws its command independently each step, one index
// per command axis.
inline TrajectorySet sample_trajectories(const AircraftState& center,
                                         double initial_radius,
                                         const ActionSet& actions,
                                         double horizon, int n,
                                         const AutopilotParams& p, double dt,
                                         Rng& rng) {
  if (n < 2) throw std::invalid_argument("need at least two trajectories");
  if (!(initial_radius >= 0.0))
    throw std::invalid_argument("initial radius must be non-negative");
  if (!(horizon > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("horizon and dt must be positive");
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  if (steps == 0) throw std::invalid_argument("horizon shorter than one step");

  std::vector<Vec3> offsets(static_cast<std::size_t>(n) - 1);
  for (auto& o : offsets) o = rng.in_ball(initial_radius);

  TrajectorySet set;
  set.times.resize(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k)
    set.times[k] = static_cast<double>(k) * dt;
  set.trajs.reserve(n);
  set.trajs.push_back(detail::roll_out(center, actions, steps, p, dt, rng));
  for (const auto& o : offsets) {
    AircraftState s = center;
    s.x += o.x;
    s.y += o.y;
    s.z += o.z;
    set.trajs.push_back(detail::roll_out(s, actions, steps, p, dt, rng));
  }
  return set;
}

struct SensitivityPoint {
  double nu = 0.0;  // time
  double mu = 0.0;  // log of spread growth relative to t = 0
};

// Log growth of the largest pairwise position separation, one point
// per positive sample time.  Spreads below the floor are clamped so
// coincident starts stay finite.
inline std::vector<SensitivityPoint> sensitivity_points(
    const std::vector<std::vector<Vec3>>& position_trajs,
    const std::vector<double>& times) {
  if (position_trajs.size() < 2)
    throw std::invalid_argument("need at least two trajectories");
  for (const auto& tr : position_trajs)
    if (tr.size() != times.size())
      throw std::invalid_argument("trajectory length mismatch");

  auto spread_at = [&](std::size_t k) {
    double m = 0.0;
    for (std::size_t i = 0; i < position_trajs.size(); ++i)
      for (std::size_t j = i + 1; j < position_trajs.size(); ++j)
        m = std::fmax(m, chebyshev(position_trajs[i][k], position_trajs[j][k]));
    return std::fmax(m, kSpreadFloor);
  };

  const double d0 = spread_at(0);
  std::vector<SensitivityPoint> pts;
  pts.reserve(times.size());
  for (std::size_t k = 1; k < times.size(); ++k)
    pts.push_back({times[k], std::log(spread_at(k) / d0)});
  return pts;
}

inline std::vector<SensitivityPoint> sensitivity_points(
    const TrajectorySet& set) {
  std::vector<std::vector<Vec3>> pos(set.trajs.size());
  for (std::size_t i = 0; i < set.trajs.size(); ++i) {
    pos[i].reserve(set.trajs[i].size());
    for (const auto& s : set.trajs[i]) pos[i].push_back(s.position());
  }
  return sensitivity_points(pos, set.times);
}

// One linear piece of the log-growth envelope: mu <= slope * t + intercept
// for t in [t_begin, t_end].
struct DiscrepancySegment {
  double t_begin = 0.0;
  double t_end = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
};

struct DiscrepancyParams {
  std::vector<DiscrepancySegment> segments;

  // Envelope of the log growth, continuous and piecewise linear;
  // clamped at the horizon ends.
  double envelope_log(double t) const {
    if (segments.empty()) throw std::logic_error("empty discrepancy envelope");
    const auto& first = segments.front();
    if (t <= first.t_begin) return first.slope * first.t_begin + first.intercept;
    for (const auto& s : segments)
      if (t <= s.t_end) return s.slope * t + s.intercept;
    const auto& last = segments.back();
    return last.slope * last.t_end + last.intercept;
  }

  // Multiplicative spread growth factor at time t.
  double growth(double t) const { return std::exp(envelope_log(t)); }

  double log_multiplier() const {
    if (segments.empty()) throw std::logic_error("empty discrepancy envelope");
    return segments.front().intercept;
  }

  // Growth factor extrapolated to t = 0.
  double multiplier() const { return std::exp(log_multiplier()); }
};

namespace detail {

// Slope and supporting intercept of a window of points: the steepest
// edge of the upper convex hull, with the line lifted just enough to
// sit on or above every point.  Windows without two distinct times
// fall back to a flat line at the highest point.
inline void window_support(const std::vector<SensitivityPoint>& win,
                           double& slope, double& intercept) {
  slope = 0.0;
  intercept = 0.0;
  if (win.empty()) return;
  bool distinct = false;
  for (std::size_t i = 1; i < win.size(); ++i)
    if (win[i].nu != win[0].nu) distinct = true;
  if (!distinct) {
    intercept = win[0].mu;
    for (const auto& p : win) intercept = std::fmax(intercept, p.mu);
    return;
  }
  std::vector<SensitivityPoint> hull;
  for (const auto& p : win) {
    while (hull.size() >= 2) {
      const auto& o = hull[hull.size() - 2];
      const auto& a = hull[hull.size() - 1];
      const double cross =
          (a.nu - o.nu) * (p.mu - o.mu) - (a.mu - o.mu) * (p.nu - o.nu);
      if (cross >= 0.0) hull.pop_back();
      else break;
    }
    hull.push_back(p);
  }
  slope = (hull[1].mu - hull[0].mu) / (hull[1].nu - hull[0].nu);
  intercept = hull[0].mu - slope * hull[0].nu;
}

}  // namespace detail

// Fits a piecewise-linear upper envelope to the sensitivity points
// over equal time windows.  Each window contributes the slope of the
// steepest edge of the upper convex hull of its points; intercepts
// are then lifted left to right so the envelope is continuous and
// never drops below a window's supporting line.
inline DiscrepancyParams learn_discrepancy(
    const std::vector<SensitivityPoint>& points, int segment_count) {
  if (points.empty()) throw std::invalid_argument("no sensitivity points");
  if (segment_count < 1) throw std::invalid_argument("segment count < 1");

  std::vector<SensitivityPoint> pts = points;
  std::sort(pts.begin(), pts.end(),
            [](const SensitivityPoint& a, const SensitivityPoint& b) {
              return a.nu < b.nu;
            });
  const double horizon = pts.back().nu;
  if (!(horizon > 0.0)) throw std::invalid_argument("non-positive horizon");

  const double width = horizon / segment_count;
  std::vector<std::vector<SensitivityPoint>> windows(segment_count);
  for (const auto& p : pts) {
    auto w = static_cast<std::size_t>(std::ceil(p.nu / width)) - 1;
    if (w >= windows.size()) w = windows.size() - 1;
    windows[w].push_back(p);
  }

  DiscrepancyParams out;
  out.segments.reserve(segment_count);
  for (int i = 0; i < segment_count; ++i) {
    const double t0 = i * width;
    const double t1 = (i + 1 == segment_count) ? horizon : (i + 1) * width;
    double slope, support;
    detail::window_support(windows[i], slope, support);
    double intercept = support;
    if (i > 0) {
      const auto& prev = out.segments.back();
      const double joint = prev.slope * prev.t_end + prev.intercept;
      const double cont = joint - slope * t0;
      if (windows[i].empty() || cont >= support) {
        intercept = cont;
      } else {
        // The window's supporting line starts above the running
        // envelope; lift everything before it to keep continuity.
        const double deficit = support + slope * t0 - joint;
        for (auto& s : out.segments) s.intercept += deficit;
      }
    }
    out.segments.push_back({t0, t1, slope, intercept});
  }
  return out;
}

// Axis-aligned over-approximation of where a vehicle can be: a cube
// around the reference position at each sample time.
struct ReachTube {
  std::vector<double> times;
  std::vector<Vec3> centers;
  std::vector<double> radii;  // cube half-widths
  Vec3 aabb_min, aabb_max;    // hull over all slices

  double horizon() const { return times.empty() ? 0.0 : times.back(); }

  std::size_t nearest_index(double t) const {
    if (times.size() < 2) return 0;
    const double dt = times[1] - times[0];
    auto i = static_cast<long>(std::llround((t - times[0]) / dt));
    if (i < 0) i = 0;
    if (i >= static_cast<long>(times.size()))
      i = static_cast<long>(times.size()) - 1;
    return static_cast<std::size_t>(i);
  }
};

inline ReachTube build_tube(const std::vector<double>& times,
                            const std::vector<Vec3>& centers,
                            double initial_radius,
                            const DiscrepancyParams& params) {
  if (times.size() != centers.size() || times.empty())
    throw std::invalid_argument("times and centers must match and be non-empty");
  if (!(initial_radius > 0.0))
    throw std::invalid_argument("initial radius must be positive");
  ReachTube tube;
  tube.times = times;
  tube.centers = centers;
  tube.radii.resize(times.size());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  tube.aabb_min = {kInf, kInf, kInf};
  tube.aabb_max = {-kInf, -kInf, -kInf};
  for (std::size_t k = 0; k < times.size(); ++k) {
    // The start slice never narrows below the initial ball; a learned
    // growth factor under one would otherwise exclude states the tube
    // was trained from.
    double g = params.growth(times[k]);
    if (k == 0) g = std::fmax(g, 1.0);
    const double r = initial_radius * g;
    tube.radii[k] = r;
    const Vec3& c = centers[k];
    tube.aabb_min.x = std::fmin(tube.aabb_min.x, c.x - r);
    tube.aabb_min.y = std::fmin(tube.aabb_min.y, c.y - r);
    tube.aabb_min.z = std::fmin(tube.aabb_min.z, c.z - r);
    tube.aabb_max.x = std::fmax(tube.aabb_max.x, c.x + r);
    tube.aabb_max.y = std::fmax(tube.aabb_max.y, c.y + r);
    tube.aabb_max.z = std::fmax(tube.aabb_max.z, c.z + r);
  }
  return tube;
}

struct TubeQuery {
  bool contains = false;
  bool out_of_horizon = false;
  double distance_to_center = 0.0;  // Euclidean, meters
  std::size_t index = 0;
};

// Membership test against the slice nearest in time.  Slices are
// closed boxes; queries outside [0, horizon] never match.
inline TubeQuery tube_contains(const ReachTube& tube, const Vec3& p, double t) {
  TubeQuery q;
  if (tube.times.empty()) throw std::invalid_argument("empty tube");
  if (t < tube.times.front() || t > tube.horizon()) {
    q.out_of_horizon = true;
    return q;
  }
  q.index = tube.nearest_index(t);
  const Vec3& c = tube.centers[q.index];
  q.distance_to_center = distance(p, c);
  q.contains = chebyshev(p, c) <= tube.radii[q.index];
  return q;
}

// Result of the full per-vehicle pipeline: sample, fit, inflate.
struct IntruderTube {
  ReachTube tube;
  DiscrepancyParams discrepancy;
  double initial_spread = 0.0;
};

inline IntruderTube build_intruder_tube(const AircraftState& state,
                                        const ActionSet& actions,
                                        const ReachConfig& rc,
                                        const AutopilotParams& p, double dt,
                                        Rng& rng) {
  auto set = sample_trajectories(state, rc.initial_radius, actions, rc.horizon,
                                 rc.sample_count, p, dt, rng);
  auto pts = sensitivity_points(set);
  auto d = learn_discrepancy(pts, rc.segment_count);
  IntruderTube out;
  out.initial_spread = std::fmax(set.initial_spread(), kSpreadFloor);
  std::vector<Vec3> centers;
  centers.reserve(set.trajs[0].size());
  for (const auto& s : set.trajs[0]) centers.push_back(s.position());
  out.tube = build_tube(set.times, centers, out.initial_spread, d);
  out.discrepancy = d;
  return out;
}

// Draws one fresh trajectory from the tube's source distribution and
// reports whether every sample lies inside the matching slice.
inline bool fresh_trajectory_contained(const AircraftState& center,
                                       const ReachTube& tube,
                                       const ActionSet& actions,
                                       const ReachConfig& rc,
                                       const AutopilotParams& p, double dt,
                                       Rng& rng) {
  const Vec3 o = rng.in_ball(rc.initial_radius);
  AircraftState s = center;
  s.x += o.x;
  s.y += o.y;
  s.z += o.z;
  auto traj = detail::roll_out(s, actions, tube.times.size() - 1, p, dt, rng);
  for (std::size_t k = 0; k < traj.size(); ++k)
    if (chebyshev(traj[k].position(), tube.centers[k]) > tube.radii[k])
      return false;
  return true;
}

inline double fresh_containment_fraction(const AircraftState& center,
                                         const ReachTube& tube,
                                         const ActionSet& actions,
                                         const ReachConfig& rc,
                                         const AutopilotParams& p, double dt,
                                         Rng& rng, int samples) {
  if (samples <= 0) throw std::invalid_argument("sample count must be positive");
  int inside = 0;
  for (int i = 0; i < samples; ++i)
    if (fresh_trajectory_contained(center, tube, actions, rc, p, dt, rng))
      ++inside;
  return static_cast<double>(inside) / samples;
}

}  // namespace freeflight
