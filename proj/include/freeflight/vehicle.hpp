#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "freeflight/geometry.hpp"

namespace freeflight {

// Minimum airspeed fed into the dynamics; guards the g/V term.
inline constexpr double kSpeedFloor = 1.0;

// Kinematic guidance state.  Angles in radians, speeds in m/s,
// positions in meters with z as altitude above ground.
struct AircraftState {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double psi = 0.0;    // heading
  double gamma = 0.0;  // flight path angle
  double chi = 0.0;    // course
  double phi = 0.0;    // roll
  double v = 0.0;      // airspeed

  Vec3 position() const { return {x, y, z}; }
};

// Autopilot reference inputs tracked by the first-order loops.
struct Command {
  double gamma_c = 0.0;  // commanded flight path angle, rad
  double phi_c = 0.0;    // commanded roll, rad
  double v_c = 0.0;      // commanded airspeed, m/s
};

struct AutopilotParams {
  double b_gamma = 0.5;
  double b_v = 0.3;
  double b_phi = 1.0;
  double g = 9.81;
};

struct StateDerivative {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double psi = 0.0;
  double gamma = 0.0;
  double chi = 0.0;
  double phi = 0.0;
  double v = 0.0;
};

inline bool state_is_finite(const AircraftState& s) {
  return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.z) &&
         std::isfinite(s.psi) && std::isfinite(s.gamma) &&
         std::isfinite(s.chi) && std::isfinite(s.phi) && std::isfinite(s.v);
}

inline bool command_is_finite(const Command& c) {
  return std::isfinite(c.gamma_c) && std::isfinite(c.phi_c) &&
         std::isfinite(c.v_c);
}

namespace detail {

inline void validate_state(const AircraftState& s) {
  if (!state_is_finite(s))
    throw std::domain_error("aircraft state has non-finite fields");
  if (!(s.v >= kSpeedFloor))
    throw std::domain_error("airspeed below floor");
}

inline void validate_command(const Command& c) {
  if (!command_is_finite(c))
    throw std::domain_error("command has non-finite fields");
}

// Instantaneous turn rate of course and heading.
inline double turn_rate(double g, double v, double phi, double d_chi_psi) {
  return (g / v) * std::tan(phi) * std::cos(d_chi_psi);
}

// RK4 stages of a first-order tracking loop xdot = gain * (target - x).
// Holds the stage values so coupled channels can read them.
struct TrackStages {
  double k1, k2, k3, k4;
  double s2, s3, s4;  // state at stages 2..4
  double out;
};

inline TrackStages rk4_track(double x0, double target, double gain, double dt) {
  TrackStages t;
  const double h2 = 0.5 * dt;
  t.k1 = gain * (target - x0);
  t.s2 = x0 + h2 * t.k1;
  t.k2 = gain * (target - t.s2);
  t.s3 = x0 + h2 * t.k2;
  t.k3 = gain * (target - t.s3);
  t.s4 = x0 + dt * t.k3;
  t.k4 = gain * (target - t.s4);
  t.out = x0 + (dt / 6.0) * (t.k1 + 2.0 * t.k2 + 2.0 * t.k3 + t.k4);
  return t;
}

inline double rk4_combine(double x0, double dt, double k1, double k2, double k3,
                          double k4) {
  return x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

// Right-hand side of the guidance model.  Heading uses the no-wind
// closure psi_dot = chi_dot, so with psi(0) = chi(0) the two stay
// equal along a trajectory.
inline StateDerivative derivatives(const AircraftState& s, const Command& c,
                                   const AutopilotParams& p = {}) {
  detail::validate_state(s);
  detail::validate_command(c);
  StateDerivative d;
  const double cos_gamma = std::cos(s.gamma);
  d.x = s.v * (std::cos(s.psi) * cos_gamma);
  d.y = s.v * (std::sin(s.psi) * cos_gamma);
  d.z = s.v * std::sin(s.gamma);
  d.chi = detail::turn_rate(p.g, s.v, s.phi, s.chi - s.psi);
  d.psi = d.chi;
  d.gamma = p.b_gamma * (c.gamma_c - s.gamma);
  d.v = p.b_v * (c.v_c - s.v);
  d.phi = p.b_phi * (c.phi_c - s.phi);
  return d;
}

// One RK4 step of length dt.  Output angles are wrapped to (-pi, pi].
inline AircraftState step(const AircraftState& s, const Command& c,
                          const AutopilotParams& p = {}, double dt = 1.0) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("step size must be positive and finite");
  detail::validate_state(s);
  detail::validate_command(c);

  const double h2 = 0.5 * dt;
  const auto tg = detail::rk4_track(s.gamma, c.gamma_c, p.b_gamma, dt);
  const auto tv = detail::rk4_track(s.v, c.v_c, p.b_v, dt);
  const auto tp = detail::rk4_track(s.phi, c.phi_c, p.b_phi, dt);

  // Course/heading channel; chi - psi is invariant across stages
  // because both integrate the same rate.
  const double d0 = s.chi - s.psi;
  const double kc1 = detail::turn_rate(p.g, s.v, s.phi, d0);
  const double c2 = s.chi + h2 * kc1;
  const double p2 = s.psi + h2 * kc1;
  const double kc2 = detail::turn_rate(p.g, tv.s2, tp.s2, c2 - p2);
  const double c3 = s.chi + h2 * kc2;
  const double p3 = s.psi + h2 * kc2;
  const double kc3 = detail::turn_rate(p.g, tv.s3, tp.s3, c3 - p3);
  const double c4 = s.chi + dt * kc3;
  const double p4 = s.psi + dt * kc3;
  const double kc4 = detail::turn_rate(p.g, tv.s4, tp.s4, c4 - p4);

  // Position channel reads the stage values of speed, heading, path angle.
  const double cg1 = std::cos(s.gamma), sg1 = std::sin(s.gamma);
  const double cg2 = std::cos(tg.s2), sg2 = std::sin(tg.s2);
  const double cg3 = std::cos(tg.s3), sg3 = std::sin(tg.s3);
  const double cg4 = std::cos(tg.s4), sg4 = std::sin(tg.s4);
  const double cp1 = std::cos(s.psi), sp1 = std::sin(s.psi);
  const double cp2 = std::cos(p2), sp2 = std::sin(p2);
  const double cp3 = std::cos(p3), sp3 = std::sin(p3);
  const double cp4 = std::cos(p4), sp4 = std::sin(p4);

  const double kx1 = s.v * (cp1 * cg1);
  const double kx2 = tv.s2 * (cp2 * cg2);
  const double kx3 = tv.s3 * (cp3 * cg3);
  const double kx4 = tv.s4 * (cp4 * cg4);
  const double ky1 = s.v * (sp1 * cg1);
  const double ky2 = tv.s2 * (sp2 * cg2);
  const double ky3 = tv.s3 * (sp3 * cg3);
  const double ky4 = tv.s4 * (sp4 * cg4);
  const double kz1 = s.v * sg1;
  const double kz2 = tv.s2 * sg2;
  const double kz3 = tv.s3 * sg3;
  const double kz4 = tv.s4 * sg4;

  AircraftState out;
  out.x = detail::rk4_combine(s.x, dt, kx1, kx2, kx3, kx4);
  out.y = detail::rk4_combine(s.y, dt, ky1, ky2, ky3, ky4);
  out.z = detail::rk4_combine(s.z, dt, kz1, kz2, kz3, kz4);
  out.chi = wrap_angle(detail::rk4_combine(s.chi, dt, kc1, kc2, kc3, kc4));
  out.psi = wrap_angle(detail::rk4_combine(s.psi, dt, kc1, kc2, kc3, kc4));
  out.gamma = wrap_angle(tg.out);
  out.phi = wrap_angle(tp.out);
  out.v = tv.out;

  if (!state_is_finite(out))
    throw std::domain_error("integration produced non-finite state");
  return out;
}

// Airframe envelope used for command screening and audits.
struct PerformanceLimits {
  double v_min_kts = 47.0;
  double v_max_kts = 133.0;
  double course_rate_min_dps = -30.0;
  double course_rate_max_dps = 30.0;
  double phi_min_deg = -5.0;
  double phi_max_deg = 20.0;
  double gamma_min_deg = -20.0;
  double gamma_max_deg = 20.0;
};

enum class LimitKind { Speed, CourseRate, Roll, Path };

inline const char* to_string(LimitKind k) {
  switch (k) {
    case LimitKind::Speed: return "speed";
    case LimitKind::CourseRate: return "course_rate";
    case LimitKind::Roll: return "roll";
    case LimitKind::Path: return "path";
  }
  return "?";
}

struct LimitViolation {
  std::size_t index = 0;  // state index; course rate blames the later state
  LimitKind kind = LimitKind::Speed;
  double value = 0.0;  // in the limit's units (kts or deg or deg/s)
  double lo = 0.0;
  double hi = 0.0;
};

// Bounds are closed; a value is violating only when strictly outside.
inline bool state_within_limits(const AircraftState& s,
                                const PerformanceLimits& lim = {}) {
  const double v_kts = knots_from_mps(s.v);
  if (v_kts < lim.v_min_kts || v_kts > lim.v_max_kts) return false;
  const double phi_deg = rad2deg(s.phi);
  if (phi_deg < lim.phi_min_deg || phi_deg > lim.phi_max_deg) return false;
  const double gamma_deg = rad2deg(s.gamma);
  if (gamma_deg < lim.gamma_min_deg || gamma_deg > lim.gamma_max_deg)
    return false;
  return true;
}

inline double course_rate_dps(const AircraftState& prev,
                              const AircraftState& next, double dt) {
  return rad2deg(wrap_angle(next.chi - prev.chi)) / dt;
}

inline bool transition_within_limits(const AircraftState& prev,
                                     const AircraftState& next, double dt,
                                     const PerformanceLimits& lim = {}) {
  if (!state_within_limits(next, lim)) return false;
  const double r = course_rate_dps(prev, next, dt);
  return r >= lim.course_rate_min_dps && r <= lim.course_rate_max_dps;
}

// Audits a recorded trajectory against the envelope.  Course rate is
// finite-differenced between consecutive samples.
inline std::vector<LimitViolation> check_limits(
    const std::vector<AircraftState>& traj, double dt,
    const PerformanceLimits& lim = {}) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  std::vector<LimitViolation> out;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto& s = traj[i];
    const double v_kts = knots_from_mps(s.v);
    if (v_kts < lim.v_min_kts || v_kts > lim.v_max_kts)
      out.push_back({i, LimitKind::Speed, v_kts, lim.v_min_kts, lim.v_max_kts});
    const double phi_deg = rad2deg(s.phi);
    if (phi_deg < lim.phi_min_deg || phi_deg > lim.phi_max_deg)
      out.push_back({i, LimitKind::Roll, phi_deg, lim.phi_min_deg, lim.phi_max_deg});
    const double gamma_deg = rad2deg(s.gamma);
    if (gamma_deg < lim.gamma_min_deg || gamma_deg > lim.gamma_max_deg)
      out.push_back(
          {i, LimitKind::Path, gamma_deg, lim.gamma_min_deg, lim.gamma_max_deg});
    if (i > 0) {
      const double r = course_rate_dps(traj[i - 1], s, dt);
      if (r < lim.course_rate_min_dps || r > lim.course_rate_max_dps)
        out.push_back({i, LimitKind::CourseRate, r, lim.course_rate_min_dps,
                       lim.course_rate_max_dps});
    }
  }
  return out;
}

}  // namespace freeflight
