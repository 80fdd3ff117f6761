#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "freeflight/geometry.hpp"
#include "freeflight/vehicle.hpp"

namespace freeflight {

// Nominal command levels for flight path angle and roll, degrees.
// Levels bunch near zero so small corrections are available.
inline constexpr std::array<double, 15> kNominalAngleLevelsDeg = {
    -19.99, -16.24, -12.66, -9.26, -6.02, -2.94, -0.01, 0.0,
    0.01,   2.94,   6.02,   9.26,  12.66, 16.24, 19.99};

inline constexpr std::array<double, 10> kSpeedLevelsMps = {
    25.0, 30.0, 35.0, 40.0, 45.0, 50.0, 55.0, 60.0, 65.0, 70.0};

// Wider escape levels used only when the nominal set is fully blocked.
inline constexpr std::array<double, 10> kEmergencyAngleLevelsDeg = {
    -180.0, -139.5, -99.0, -58.5, -18.0, 18.0, 58.5, 99.0, 139.5, 180.0};

enum class ActionSetKind { Nominal, Emergency };

// Discrete command menu; the joint set is the cross product of the
// three axes.
struct ActionSet {
  ActionSetKind kind = ActionSetKind::Nominal;
  std::vector<double> gamma_levels_deg;
  std::vector<double> phi_levels_deg;
  std::vector<double> v_levels_mps;

  std::size_t joint_size() const {
    return gamma_levels_deg.size() * phi_levels_deg.size() * v_levels_mps.size();
  }
};

inline ActionSet nominal_actions() {
  ActionSet a;
  a.kind = ActionSetKind::Nominal;
  a.gamma_levels_deg.assign(kNominalAngleLevelsDeg.begin(),
                            kNominalAngleLevelsDeg.end());
  a.phi_levels_deg = a.gamma_levels_deg;
  a.v_levels_mps.assign(kSpeedLevelsMps.begin(), kSpeedLevelsMps.end());
  return a;
}

inline ActionSet emergency_actions() {
  ActionSet a;
  a.kind = ActionSetKind::Emergency;
  a.gamma_levels_deg.assign(kEmergencyAngleLevelsDeg.begin(),
                            kEmergencyAngleLevelsDeg.end());
  a.phi_levels_deg = a.gamma_levels_deg;
  a.v_levels_mps.assign(kSpeedLevelsMps.begin(), kSpeedLevelsMps.end());
  return a;
}

// Joint index layout: gamma outermost, then roll, speed innermost.
inline Command command_at(const ActionSet& a, std::size_t idx) {
  const std::size_t np = a.phi_levels_deg.size();
  const std::size_t nv = a.v_levels_mps.size();
  if (idx >= a.joint_size()) throw std::out_of_range("joint action index");
  const std::size_t iv = idx % nv;
  const std::size_t ip = (idx / nv) % np;
  const std::size_t ig = idx / (nv * np);
  return Command{deg2rad(a.gamma_levels_deg[ig]), deg2rad(a.phi_levels_deg[ip]),
                 a.v_levels_mps[iv]};
}

inline std::vector<Command> enumerate_commands(const ActionSet& a) {
  std::vector<Command> out;
  out.reserve(a.joint_size());
  for (double gd : a.gamma_levels_deg) {
    const double g = deg2rad(gd);
    for (double pd : a.phi_levels_deg) {
      const double p = deg2rad(pd);
      for (double v : a.v_levels_mps) out.push_back(Command{g, p, v});
    }
  }
  return out;
}

// The nominal angle levels follow a shifted geometric progression:
// level(k) = A * r^(k-1) - B for the positive half, mirrored for the
// negative half, with zero in the middle.  Constants fitted once;
// reproduces the table above to two decimals.
inline std::vector<double> geometric_angle_levels(
    std::size_t half = 7, double a = 57.90611183900862,
    double r = 1.0506572920175197, double b = 57.89887994217206) {
  std::vector<double> pos(half);
  for (std::size_t k = 0; k < half; ++k)
    pos[k] = a * std::pow(r, static_cast<double>(k)) - b;
  std::vector<double> out;
  out.reserve(2 * half + 1);
  for (std::size_t k = half; k-- > 0;) out.push_back(-pos[k]);
  out.push_back(0.0);
  for (double v : pos) out.push_back(v);
  return out;
}

}  // namespace freeflight
