#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace freeflight {

enum class SafetyMode { Baseline, Shield, Shaping };

inline const char* to_string(SafetyMode m) {
  switch (m) {
    case SafetyMode::Baseline: return "baseline";
    case SafetyMode::Shield: return "shield";
    case SafetyMode::Shaping: return "shaping";
  }
  return "?";
}

inline SafetyMode parse_safety_mode(const std::string& s) {
  if (s == "baseline") return SafetyMode::Baseline;
  if (s == "shield") return SafetyMode::Shield;
  if (s == "shaping") return SafetyMode::Shaping;
  throw std::invalid_argument("unknown safety mode: " + s);
}

struct ShapingConfig {
  double kappa = 0.97;
};

// Drops every candidate whose total value is strictly negative.  An
// empty result signals a deadlock to the caller.  Works on any
// candidate type carrying a ValueBreakdown member named `value`.
template <class Candidate>
std::vector<Candidate> shield_filter(const std::vector<Candidate>& candidates) {
  std::vector<Candidate> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates)
    if (!(c.value.total < 0.0)) out.push_back(c);
  return out;
}

// Potential difference F = kappa * v_next - v_current.  Ranking
// candidates by v_next + F with a shared v_current orders them exactly
// like (1 + kappa) * v_next, so on its own the bonus never changes a
// single argmax; it matters through the reward it is added to.
inline double shaping_bonus(double v_current, double v_next, double kappa) {
  if (!(kappa > 0.0) || kappa > 1.0)
    throw std::invalid_argument("shaping kappa must lie in (0, 1]");
  return kappa * v_next - v_current;
}

}  // namespace freeflight
