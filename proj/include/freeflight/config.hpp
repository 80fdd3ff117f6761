#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "freeflight/sim.hpp"

namespace freeflight {

// Everything a command needs to be reproduced: scenario shape, vehicle
// and limit constants, reach sampling, rewards, and the experiment
// grid.  Unset file keys keep these defaults; the resolved form is
// echoed next to the outputs so a run can be replayed from them alone.
struct RunConfig {
  int aircraft = 8;
  std::uint64_t seed = 20260823;
  SafetyMode mode = SafetyMode::Baseline;
  int repetitions = 25;
  std::vector<int> counts = {2, 4, 8, 16, 32};
  std::vector<SafetyMode> modes = {SafetyMode::Baseline, SafetyMode::Shield,
                                   SafetyMode::Shaping};
  AircraftState reach_state{0.0, 0.0, 1500.0, 0.0, 0.0, 0.0, 0.0, 50.0};
  SimConfig sim{};
};

namespace detail {

inline void merge_field(const nlohmann::json& j, const char* key, double& out) {
  if (j.contains(key)) out = j.at(key).get<double>();
}
inline void merge_field(const nlohmann::json& j, const char* key, int& out) {
  if (j.contains(key)) out = j.at(key).get<int>();
}
inline void merge_field(const nlohmann::json& j, const char* key,
                        std::uint64_t& out) {
  if (j.contains(key)) out = j.at(key).get<std::uint64_t>();
}

template <class Fn>
void merge_section(const nlohmann::json& j, const char* key, Fn&& fn) {
  if (!j.contains(key)) return;
  const auto& sec = j.at(key);
  if (!sec.is_object())
    throw std::invalid_argument(std::string("config section '") + key +
                               "' must be an object");
  fn(sec);
}

inline void reject_unknown(const nlohmann::json& j,
                           std::initializer_list<const char*> known,
                           const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::invalid_argument("unknown config key '" + where + key + "'");
  }
}

}  // namespace detail

inline void apply_overlay(RunConfig& c, const nlohmann::json& j) {
  using detail::merge_field;
  detail::reject_unknown(j,
                         {"aircraft", "seed", "mode", "repetitions", "counts",
                          "modes", "arena", "sim", "vehicle", "limits", "reach",
                          "reach_state", "rewards"},
                         "");
  merge_field(j, "aircraft", c.aircraft);
  merge_field(j, "seed", c.seed);
  merge_field(j, "repetitions", c.repetitions);
  if (j.contains("mode")) c.mode = parse_safety_mode(j.at("mode"));
  if (j.contains("counts")) c.counts = j.at("counts").get<std::vector<int>>();
  if (j.contains("modes")) {
    c.modes.clear();
    for (const auto& m : j.at("modes"))
      c.modes.push_back(parse_safety_mode(m));
  }
  detail::merge_section(j, "arena", [&](const nlohmann::json& s) {
    detail::reject_unknown(
        s, {"radius", "cruise_altitude", "spawn_speed", "min_azimuth_gap_deg"},
        "arena.");
    merge_field(s, "radius", c.sim.radius);
    merge_field(s, "cruise_altitude", c.sim.cruise_altitude);
    merge_field(s, "spawn_speed", c.sim.spawn_speed);
    if (s.contains("min_azimuth_gap_deg"))
      c.sim.min_azimuth_gap = deg2rad(s.at("min_azimuth_gap_deg").get<double>());
  });
  detail::merge_section(j, "sim", [&](const nlohmann::json& s) {
    detail::reject_unknown(
        s, {"dt", "max_steps", "proximity_radius", "workers"}, "sim.");
    merge_field(s, "dt", c.sim.dt);
    merge_field(s, "max_steps", c.sim.max_steps);
    merge_field(s, "proximity_radius", c.sim.proximity_radius);
    merge_field(s, "workers", c.sim.workers);
  });
  detail::merge_section(j, "vehicle", [&](const nlohmann::json& s) {
    detail::reject_unknown(s, {"b_gamma", "b_v", "b_phi", "g"}, "vehicle.");
    merge_field(s, "b_gamma", c.sim.vehicle.b_gamma);
    merge_field(s, "b_v", c.sim.vehicle.b_v);
    merge_field(s, "b_phi", c.sim.vehicle.b_phi);
    merge_field(s, "g", c.sim.vehicle.g);
  });
  detail::merge_section(j, "limits", [&](const nlohmann::json& s) {
    detail::reject_unknown(s,
                           {"v_min_kts", "v_max_kts", "course_rate_min_dps",
                            "course_rate_max_dps", "phi_min_deg", "phi_max_deg",
                            "gamma_min_deg", "gamma_max_deg"},
                           "limits.");
    merge_field(s, "v_min_kts", c.sim.limits.v_min_kts);
    merge_field(s, "v_max_kts", c.sim.limits.v_max_kts);
    merge_field(s, "course_rate_min_dps", c.sim.limits.course_rate_min_dps);
    merge_field(s, "course_rate_max_dps", c.sim.limits.course_rate_max_dps);
    merge_field(s, "phi_min_deg", c.sim.limits.phi_min_deg);
    merge_field(s, "phi_max_deg", c.sim.limits.phi_max_deg);
    merge_field(s, "gamma_min_deg", c.sim.limits.gamma_min_deg);
    merge_field(s, "gamma_max_deg", c.sim.limits.gamma_max_deg);
  });
  detail::merge_section(j, "reach", [&](const nlohmann::json& s) {
    detail::reject_unknown(
        s, {"sample_count", "segment_count", "initial_radius", "horizon"},
        "reach.");
    merge_field(s, "sample_count", c.sim.reach.sample_count);
    merge_field(s, "segment_count", c.sim.reach.segment_count);
    merge_field(s, "initial_radius", c.sim.reach.initial_radius);
    merge_field(s, "horizon", c.sim.reach.horizon);
  });
  detail::merge_section(j, "reach_state", [&](const nlohmann::json& s) {
    detail::reject_unknown(s, {"x", "y", "z", "psi_deg", "gamma_deg",
                               "phi_deg", "v"},
                           "reach_state.");
    merge_field(s, "x", c.reach_state.x);
    merge_field(s, "y", c.reach_state.y);
    merge_field(s, "z", c.reach_state.z);
    if (s.contains("psi_deg")) {
      c.reach_state.psi = deg2rad(s.at("psi_deg").get<double>());
      c.reach_state.chi = c.reach_state.psi;
    }
    if (s.contains("gamma_deg"))
      c.reach_state.gamma = deg2rad(s.at("gamma_deg").get<double>());
    if (s.contains("phi_deg"))
      c.reach_state.phi = deg2rad(s.at("phi_deg").get<double>());
    merge_field(s, "v", c.reach_state.v);
  });
  detail::merge_section(j, "rewards", [&](const nlohmann::json& s) {
    detail::reject_unknown(s,
                           {"destination_magnitude", "destination_decay",
                            "intruder_base", "intruder_per_second",
                            "intruder_decay", "intruder_pad_horizontal",
                            "intruder_pad_vertical", "penalty_altitude",
                            "arrival_radius", "shaping_kappa"},
                           "rewards.");
    auto& r = c.sim.rewards;
    merge_field(s, "destination_magnitude", r.destination_magnitude);
    merge_field(s, "destination_decay", r.destination_decay);
    merge_field(s, "intruder_base", r.intruder.base);
    merge_field(s, "intruder_per_second", r.intruder.per_second);
    merge_field(s, "intruder_decay", r.intruder.decay);
    merge_field(s, "intruder_pad_horizontal", r.intruder.pad_horizontal);
    merge_field(s, "intruder_pad_vertical", r.intruder.pad_vertical);
    merge_field(s, "penalty_altitude", r.penalty_altitude);
    merge_field(s, "arrival_radius", r.arrival_radius);
    merge_field(s, "shaping_kappa", r.shaping_kappa);
  });
}

// Fully resolved view; nlohmann objects keep keys sorted, so the echo
// is stable byte for byte.
inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["aircraft"] = c.aircraft;
  j["seed"] = c.seed;
  j["mode"] = to_string(c.mode);
  j["repetitions"] = c.repetitions;
  j["counts"] = c.counts;
  {
    nlohmann::json m = nlohmann::json::array();
    for (auto mode : c.modes) m.push_back(to_string(mode));
    j["modes"] = m;
  }
  j["arena"] = {{"radius", c.sim.radius},
                {"cruise_altitude", c.sim.cruise_altitude},
                {"spawn_speed", c.sim.spawn_speed},
                {"min_azimuth_gap_deg", rad2deg(c.sim.min_azimuth_gap)}};
  j["sim"] = {{"dt", c.sim.dt},
              {"max_steps", c.sim.max_steps},
              {"proximity_radius", c.sim.proximity_radius},
              {"workers", c.sim.workers}};
  j["vehicle"] = {{"b_gamma", c.sim.vehicle.b_gamma},
                  {"b_v", c.sim.vehicle.b_v},
                  {"b_phi", c.sim.vehicle.b_phi},
                  {"g", c.sim.vehicle.g}};
  j["limits"] = {{"v_min_kts", c.sim.limits.v_min_kts},
                 {"v_max_kts", c.sim.limits.v_max_kts},
                 {"course_rate_min_dps", c.sim.limits.course_rate_min_dps},
                 {"course_rate_max_dps", c.sim.limits.course_rate_max_dps},
                 {"phi_min_deg", c.sim.limits.phi_min_deg},
                 {"phi_max_deg", c.sim.limits.phi_max_deg},
                 {"gamma_min_deg", c.sim.limits.gamma_min_deg},
                 {"gamma_max_deg", c.sim.limits.gamma_max_deg}};
  j["reach"] = {{"sample_count", c.sim.reach.sample_count},
                {"segment_count", c.sim.reach.segment_count},
                {"initial_radius", c.sim.reach.initial_radius},
                {"horizon", c.sim.reach.horizon}};
  j["reach_state"] = {{"x", c.reach_state.x},
                      {"y", c.reach_state.y},
                      {"z", c.reach_state.z},
                      {"psi_deg", rad2deg(c.reach_state.psi)},
                      {"gamma_deg", rad2deg(c.reach_state.gamma)},
                      {"phi_deg", rad2deg(c.reach_state.phi)},
                      {"v", c.reach_state.v}};
  const auto& r = c.sim.rewards;
  j["rewards"] = {{"destination_magnitude", r.destination_magnitude},
                  {"destination_decay", r.destination_decay},
                  {"intruder_base", r.intruder.base},
                  {"intruder_per_second", r.intruder.per_second},
                  {"intruder_decay", r.intruder.decay},
                  {"intruder_pad_horizontal", r.intruder.pad_horizontal},
                  {"intruder_pad_vertical", r.intruder.pad_vertical},
                  {"penalty_altitude", r.penalty_altitude},
                  {"arrival_radius", r.arrival_radius},
                  {"shaping_kappa", r.shaping_kappa}};
  return j;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config not found: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config parse error in " + path + ": " +
                             e.what());
  }
  RunConfig c;
  apply_overlay(c, j);
  return c;
}

}  // namespace freeflight
