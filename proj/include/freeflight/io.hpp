#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "freeflight/config.hpp"
#include "freeflight/sim.hpp"

namespace freeflight {

// Shortest round-trip decimal form, locale independent, so equal
// inputs always produce byte-equal files.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("number format failure");
  return std::string(buf, ptr);
}

namespace detail {

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path.string());
  }
  CsvWriter& field(const std::string& s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }
  CsvWriter& field(double v) { return field(format_double(v)); }
  CsvWriter& field(int v) { return field(std::to_string(v)); }
  CsvWriter& field(std::uint64_t v) { return field(std::to_string(v)); }
  void endrow() {
    out_ << '\n';
    first_ = true;
  }

 private:
  std::ofstream out_;
  bool first_ = true;
};

}  // namespace detail

inline void write_text(const std::filesystem::path& path,
                       const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << text;
}

inline void write_json(const std::filesystem::path& path,
                       const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

inline void write_trajectories(const std::filesystem::path& path,
                               const EpisodeResult& ep, double dt) {
  detail::CsvWriter w(path);
  w.field("aircraft").field("step").field("t").field("x").field("y").field("z")
      .field("psi").field("gamma").field("chi").field("phi").field("v");
  w.endrow();
  for (std::size_t i = 0; i < ep.trajectories.size(); ++i)
    for (std::size_t k = 0; k < ep.trajectories[i].size(); ++k) {
      const auto& s = ep.trajectories[i][k];
      w.field(static_cast<int>(i)).field(static_cast<int>(k));
      w.field(static_cast<double>(k) * dt);
      w.field(s.x).field(s.y).field(s.z);
      w.field(s.psi).field(s.gamma).field(s.chi).field(s.phi).field(s.v);
      w.endrow();
    }
}

// One stream for everything episodic: near misses, emergency escapes,
// arrivals, and non-arrivals.  Unused columns stay empty.
inline void write_events(const std::filesystem::path& path,
                         const EpisodeResult& ep,
                         const std::vector<DecisionRecord>& decisions) {
  detail::CsvWriter w(path);
  w.field("kind").field("step").field("aircraft").field("other");
  w.endrow();
  for (const auto& e : ep.nmac_events) {
    w.field("nmac").field(e.step).field(e.a).field(e.b);
    w.endrow();
  }
  for (const auto& d : decisions)
    if (d.deadlock) {
      w.field("deadlock").field(d.step).field(d.aircraft).field("");
      w.endrow();
    }
  for (std::size_t i = 0; i < ep.arrival_steps.size(); ++i) {
    if (ep.arrival_steps[i] >= 0)
      w.field("arrival").field(ep.arrival_steps[i]);
    else
      w.field("not_arrived").field("");
    w.field(static_cast<int>(i)).field("");
    w.endrow();
  }
}

inline void write_decisions(const std::filesystem::path& path,
                            const std::vector<DecisionRecord>& decisions) {
  detail::CsvWriter w(path);
  w.field("aircraft").field("step").field("gamma_c").field("phi_c")
      .field("v_c").field("v_plus").field("v_minus").field("v_terrain")
      .field("total").field("deadlock").field("exempt").field("in_tube");
  w.endrow();
  for (const auto& d : decisions) {
    w.field(d.aircraft).field(d.step);
    w.field(d.cmd.gamma_c).field(d.cmd.phi_c).field(d.cmd.v_c);
    w.field(d.value.v_plus).field(d.value.v_minus).field(d.value.v_terrain);
    w.field(d.value.total);
    w.field(int(d.deadlock)).field(int(d.exempt)).field(int(d.in_tube));
    w.endrow();
  }
}

inline nlohmann::json episode_summary(const EpisodeResult& ep,
                                      SafetyMode mode) {
  nlohmann::json j;
  j["mode"] = to_string(mode);
  j["nmac_events"] = ep.nmac_events.size();
  j["nmac_step_pairs"] = ep.nmac_step_pairs;
  {
    nlohmann::json evs = nlohmann::json::array();
    for (const auto& e : ep.nmac_events)
      evs.push_back({{"step", e.step}, {"a", e.a}, {"b", e.b}});
    j["nmac_list"] = evs;
  }
  j["deadlocks"] = ep.deadlock_count;
  j["deadlock_steps"] = ep.deadlock_steps;
  j["exempt_steps"] = ep.exempt_steps;
  j["exempt_unflagged"] = ep.exempt_unflagged;
  j["limit_violations"] = ep.nonexempt_limit_violations;
  j["tube_incursions"] = ep.tube_incursions;
  j["all_arrived"] = ep.all_arrived;
  j["arrival_steps"] = ep.arrival_steps;
  return j;
}

// Wall-clock facts live apart from the data files: they are real
// results but never reproducible, so the determinism contract skips
// exactly one file.
inline nlohmann::json episode_timing(const EpisodeResult& ep) {
  nlohmann::json j;
  j["throughput_seconds"] = ep.throughput_seconds;
  j["tube_build_seconds"] = ep.tube_build_seconds;
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& per_ac : ep.plan_times) {
    for (double t : per_ac) total += t;
    n += per_ac.size();
  }
  j["plan_seconds_total"] = total;
  j["decisions"] = n;
  j["plan_seconds_mean"] = n ? total / static_cast<double>(n) : 0.0;
  return j;
}

inline nlohmann::json report_json(const ExperimentReport& rep) {
  nlohmann::json j;
  j["base_seed"] = rep.base_seed;
  j["repetitions"] = rep.repetitions;
  // A single repetition makes every std column zero by construction.
  j["single_repetition"] = rep.repetitions == 1;
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : rep.cells) {
    nlohmann::json cj;
    cj["aircraft"] = c.aircraft;
    cj["mode"] = to_string(c.mode);
    cj["repetitions"] = c.repetitions;
    cj["nmac_mean"] = c.nmac_mean;
    cj["nmac_std"] = c.nmac_std;
    cj["nmac_steps_mean"] = c.nmac_steps_mean;
    cj["deadlocks"] = c.deadlock_total;
    cj["episodes_not_arrived"] = c.episodes_not_arrived;
    cj["tube_incursions"] = c.tube_incursions;
    cj["exempt_unflagged"] = c.exempt_unflagged;
    cj["limit_violations"] = c.nonexempt_limit_violations;
    cj["nmac_per_rep"] = c.nmac_per_rep;
    cj["seeds"] = c.seeds;
    cells.push_back(cj);
  }
  j["cells"] = cells;
  return j;
}

inline nlohmann::json report_timing(const ExperimentReport& rep) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : rep.cells)
    cells.push_back({{"aircraft", c.aircraft},
                     {"mode", to_string(c.mode)},
                     {"plan_time_mean", c.plan_time_mean},
                     {"plan_time_std", c.plan_time_std},
                     {"throughput_mean", c.throughput_mean}});
  return nlohmann::json{{"cells", cells}};
}

inline void write_comparison(const std::filesystem::path& path,
                             const ExperimentReport& rep) {
  detail::CsvWriter w(path);
  w.field("aircraft").field("mode").field("nmac_mean").field("nmac_std")
      .field("nmac_steps_mean").field("deadlocks").field("not_arrived");
  w.endrow();
  for (const auto& c : rep.cells) {
    w.field(c.aircraft).field(to_string(c.mode));
    w.field(c.nmac_mean).field(c.nmac_std).field(c.nmac_steps_mean);
    w.field(c.deadlock_total).field(c.episodes_not_arrived);
    w.endrow();
  }
}

inline void write_episodes(const std::filesystem::path& path,
                           const ExperimentReport& rep) {
  detail::CsvWriter w(path);
  w.field("aircraft").field("mode").field("rep").field("seed").field("nmac");
  w.endrow();
  for (const auto& c : rep.cells)
    for (std::size_t r = 0; r < c.nmac_per_rep.size(); ++r) {
      w.field(c.aircraft).field(to_string(c.mode)).field(static_cast<int>(r));
      w.field(c.seeds[r]).field(c.nmac_per_rep[r]);
      w.endrow();
    }
}

// Per-seed deltas against the baseline column; computable from
// episodes.csv too, emitted ready-made for plotting.
inline void write_pairs(const std::filesystem::path& path,
                        const ExperimentReport& rep) {
  detail::CsvWriter w(path);
  w.field("aircraft").field("rep").field("seed").field("mode")
      .field("nmac").field("delta_vs_baseline");
  w.endrow();
  for (const auto& c : rep.cells) {
    const ExperimentCell* base = nullptr;
    for (const auto& b : rep.cells)
      if (b.aircraft == c.aircraft && b.mode == SafetyMode::Baseline)
        base = &b;
    for (std::size_t r = 0; r < c.nmac_per_rep.size(); ++r) {
      w.field(c.aircraft).field(static_cast<int>(r)).field(c.seeds[r]);
      w.field(to_string(c.mode)).field(c.nmac_per_rep[r]);
      if (base && r < base->nmac_per_rep.size())
        w.field(c.nmac_per_rep[r] - base->nmac_per_rep[r]);
      else
        w.field("");
      w.endrow();
    }
  }
}

inline void write_tube_bounds(const std::filesystem::path& dir,
                              const ReachTube& t) {
  {
    detail::CsvWriter w(dir / "bounds.csv");
    w.field("t").field("x_min").field("x_max").field("y_min").field("y_max")
        .field("z_min").field("z_max").field("radius");
    w.endrow();
    for (std::size_t k = 0; k < t.times.size(); ++k) {
      const auto& c = t.centers[k];
      const double r = t.radii[k];
      w.field(t.times[k]);
      w.field(c.x - r).field(c.x + r);
      w.field(c.y - r).field(c.y + r);
      w.field(c.z - r).field(c.z + r);
      w.field(r);
      w.endrow();
    }
  }
  const struct {
    const char* name;
    double Vec3::*u;
    double Vec3::*v;
    const char* cu;
    const char* cv;
  } planes[] = {{"proj_xy.csv", &Vec3::x, &Vec3::y, "x", "y"},
                {"proj_xz.csv", &Vec3::x, &Vec3::z, "x", "z"},
                {"proj_yz.csv", &Vec3::y, &Vec3::z, "y", "z"}};
  for (const auto& p : planes) {
    detail::CsvWriter w(dir / p.name);
    w.field("t").field(p.cu).field(p.cv).field("radius");
    w.endrow();
    for (std::size_t k = 0; k < t.times.size(); ++k) {
      w.field(t.times[k]);
      w.field(t.centers[k].*p.u).field(t.centers[k].*p.v).field(t.radii[k]);
      w.endrow();
    }
  }
}

}  // namespace freeflight
