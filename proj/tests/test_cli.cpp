#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const char* kBin = FREEFLIGHT_BIN;

struct CmdResult {
  int status = 0;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CmdResult run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path so = scratch / "stdout.txt";
  const fs::path se = scratch / "stderr.txt";
  const std::string cmd = std::string(kBin) + " " + args + " > " +
                          so.string() + " 2> " + se.string();
  CmdResult r;
  r.status = std::system(cmd.c_str());
  r.out = slurp(so);
  r.err = slurp(se);
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "ff_cli" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::vector<std::string> data_files(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto n = e.path().filename().string();
    if (n == "timing.json" || n == "stdout.txt" || n == "stderr.txt") continue;
    names.push_back(n);
  }
  std::sort(names.begin(), names.end());
  return names;
}

void check_identical(const fs::path& a, const fs::path& b,
                     const std::vector<std::string>& skip = {}) {
  auto na = data_files(a);
  auto nb = data_files(b);
  REQUIRE(na == nb);
  REQUIRE_FALSE(na.empty());
  for (const auto& n : na) {
    if (std::count(skip.begin(), skip.end(), n)) continue;
    INFO("file " << n);
    CHECK(slurp(a / n) == slurp(b / n));
  }
}

}  // namespace

TEST_CASE("a rerun with the same config and seed reproduces every data file",
          "[cli][slow]") {
  const auto d1 = fresh_dir("rerun_a");
  const auto d2 = fresh_dir("rerun_b");
  REQUIRE(run_cli("run --seed 404 --out " + d1.string(), d1).status == 0);
  REQUIRE(run_cli("run --seed 404 --out " + d2.string(), d2).status == 0);
  check_identical(d1, d2);
}

TEST_CASE("data files do not depend on the worker count", "[cli][slow]") {
  const auto d1 = fresh_dir("workers_1");
  const auto d2 = fresh_dir("workers_2");
  REQUIRE(run_cli("run --seed 405 --workers 1 --out " + d1.string(), d1)
              .status == 0);
  REQUIRE(run_cli("run --seed 405 --workers 3 --out " + d2.string(), d2)
              .status == 0);
  // The config echo records the differing workers setting by design.
  check_identical(d1, d2, {"config.json"});
}

TEST_CASE("the echoed config reproduces the run that wrote it",
          "[cli][slow]") {
  const auto d1 = fresh_dir("echo_a");
  const auto d2 = fresh_dir("echo_b");
  REQUIRE(run_cli("run --seed 406 --mode shield --out " + d1.string(), d1)
              .status == 0);
  REQUIRE(run_cli("run --config " + (d1 / "config.json").string() + " --out " +
                      d2.string(),
                  d2)
              .status == 0);
  check_identical(d1, d2);
}

TEST_CASE("an eight aircraft baseline run lands everyone without a near miss",
          "[cli][slow]") {
  const auto d = fresh_dir("eight");
  const auto r = run_cli("run --out " + d.string(), d);
  REQUIRE(r.status == 0);
  const auto summary = nlohmann::json::parse(slurp(d / "summary.json"));
  CHECK(summary.at("aircraft") == 8);
  CHECK(summary.at("mode") == "baseline");
  CHECK(summary.at("nmac_events") == 0);
  CHECK(summary.at("all_arrived") == true);
  CHECK(summary.at("tube_incursions") == 0);

  // Trajectory rows: spawn plus one row per flown step, per aircraft.
  const auto traj = slurp(d / "trajectory.csv");
  std::size_t rows = std::count(traj.begin(), traj.end(), '\n');
  std::size_t expected = 1;  // header
  for (const auto& s : summary.at("arrival_steps"))
    expected += static_cast<std::size_t>(s.get<int>()) + 1;
  CHECK(rows == expected);
}

TEST_CASE("a missing config file fails cleanly", "[cli]") {
  const auto d = fresh_dir("missing");
  const auto r =
      run_cli("run --config " + (d / "nope.json").string() + " --out " +
                  d.string(),
              d);
  CHECK(r.status != 0);
  CHECK(r.err.find("config not found") != std::string::npos);
}

TEST_CASE("a misspelled config key fails cleanly", "[cli]") {
  const auto d = fresh_dir("typo");
  std::ofstream(d / "cfg.json") << "{\"aircrafts\": 4}\n";
  const auto r = run_cli("run --config " + (d / "cfg.json").string() +
                             " --out " + d.string(),
                         d);
  CHECK(r.status != 0);
  CHECK(r.err.find("unknown config key") != std::string::npos);
}

TEST_CASE("reach writes one row per slice and passes its own audit",
          "[cli]") {
  const auto d = fresh_dir("reach");
  const auto r = run_cli("reach --seed 77 --out " + d.string(), d);
  REQUIRE(r.status == 0);
  // Default horizon 10 s at dt 1 -> 11 slices, plus the CSV header.
  for (const char* name :
       {"bounds.csv", "proj_xy.csv", "proj_xz.csv", "proj_yz.csv"}) {
    const auto text = slurp(d / name);
    INFO("file " << name);
    CHECK(std::count(text.begin(), text.end(), '\n') == 12);
  }
  const auto frac_at = r.out.find("fresh_containment=");
  REQUIRE(frac_at != std::string::npos);
  CHECK(std::stod(r.out.substr(frac_at + 18)) >= 0.95);
}

TEST_CASE("reach refuses an empty initial set", "[cli]") {
  const auto d = fresh_dir("reach_r0");
  std::ofstream(d / "cfg.json") << "{\"reach\": {\"initial_radius\": 0}}\n";
  const auto r = run_cli("reach --config " + (d / "cfg.json").string() +
                             " --out " + d.string(),
                         d);
  CHECK(r.status != 0);
  CHECK(r.err.find("initial_radius must be > 0") != std::string::npos);
}

TEST_CASE("a small experiment grid emits paired per-seed rows",
          "[cli][slow]") {
  const auto d = fresh_dir("grid");
  std::ofstream(d / "cfg.json")
      << "{\"counts\": [2, 4], \"repetitions\": 2, \"seed\": 314,\n"
         " \"modes\": [\"baseline\", \"shield\", \"shaping\"]}\n";
  const auto r = run_cli("experiment --config " + (d / "cfg.json").string() +
                             " --out " + d.string(),
                         d);
  REQUIRE(r.status == 0);

  const auto report = nlohmann::json::parse(slurp(d / "report.json"));
  REQUIRE(report.at("cells").size() == 6);  // 2 counts x 3 modes
  // Paired seeds: within a count, every mode saw the same scenarios.
  for (int count : {2, 4}) {
    std::vector<nlohmann::json> seeds;
    for (const auto& cell : report.at("cells"))
      if (cell.at("aircraft") == count) seeds.push_back(cell.at("seeds"));
    REQUIRE(seeds.size() == 3);
    CHECK(seeds[0] == seeds[1]);
    CHECK(seeds[0] == seeds[2]);
  }

  const auto episodes = slurp(d / "episodes.csv");
  CHECK(std::count(episodes.begin(), episodes.end(), '\n') == 13);
  const auto pairs = slurp(d / "pairs.csv");
  CHECK(std::count(pairs.begin(), pairs.end(), '\n') == 13);
  // Baseline's delta against itself is zero on every row.
  std::istringstream in(pairs);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line))
    if (line.find("baseline") != std::string::npos)
      CHECK(line.substr(line.rfind(',') + 1) == "0");
}
