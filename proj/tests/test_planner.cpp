#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "freeflight/planner.hpp"
#include "freeflight/reachability.hpp"
#include "freeflight/rng.hpp"

using namespace freeflight;
using Catch::Matchers::WithinAbs;

namespace {

AircraftState mk(double x, double y, double z, double heading, double v,
                 double gamma = 0.0, double phi = 0.0) {
  AircraftState s;
  s.x = x;
  s.y = y;
  s.z = z;
  s.psi = heading;
  s.chi = heading;
  s.gamma = gamma;
  s.phi = phi;
  s.v = v;
  return s;
}

ReachTube make_tube(std::vector<double> times, std::vector<Vec3> centers,
                    std::vector<double> radii) {
  ReachTube t;
  t.times = std::move(times);
  t.centers = std::move(centers);
  t.radii = std::move(radii);
  t.aabb_min = t.centers[0];
  t.aabb_max = t.centers[0];
  for (std::size_t k = 0; k < t.centers.size(); ++k) {
    const auto& c = t.centers[k];
    const double r = t.radii[k];
    t.aabb_min.x = std::min(t.aabb_min.x, c.x - r);
    t.aabb_min.y = std::min(t.aabb_min.y, c.y - r);
    t.aabb_min.z = std::min(t.aabb_min.z, c.z - r);
    t.aabb_max.x = std::max(t.aabb_max.x, c.x + r);
    t.aabb_max.y = std::max(t.aabb_max.y, c.y + r);
    t.aabb_max.z = std::max(t.aabb_max.z, c.z + r);
  }
  return t;
}

bool same_state(const AircraftState& a, const AircraftState& b) {
  return a.x == b.x && a.y == b.y && a.z == b.z && a.psi == b.psi &&
         a.gamma == b.gamma && a.chi == b.chi && a.phi == b.phi && a.v == b.v;
}

}  // namespace

TEST_CASE("destination peak decays per meter", "[planner]") {
  const auto dest = make_destination_source({0.0, 0.0, 1500.0});
  CHECK(peak_value(mk(0.0, 0.0, 1500.0, 0.0, 50.0), dest) == 200.0);
  CHECK_THAT(peak_value(mk(1000.0, 0.0, 1500.0, 0.0, 50.0), dest),
             WithinAbs(73.53908495419275, 1e-9));
  // Sign of the magnitude does not flip the felt value.
  RewardSource neg{{0.0, 0.0, 1500.0}, -500.0, 0.97, SourceKind::Intruder};
  CHECK(peak_value(mk(0.0, 0.0, 1500.0, 0.0, 50.0), neg) == 500.0);
}

TEST_CASE("terrain penalty is linear below the threshold", "[planner]") {
  CHECK(terrain_penalty(mk(0, 0, 1500.0, 0, 50)) == 0.0);
  CHECK(terrain_penalty(mk(0, 0, 400.0, 0, 50)) == 600.0);
  CHECK(terrain_penalty(mk(0, 0, 1000.0, 0, 50)) == 0.0);
  CHECK(terrain_penalty(mk(0, 0, 999.0, 0, 50)) == 1.0);
}

TEST_CASE("state value without traffic is destination minus terrain",
          "[planner]") {
  const auto dest = make_destination_source({500.0, 0.0, 2000.0});
  const auto s = mk(0.0, 0.0, 2000.0, 0.0, 50.0);
  const auto v = evaluate_state(s, 1.0, dest, {});
  CHECK(v.v_minus == 0.0);
  CHECK(v.v_terrain == 0.0);
  CHECK_THAT(v.v_plus, WithinAbs(200.0 * std::pow(0.999, 500.0), 1e-12));
  CHECK(v.total == v.v_plus);
}

TEST_CASE("tube slice at the future position charges its full peak",
          "[planner]") {
  // Slice centers 1 km apart so only the t = 1 slice contains the state.
  auto tube = make_tube({0.0, 1.0},
                        {{-1000.0, 0.0, 2000.0}, {60.0, 0.0, 2000.0}},
                        {10.0, 10.0});
  const auto tubes = std::vector<const ReachTube*>{&tube};
  const auto dest = make_destination_source({10000.0, 0.0, 2000.0});
  const auto s = mk(60.0, 0.0, 2000.0, 0.0, 50.0);
  const auto v = evaluate_state(s, 1.0, dest, tubes);
  CHECK(v.v_minus == 600.0);  // 500 + 100 * 1 at zero distance
  CHECK_THAT(v.total, WithinAbs(v.v_plus - 600.0, 1e-12));
}

TEST_CASE("overlapping tubes charge the worst peak, not the sum",
          "[planner]") {
  // Both slices sit dead on the state's track at their own times.
  auto a = make_tube({1.0}, {{0.0, 0.0, 2000.0}}, {50.0});
  auto b = make_tube({2.0}, {{50.0, 0.0, 2000.0}}, {50.0});
  const auto tubes = std::vector<const ReachTube*>{&a, &b};
  const auto dest = make_destination_source({10000.0, 0.0, 2000.0});
  const auto v =
      evaluate_state(mk(0.0, 0.0, 2000.0, 0.0, 50.0), 1.0, dest, tubes);
  CHECK(v.v_minus == 700.0);  // the t = 2 slice wins
}

TEST_CASE("slice rewards decay with distance from the center", "[planner]") {
  auto tube = make_tube({1.0}, {{0.0, 0.0, 2000.0}}, {100.0});
  const auto tubes = std::vector<const ReachTube*>{&tube};
  const auto dest = make_destination_source({10000.0, 0.0, 2000.0});
  const auto v =
      evaluate_state(mk(80.0, 0.0, 2000.0, 0.0, 50.0), 1.0, dest, tubes);
  CHECK_THAT(v.v_minus, WithinAbs(600.0 * std::pow(0.97, 80.0), 1e-9));
  // Beyond radius plus horizontal pad: no charge at all.
  const auto w =
      evaluate_state(mk(260.0, 0.0, 2000.0, 0.0, 50.0), 1.0, dest, tubes);
  CHECK(w.v_minus == 0.0);
}

TEST_CASE("a course meeting the corridor downstream is charged early",
          "[planner]") {
  // One slice at t = 5, parked where the straight 50 m/s track will be
  // around t = 5.  The state is still 250 m short of it.
  auto tube = make_tube({5.0}, {{250.0, 0.0, 2000.0}}, {60.0});
  const auto tubes = std::vector<const ReachTube*>{&tube};
  const auto dest = make_destination_source({10000.0, 0.0, 2000.0});
  const auto hot = evaluate_state(mk(0.0, 0.0, 2000.0, 0.0, 50.0), 1.0, dest,
                                  tubes);
  // Extrapolated to t = 5 the state sits 50 m from the slice center.
  CHECK_THAT(hot.v_minus, WithinAbs(1000.0 * std::pow(0.97, 50.0), 1e-9));
  // Slowing down falls behind: a bigger predicted miss, smaller charge.
  const auto slow = evaluate_state(mk(0.0, 0.0, 2000.0, 0.0, 30.0), 1.0, dest,
                                   tubes);
  CHECK_THAT(slow.v_minus, WithinAbs(1000.0 * std::pow(0.97, 130.0), 1e-9));
  CHECK(slow.v_minus < hot.v_minus);
  // Heading away never meets it at all.
  const auto away = evaluate_state(mk(0.0, 0.0, 2000.0, kPi, 50.0), 1.0, dest,
                                   tubes);
  CHECK(away.v_minus == 0.0);
}

TEST_CASE("the protected zone widens every slice", "[planner]") {
  // The straight track passes 100 m abeam of the slice at its time:
  // outside the 60 m slice itself, inside the padded one.
  auto tube = make_tube({5.0}, {{250.0, 100.0, 2000.0}}, {60.0});
  const auto tubes = std::vector<const ReachTube*>{&tube};
  const auto dest = make_destination_source({10000.0, 0.0, 2000.0});
  const auto s = mk(0.0, 0.0, 2000.0, 0.0, 50.0);
  const auto padded = evaluate_state(s, 1.0, dest, tubes);
  CHECK_THAT(padded.v_minus,
             WithinAbs(1000.0 * std::pow(0.97, std::sqrt(50.0 * 50.0 +
                                                         100.0 * 100.0)),
                       1e-9));
  IntruderRewardModel bare;
  bare.pad_horizontal = 0.0;
  bare.pad_vertical = 0.0;
  const auto exact = evaluate_state(s, 1.0, dest, tubes, 1000.0, bare);
  CHECK(exact.v_minus == 0.0);
}

TEST_CASE("projection cannot look past the tube horizon", "[planner]") {
  auto tube = make_tube({0.0, 10.0},
                        {{0.0, 0.0, 2000.0}, {500.0, 0.0, 2000.0}}, {10., 10.});
  const auto tubes = std::vector<const ReachTube*>{&tube};
  const auto dest = make_destination_source({10000.0, 0.0, 2000.0});
  const auto s = mk(0.0, 0.0, 2000.0, 0.0, 50.0);
  CHECK_NOTHROW(evaluate_state(s, 10.0, dest, tubes));
  CHECK_THROWS_AS(evaluate_state(s, 11.0, dest, tubes), std::invalid_argument);
}

TEST_CASE("batched projection matches the scalar integrator bit for bit",
          "[planner]") {
  const auto s = mk(1234.5, -987.0, 1800.0, 0.7, 52.0, 0.05, -0.03);
  const auto nom = nominal_actions();
  const auto em = emergency_actions();
  for (const auto* set : {&nom, &em}) {
    const auto fast = project_candidates(s, *set);
    const auto cmds = enumerate_commands(*set);
    REQUIRE(fast.size() == cmds.size());
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < cmds.size(); ++i) {
      const auto ref = step(s, cmds[i], {}, 1.0);
      if (!same_state(fast[i].next, ref)) ++mismatches;
      REQUIRE(fast[i].index == i);
    }
    CHECK(mismatches == 0);
  }
}

TEST_CASE("projection falls back cleanly when course and heading differ",
          "[planner]") {
  auto s = mk(0.0, 0.0, 2000.0, 0.3, 50.0);
  s.chi = 0.31;  // decoupled by external disturbance
  const auto out = project_candidates(s, nominal_actions());
  const auto cmds = enumerate_commands(nominal_actions());
  REQUIRE(out.size() == cmds.size());
  for (std::size_t i = 0; i < cmds.size(); i += 97)
    CHECK(same_state(out[i].next, step(s, cmds[i], {}, 1.0)));
}

TEST_CASE("planner closes on the destination step after step", "[planner]") {
  const auto dest = make_destination_source({12000.0, 3000.0, 1500.0});
  PlanContext ctx;
  auto s = mk(0.0, 0.0, 1500.0, 0.0, 50.0);
  double prev = distance(s.position(), dest.location);
  for (int k = 0; k < 25; ++k) {
    const auto r = plan_step(s, dest, {}, nominal_actions(), ctx);
    REQUIRE_FALSE(r.deadlock);
    const double d = distance(r.next.position(), dest.location);
    CHECK(d < prev);
    prev = d;
    s = r.next;
  }
  CHECK(prev < distance(Vec3{0, 0, 1500}, dest.location) - 1000.0);
}

TEST_CASE("choice is invariant to scaling every peak magnitude", "[planner]") {
  auto tube = make_tube({1.0}, {{80.0, 30.0, 2010.0}}, {40.0});
  const auto tubes = std::vector<const ReachTube*>{&tube};
  const auto s = mk(0.0, 0.0, 2000.0, 0.0, 50.0);

  PlanContext a;
  const auto dest_a = make_destination_source({4000.0, 1000.0, 2200.0});
  const auto ra = plan_step(s, dest_a, tubes, nominal_actions(), a);

  PlanContext b;
  b.rewards.destination_magnitude = 2000.0;
  b.rewards.intruder.base = 5000.0;
  b.rewards.intruder.per_second = 1000.0;
  const auto dest_b =
      make_destination_source({4000.0, 1000.0, 2200.0}, 2000.0);
  const auto rb = plan_step(s, dest_b, tubes, nominal_actions(), b);

  CHECK(ra.action_index == rb.action_index);
}

TEST_CASE("shield agrees with baseline in empty airspace", "[planner]") {
  const auto dest = make_destination_source({8000.0, -2000.0, 1800.0});
  const auto s = mk(0.0, 0.0, 1600.0, -0.4, 55.0);
  PlanContext base;
  PlanContext shield;
  shield.mode = SafetyMode::Shield;
  const auto rb = plan_step(s, dest, {}, nominal_actions(), base);
  const auto rs = plan_step(s, dest, {}, nominal_actions(), shield);
  REQUIRE_FALSE(rs.deadlock);
  CHECK(rb.action_index == rs.action_index);
  CHECK(rb.value.total == rs.value.total);
}

TEST_CASE("planner ducks under a corridor parked downstream", "[planner]") {
  // A tight slice sits on the cruise track at its own lookahead time.
  // Level candidates are predicted into its padded zone; pitching away
  // beats a 33 m vertical envelope over the five carried seconds.
  auto tube = make_tube({6.0}, {{300.0, 0.0, 2000.0}}, {3.0});
  const auto tubes = std::vector<const ReachTube*>{&tube};
  const auto dest = make_destination_source({12000.0, 0.0, 2000.0});
  const auto s = mk(0.0, 0.0, 2000.0, 0.0, 50.0);
  PlanContext ctx;
  ctx.rewards.intruder.pad_vertical = 30.0;

  const auto cands = project_candidates(s, nominal_actions());
  int charged = 0;
  double best_clear = -1e300;
  for (const auto& c : cands) {
    const auto v = evaluate_state(c.next, ctx.dt, dest, tubes,
                                  ctx.rewards.penalty_altitude,
                                  ctx.rewards.intruder);
    if (v.v_minus > 0.0)
      ++charged;
    else
      best_clear = std::max(best_clear, v.total);
  }
  REQUIRE(charged > 0);  // the hazard actually blocks part of the menu

  const auto r = plan_step(s, dest, tubes, nominal_actions(), ctx);
  CHECK(r.value.v_minus == 0.0);
  CHECK(r.cmd.gamma_c != 0.0);  // the escape is vertical
  // Argmax can never prefer a charged candidate over the best clear one.
  CHECK(r.value.total >= best_clear);
}

TEST_CASE("shield reports deadlock when every future is bad", "[planner]") {
  std::vector<double> times;
  std::vector<Vec3> centers;
  std::vector<double> radii;
  for (int k = 0; k <= 10; ++k) {
    times.push_back(static_cast<double>(k));
    centers.push_back({50.0, 0.0, 2000.0});
    radii.push_back(5000.0);
  }
  auto tube = make_tube(times, centers, radii);
  const auto tubes = std::vector<const ReachTube*>{&tube};
  const auto dest = make_destination_source({12000.0, 0.0, 2000.0});
  const auto s = mk(0.0, 0.0, 2000.0, 0.0, 50.0);

  PlanContext ctx;
  ctx.mode = SafetyMode::Shield;
  const auto r = plan_step(s, dest, tubes, nominal_actions(), ctx);
  CHECK(r.deadlock);

  const auto esc = resolve_deadlock(s, dest, tubes, ctx);
  CHECK(esc.deadlock);
  CHECK(esc.exempt);
  // The escape command comes from the emergency menu.
  const auto& em = emergency_actions();
  auto holds = [](const std::vector<double>& levels, double deg) {
    return std::any_of(levels.begin(), levels.end(),
                       [&](double l) { return deg2rad(l) == deg; });
  };
  CHECK(holds(em.gamma_levels_deg, esc.cmd.gamma_c));
  CHECK(holds(em.phi_levels_deg, esc.cmd.phi_c));
  CHECK(std::count(em.v_levels_mps.begin(), em.v_levels_mps.end(),
                   esc.cmd.v_c) == 1);
}

TEST_CASE("deadlock resolution refuses a healthy situation", "[planner]") {
  const auto dest = make_destination_source({12000.0, 0.0, 2000.0});
  const auto s = mk(0.0, 0.0, 2000.0, 0.0, 50.0);
  PlanContext ctx;
  ctx.mode = SafetyMode::Shield;
  CHECK_THROWS_AS(resolve_deadlock(s, dest, {}, ctx), std::logic_error);
}

TEST_CASE("envelope screening keeps the chosen transition legal",
          "[planner]") {
  const auto dest = make_destination_source({-3000.0, 9000.0, 1400.0});
  const auto s = mk(0.0, 0.0, 1700.0, 1.2, 67.0);
  PlanContext ctx;
  const auto r = plan_step(s, dest, {}, nominal_actions(), ctx);
  CHECK_FALSE(r.exempt);
  CHECK(state_within_limits(r.next, ctx.limits));
  const double rate = course_rate_dps(s, r.next, ctx.dt);
  CHECK(rate >= ctx.limits.course_rate_min_dps);
  CHECK(rate <= ctx.limits.course_rate_max_dps);
  CHECK(r.next.v <= mps_from_knots(ctx.limits.v_max_kts));
}

TEST_CASE("screening yields to recovery when nothing legal remains",
          "[planner]") {
  // A 70 degree path angle cannot come back inside the envelope in
  // one step, so the screen would reject the whole menu; the planner
  // must fly on unscreened and say so.
  const auto dest = make_destination_source({12000.0, 0.0, 2000.0});
  const auto s = mk(0.0, 0.0, 2500.0, 0.0, 50.0, deg2rad(70.0), 0.0);
  PlanContext ctx;
  const auto r = plan_step(s, dest, {}, nominal_actions(), ctx);
  CHECK(r.exempt);
  CHECK_FALSE(r.deadlock);
  CHECK(r.next.gamma < s.gamma);  // heading back toward the envelope

  // A couple of steps later the screen re-engages.
  auto cur = r.next;
  for (int k = 0; k < 3; ++k) {
    const auto rr = plan_step(cur, dest, {}, nominal_actions(), ctx);
    cur = rr.next;
    if (!rr.exempt) break;
  }
  const auto back = plan_step(cur, dest, {}, nominal_actions(), ctx);
  CHECK_FALSE(back.exempt);
}

TEST_CASE("a goal parked beside the aircraft needs the raw menu",
          "[planner]") {
  // The comfort envelope caps left bank at 5 degrees, which at cruise
  // speed turns no faster than the bearing to a goal ~2.4 km off the
  // left wing rotates away.  The screened greedy planner then circles
  // the goal indefinitely; the raw menu banks hard and closes.
  const auto dest = make_destination_source({0.0, -2400.0, 1500.0});
  const auto start = mk(0.0, 0.0, 1500.0, 0.0, 40.0);
  const auto& menu = nominal_actions();

  auto fly = [&](bool screened, int steps) {
    PlanContext ctx;
    ctx.enforce_limits = screened;
    auto s = start;
    double closest = distance(s.position(), dest.location);
    for (int k = 0; k < steps; ++k) {
      s = plan_step(s, dest, {}, menu, ctx).next;
      closest = std::min(closest, distance(s.position(), dest.location));
      if (closest <= 300.0) break;
    }
    return closest;
  };

  CHECK(fly(false, 100) <= 300.0);
  CHECK(fly(true, 100) > 2000.0);
}

TEST_CASE("exact ties resolve to the lowest action index", "[planner]") {
  // A non-decaying destination makes every candidate worth the same.
  const auto dest = make_destination_source({5000.0, 0.0, 2000.0}, 200.0, 1.0);
  const auto s = mk(0.0, 0.0, 2000.0, 0.0, 50.0);
  PlanContext ctx;
  ctx.enforce_limits = false;
  const auto r = plan_step(s, dest, {}, nominal_actions(), ctx);
  CHECK(r.action_index == 0);
  CHECK(r.value.total == 200.0);
}

TEST_CASE("shaping penalizes contact that the potential barely sees",
          "[planner]") {
  // A huge box whose padded floor slices through the top of the
  // candidate fan: its center is so far away that the decayed peak is
  // dust, so the baseline climbs into the protected zone chasing the
  // destination.  The shaped planner pays the undecayed contact price
  // and stays below.
  auto tube = make_tube({4.0}, {{50.0, 0.0, 2432.0}}, {400.0});
  const auto tubes = std::vector<const ReachTube*>{&tube};
  const auto dest = make_destination_source({0.0, 0.0, 2400.0});
  const auto s = mk(0.0, 0.0, 2000.0, 0.0, 50.0);

  PlanContext base;
  const auto rb = plan_step(s, dest, tubes, nominal_actions(), base);
  CHECK(raw_contact_reward(rb.next, dest, tubes, base.rewards) < 0.0);

  PlanContext shaped;
  shaped.mode = SafetyMode::Shaping;
  const auto rs = plan_step(s, dest, tubes, nominal_actions(), shaped);
  CHECK(raw_contact_reward(rs.next, dest, tubes, shaped.rewards) == 0.0);
  CHECK(rs.next.z < rb.next.z);
  CHECK(rs.action_index != rb.action_index);
}

TEST_CASE("shield threads a head-on encounter without an near miss",
          "[planner][slow]") {
  const auto dest = make_destination_source({15000.0, 0.0, 1500.0});
  auto own = mk(0.0, 0.0, 1500.0, 0.0, 50.0);
  auto intr = mk(3000.0, 0.0, 1500.0, kPi, 50.0);
  const Command straight{0.0, 0.0, 50.0};

  PlanContext ctx;
  ctx.mode = SafetyMode::Shield;
  ReachConfig rc;
  bool nmac = false;
  for (int step_i = 0; step_i < 90; ++step_i) {
    Rng rng(derive_seed(2026, {stream::kTube, static_cast<std::uint64_t>(step_i)}));
    const auto it = build_intruder_tube(intr, nominal_actions(), rc, {}, 1.0, rng);
    const auto tubes = std::vector<const ReachTube*>{&it.tube};

    auto r = plan_step(own, dest, tubes, nominal_actions(), ctx);
    if (r.deadlock) r = resolve_deadlock(own, dest, tubes, ctx);
    own = r.next;
    intr = step(intr, straight, {}, 1.0);

    if (horizontal_distance(own.position(), intr.position()) < 152.0 &&
        vertical_distance(own.position(), intr.position()) < 30.0)
      nmac = true;
  }
  CHECK_FALSE(nmac);
  CHECK(own.x > 900.0);  // back on course after the conflict
}
