#include <catch2/catch_amalgamated.hpp>

#include "freeflight/geometry.hpp"
#include "freeflight/rng.hpp"

using namespace freeflight;

TEST_CASE("angle wrap targets (-pi, pi]", "[geometry]") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(kPi) == Catch::Approx(kPi));
  CHECK(wrap_angle(-kPi) == Catch::Approx(kPi));
  CHECK(wrap_angle(3.0 * kPi) == Catch::Approx(kPi));
  CHECK(wrap_angle(kTwoPi) == Catch::Approx(0.0).margin(1e-15));
  CHECK(wrap_angle(kPi + 0.25) == Catch::Approx(-kPi + 0.25));
  for (double a = -20.0; a <= 20.0; a += 0.1037) {
    const double w = wrap_angle(a);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    CHECK(std::fabs(std::sin(w) - std::sin(a)) < 1e-12);
    CHECK(std::fabs(std::cos(w) - std::cos(a)) < 1e-12);
  }
}

TEST_CASE("unit conversions", "[geometry]") {
  CHECK(deg2rad(180.0) == Catch::Approx(kPi));
  CHECK(rad2deg(kPi / 2.0) == Catch::Approx(90.0));
  CHECK(mps_from_knots(47.0) == Catch::Approx(24.178888888888888).epsilon(1e-14));
  CHECK(mps_from_knots(133.0) == Catch::Approx(68.42111111111112).epsilon(1e-14));
  CHECK(knots_from_mps(mps_from_knots(77.0)) == Catch::Approx(77.0).epsilon(1e-14));
}

TEST_CASE("vector helpers", "[geometry]") {
  Vec3 a{1.0, 2.0, 3.0};
  Vec3 b{4.0, -2.0, 3.5};
  CHECK(distance(a, b) == Catch::Approx(std::sqrt(9.0 + 16.0 + 0.25)));
  CHECK(horizontal_distance(a, b) == Catch::Approx(5.0));
  CHECK(vertical_distance(a, b) == Catch::Approx(0.5));
  CHECK(chebyshev(a, b) == Catch::Approx(4.0));
  CHECK((a + b).x == Catch::Approx(5.0));
  CHECK((2.0 * a).z == Catch::Approx(6.0));
  CHECK(dot(a, b) == Catch::Approx(4.0 - 4.0 + 10.5));
}

TEST_CASE("rng streams are deterministic and distinct", "[geometry]") {
  CHECK(derive_seed(7, {1, 2, 3}) == derive_seed(7, {1, 2, 3}));
  CHECK(derive_seed(7, {1, 2, 3}) != derive_seed(7, {1, 3, 2}));
  CHECK(derive_seed(7, {1}) != derive_seed(8, {1}));
  CHECK(derive_seed(7, {stream::kTube}) != derive_seed(7, {stream::kEpisode}));

  Rng r1(42), r2(42);
  for (int i = 0; i < 100; ++i) CHECK(r1.u01() == r2.u01());
}

TEST_CASE("rng ranges", "[geometry]") {
  Rng r(1234);
  for (int i = 0; i < 2000; ++i) {
    const double u = r.u01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 2000; ++i) {
    auto k = r.index(15);
    CHECK(k < 15);
  }
  double max_r = 0.0;
  Vec3 mean{};
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    Vec3 p = r.in_ball(5.0);
    max_r = std::fmax(max_r, p.norm());
    mean += p * (1.0 / n);
  }
  CHECK(max_r <= 5.0);
  CHECK(max_r > 4.5);         // fills the ball
  CHECK(mean.norm() < 0.25);  // centered
}
