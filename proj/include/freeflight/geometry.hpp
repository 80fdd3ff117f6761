#pragma once

#include <cmath>
#include <numbers>

namespace freeflight {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// International knot: 1852 m per hour.
inline constexpr double kMpsPerKnot = 1852.0 / 3600.0;

constexpr double deg2rad(double d) { return d * (kPi / 180.0); }
constexpr double rad2deg(double r) { return r * (180.0 / kPi); }
constexpr double mps_from_knots(double kts) { return kts * kMpsPerKnot; }
constexpr double knots_from_mps(double mps) { return mps / kMpsPerKnot; }

// Normalizes an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, kTwoPi);
  if (r <= -kPi) r += kTwoPi;
  return r;
}

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  double norm_xy() const { return std::hypot(x, y); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

inline double horizontal_distance(const Vec3& a, const Vec3& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline double vertical_distance(const Vec3& a, const Vec3& b) {
  return std::fabs(a.z - b.z);
}

// Max coordinate-wise separation (infinity norm of a - b).
inline double chebyshev(const Vec3& a, const Vec3& b) {
  double dx = std::fabs(a.x - b.x);
  double dy = std::fabs(a.y - b.y);
  double dz = std::fabs(a.z - b.z);
  return std::fmax(dx, std::fmax(dy, dz));
}

}  // namespace freeflight
