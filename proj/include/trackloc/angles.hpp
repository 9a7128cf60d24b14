#pragma once
#include <cmath>

namespace trackloc {

constexpr double kPi = 3.14159265358979323846;

// Wrap an angle into [-pi, pi).
inline double wrap_angle(double a) {
  double w = a - 2.0 * kPi * std::floor((a + kPi) / (2.0 * kPi));
  // floor rounding can land exactly on +pi
  if (w >= kPi) w -= 2.0 * kPi;
  return w;
}

// Shortest signed difference a - b, wrapped.
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace trackloc
