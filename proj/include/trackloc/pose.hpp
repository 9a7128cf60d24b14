#pragma once
#include <cmath>

#include "trackloc/angles.hpp"

namespace trackloc {

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

// a then b: b interpreted in a's frame (rigid-body composition).
inline Pose2D compose(const Pose2D& a, const Pose2D& b) {
  double c = std::cos(a.theta), s = std::sin(a.theta);
  return {a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y,
          wrap_angle(a.theta + b.theta)};
}

inline Pose2D inverse(const Pose2D& p) {
  double c = std::cos(p.theta), s = std::sin(p.theta);
  return {-(c * p.x + s * p.y), -(-s * p.x + c * p.y), wrap_angle(-p.theta)};
}

// b expressed in a's frame, so compose(a, between(a, b)) == b.
inline Pose2D between(const Pose2D& a, const Pose2D& b) {
  return compose(inverse(a), b);
}

}  // namespace trackloc
