#include "trackloc/motion.hpp"

#include <algorithm>
#include <cmath>

namespace trackloc {

OdometryDelta decompose(const Pose2D& prev, const Pose2D& cur, double dt) {
  OdometryDelta d;
  d.dt = dt;
  double dx = cur.x - prev.x, dy = cur.y - prev.y;
  d.trans = std::hypot(dx, dy);
  if (d.trans < kDegenerateTrans) {
    d.rot1 = 0.0;
    d.rot2 = angle_diff(cur.theta, prev.theta);
  } else {
    double heading = std::atan2(dy, dx);
    d.rot1 = angle_diff(heading, prev.theta);
    d.rot2 = angle_diff(cur.theta, heading);
  }
  return d;
}

static Pose2D advance(const Pose2D& p, double rot1, double trans,
                      double rot2) {
  Pose2D out;
  out.x = p.x + trans * std::cos(p.theta + rot1);
  out.y = p.y + trans * std::sin(p.theta + rot1);
  out.theta = wrap_angle(p.theta + rot1 + rot2);
  return out;
}

Pose2D sample_naive(const Pose2D& p, const OdometryDelta& d,
                    const MotionParams& m, rng::Stream& rs) {
  Pose2D out = advance(p, d.rot1, d.trans, d.rot2);
  out.x += m.sigma_xy * rs.normal();
  out.y += m.sigma_xy * rs.normal();
  out.theta = wrap_angle(out.theta + m.sigma_theta * rs.normal());
  return out;
}

double diff_drive_sigma_rot1(const OdometryDelta& d, const MotionParams& m) {
  return std::sqrt(m.alpha1 * d.rot1 * d.rot1 + m.alpha2 * d.trans * d.trans);
}

double diff_drive_sigma_rot2(const OdometryDelta& d, const MotionParams& m) {
  return std::sqrt(m.alpha1 * d.rot2 * d.rot2 + m.alpha2 * d.trans * d.trans);
}

double diff_drive_sigma_trans(const OdometryDelta& d, const MotionParams& m) {
  return std::sqrt(m.alpha3 * d.trans * d.trans +
                   m.alpha4 * (d.rot1 * d.rot1 + d.rot2 * d.rot2));
}

double tum_rot_cap(const OdometryDelta& d, const MotionParams& m) {
  return m.kappa * d.trans * std::tan(m.max_steer) / m.wheelbase;
}

static Pose2D sample_rtr(const Pose2D& p, const OdometryDelta& d,
                         double s_rot1, double s_trans, double s_rot2,
                         rng::Stream& rs) {
  double r1 = d.rot1 - s_rot1 * rs.normal();
  double t = d.trans - s_trans * rs.normal();
  double r2 = d.rot2 - s_rot2 * rs.normal();
  return advance(p, r1, t, r2);
}

Pose2D sample_diff_drive(const Pose2D& p, const OdometryDelta& d,
                         const MotionParams& m, rng::Stream& rs) {
  return sample_rtr(p, d, diff_drive_sigma_rot1(d, m),
                    diff_drive_sigma_trans(d, m), diff_drive_sigma_rot2(d, m),
                    rs);
}

Pose2D sample_tum(const Pose2D& p, const OdometryDelta& d,
                  const MotionParams& m, rng::Stream& rs) {
  double s1 = diff_drive_sigma_rot1(d, m);
  double s2 = diff_drive_sigma_rot2(d, m);
  if (d.trans >= m.lam_thresh) {
    double cap = tum_rot_cap(d, m);
    s1 = std::min(s1, cap);
    s2 = std::min(s2, cap);
  }
  return sample_rtr(p, d, s1, diff_drive_sigma_trans(d, m), s2, rs);
}

}  // namespace trackloc
