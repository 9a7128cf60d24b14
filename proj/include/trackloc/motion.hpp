#pragma once
#include "trackloc/pose.hpp"
#include "trackloc/rng.hpp"

namespace trackloc {

// Rotate-translate-rotate decomposition of one odometry step.
struct OdometryDelta {
  double rot1 = 0.0;
  double trans = 0.0;
  double rot2 = 0.0;
  double dt = 0.0;
};

struct MotionParams {
  // noise scale on rot from rot / rot from trans / trans from trans /
  // trans from rot (variances, applied to squared delta components)
  double alpha1 = 0.5;
  double alpha2 = 0.015;
  double alpha3 = 0.1;
  double alpha4 = 1.0;
  // translation (m) per step above which the steering-geometry rotation cap
  // engages in the high-speed model
  double lam_thresh = 0.1;
  // cap gain: rotation-noise sigma is limited to
  // kappa * trans * tan(max_steer) / wheelbase
  double kappa = 0.08;
  double max_steer = 0.4189;  // rad
  double wheelbase = 0.325;   // m
  // fixed-noise model sigmas
  double sigma_xy = 0.05;     // m
  double sigma_theta = 0.05;  // rad
};

// Threshold below which the translation direction is meaningless and rot1 is
// forced to 0 (pure-rotation steps).
constexpr double kDegenerateTrans = 1e-6;

// Split prev->cur into (rot1, trans, rot2). trans is always >= 0; reversing
// motion shows up as rot1 near pi.
OdometryDelta decompose(const Pose2D& prev, const Pose2D& cur, double dt);

// Apply `d` to `p` with fixed-sigma Gaussian noise on x, y, theta.
// Consumes exactly 3 normal draws.
Pose2D sample_naive(const Pose2D& p, const OdometryDelta& d,
                    const MotionParams& m, rng::Stream& rs);

// Odometry motion model: each delta component is perturbed by zero-mean
// Gaussian noise whose variance is an alpha-weighted mix of the squared
// components. Consumes exactly 3 normal draws.
Pose2D sample_diff_drive(const Pose2D& p, const OdometryDelta& d,
                         const MotionParams& m, rng::Stream& rs);

// High-speed variant: identical to sample_diff_drive below lam_thresh; above
// it, each rotation-noise sigma is capped by what the steering geometry could
// physically produce over that translation. Same draw count and order as
// sample_diff_drive, so paired seeds give comparable outputs.
Pose2D sample_tum(const Pose2D& p, const OdometryDelta& d,
                  const MotionParams& m, rng::Stream& rs);

// Sigma helpers exposed for tests and analysis.
double diff_drive_sigma_rot1(const OdometryDelta& d, const MotionParams& m);
double diff_drive_sigma_rot2(const OdometryDelta& d, const MotionParams& m);
double diff_drive_sigma_trans(const OdometryDelta& d, const MotionParams& m);
double tum_rot_cap(const OdometryDelta& d, const MotionParams& m);

}  // namespace trackloc
