#pragma once
#include <optional>
#include <string>
#include <vector>

#include "trackloc/eval.hpp"
#include "trackloc/filter.hpp"
#include "trackloc/track.hpp"

namespace trackloc {

struct CarParams {
  double wheelbase = 0.325;   // m
  double max_steer = 0.4189;  // rad
  double steer_rate = 4.0;    // rad/s slew limit
  double accel_max = 6.0;     // m/s^2
  double brake_max = 8.0;     // m/s^2
  double clearance = 0.15;    // wall-contact distance (m)
};

struct CarState {
  Pose2D pose;       // rear-axle frame
  double v = 0.0;    // m/s, forward only
  double steer = 0.0;
};

// Kinematic bicycle advanced by one step with the commanded steer (slew
// limited) and acceleration. Constant inputs over dt trace an exact circular
// arc, so there is no integration drift on steady turns.
void step_car(CarState& s, double steer_cmd, double accel_cmd, double dt,
              const CarParams& p);

// Odometry corruption profile. Noise terms are variances: trans_noise is the
// variance of the multiplicative translation perturbation, rot_noise is a
// rad-per-meter figure whose square scales with translation.
struct SlipProfile {
  double trans_scale = 1.0;
  double trans_noise = 0.0;
  double rot_noise = 0.0;
};
SlipProfile hq_profile();  // grippy: mild noise, no scale bias
SlipProfile lq_profile();  // slippery: 1.3x translation over-report + drift

// Draws 3 normals (trans, rot1, rot2) from `rs`.
OdometryDelta corrupt_odometry(const OdometryDelta& d, const SlipProfile& s,
                               rng::Stream& rs);

struct ScanSimParams {
  int beams = 1080;
  double fov = deg2rad(270.0);
  double range_max = 10.0;
  double noise_sigma = 0.02;  // additive Gaussian per beam (m)
};

// Exact casts from the sensor pose plus per-beam Gaussian noise, clamped to
// [0, range_max]. Beam draws come from sub-streams keyed off one draw from
// `rs`, so the output is identical whether the beam loop runs serial or
// parallel.
ScanFrame synth_scan(const OccupancyGrid& g, const Pose2D& sensor_pose,
                     const ScanSimParams& p, double stamp, rng::Stream& rs);

// One record per filter update.
struct StepRecord {
  double t = 0.0;
  Pose2D gt, est, odom;
  double v = 0.0;
  double ess = 0.0;
  double alignment = 0.0;  // scan alignment of the estimate
  StepTiming timing;
  bool lost = false;
};

struct LapResult {
  bool completed = false;
  bool dnf_wall = false;      // ended on wall contact
  double lap_time = 0.0;      // s (simulated)
  std::vector<StepRecord> steps;
};

// Scan stream written by experiments and consumed by replay: a meta line
// followed by one JSON object per update.
struct SimLog {
  int beams = 0;
  double angle_min = 0.0, angle_increment = 0.0, range_max = 0.0;
  double update_hz = 0.0;
  Pose2D lidar_offset;
  Pose2D start;  // pose at t=0; odometry and ground truth agree there
  uint64_t seed = 0;
  struct Record {
    double t;
    Pose2D gt, odom;
    double v;
    std::vector<float> ranges;
  };
  std::vector<Record> records;

  void save(const std::string& path) const;
  static SimLog load(const std::string& path);  // IoError with line number
};

struct RunParams {
  double physics_hz = 400.0;
  double update_hz = 40.0;
  double speed_scale = 1.0;
  double t_limit = 60.0;        // per lap, simulated seconds
  double lookahead_gain = 0.35; // Ld = clamp(gain * v, min, max)
  double lookahead_min = 0.8;
  double lookahead_max = 2.5;
  double speed_preview = 0.3;   // s of profile lookahead for speed target
  double speed_gain = 4.0;      // accel = gain * (v_target - v)
  bool use_filter = true;       // false: controller reads ground truth
  int alignment_stride = 4;     // beam subsampling for the alignment score
  Pose2D lidar_offset{0.27, 0.0, 0.0};
  ScanSimParams scan;
  SlipProfile slip;
  CarParams car;
};

// Closed-loop simulation: physics at physics_hz, scan + filter + controller
// update at update_hz. The pure-pursuit controller steers toward the raceline
// using either the filter estimate or ground truth.
class LapRunner {
 public:
  LapRunner(const Track& track, const SensorModel& sm,
            const MotionParams& motion, MotionModel model,
            const FilterParams& filter_params, const RunParams& run,
            uint64_t seed);

  // Run `laps` consecutive laps (flying restarts). Stops early on DNF.
  std::vector<LapResult> run(int laps, SimLog* log = nullptr);

  const DistanceField& distance_field() const { return dfield_; }

 private:
  const Track& track_;
  const SensorModel& sm_;
  MotionParams motion_;
  MotionModel model_;
  RunParams run_;
  FilterParams fparams_;
  uint64_t seed_;
  RacelineIndex raceline_;
  DistanceField dfield_;
};

}  // namespace trackloc
