#pragma once
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "trackloc/filter.hpp"
#include "trackloc/motion.hpp"
#include "trackloc/sensor.hpp"
#include "trackloc/sim.hpp"

namespace trackloc {

// Run configuration: one YAML document, nested sections, every key optional
// with the defaults below. Unknown keys are rejected so typos fail loudly.
struct RunConfig {
  uint64_t seed = 42;
  int threads = 0;            // OpenMP thread count; 0 keeps the default
  std::string track_dir;      // fixture bundle (map.yaml + raceline.csv)
  std::string out_dir = "out";
  std::string lut_file;       // optional prebuilt LUT; empty builds in memory

  struct MotionCfg {
    std::string model = "tum";  // naive | diffdrive | tum
    MotionParams params;
  } motion;

  struct SensorCfg {
    std::string layout = "boxed";  // uniform | boxed
    int k = 60;
    double aspect = 0.3;
    BeamModelParams beam;
    double squash = 1.0 / 2.2;
    double floor_log_weight = -80.0;
    Pose2D lidar_offset{0.27, 0.0, 0.0};
  } sensor;

  struct LutCfg {
    int ntheta = 108;
    double max_range = 10.0;
    double memory_cap_mb = 2048.0;
  } lut;

  struct FilterCfg {
    int particles = 3000;
    double resample_ess_frac = 0.5;
    double init_sigma_xy = 0.1;
    double init_sigma_theta = 0.05;
  } filter;

  struct SimCfg {
    double physics_hz = 400.0;
    double update_hz = 40.0;
    double speed_scale = 1.0;
    double t_limit = 60.0;
    int scan_beams = 1080;
    double scan_fov_deg = 270.0;
    double scan_noise_sigma = 0.02;
    CarParams car;
    double lookahead_gain = 0.35;
    double lookahead_min = 0.8;
    double lookahead_max = 2.5;
    double speed_preview = 0.3;
    double speed_gain = 4.0;
  } sim;

  struct SlipCfg {
    SlipProfile hq = {1.0, 1e-4, 0.005};
    SlipProfile lq = {1.1, 2.5e-3, 0.05};
  } slip;

  struct EvalCfg {
    int alignment_stride = 4;
  } eval;

  struct ExperimentCfg {
    int laps = 10;
    std::vector<std::string> models = {"diffdrive", "tum"};
    std::vector<std::string> conditions = {"hq", "lq"};
    bool save_logs = false;
    bool ground_truth = false;  // controller bypasses the filter
  } experiment;

  // Throws ConfigError on unknown keys or malformed values.
  static RunConfig from_file(const std::string& path);
  static RunConfig from_yaml_string(const std::string& text);

  // Resolved config as YAML, one comment line of documentation per key.
  // dump() output parses back to an identical config.
  void dump(std::ostream& os) const;

  MotionModel motion_model() const;  // parses motion.model
  FilterParams filter_params() const;
  LutParams lut_params() const;
  RunParams run_params(const std::string& condition) const;
  SlipProfile slip_for(const std::string& condition) const;
  ScanSimParams scan_params() const;
};

MotionModel parse_motion_model(const std::string& name);

}  // namespace trackloc
