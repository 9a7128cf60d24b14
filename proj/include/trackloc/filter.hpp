#pragma once
#include <array>
#include <cstdint>
#include <vector>

#include "trackloc/grid.hpp"
#include "trackloc/motion.hpp"
#include "trackloc/sensor.hpp"

namespace trackloc {

enum class MotionModel { naive, diff_drive, tum };

struct FilterParams {
  int n = 3000;
  double resample_ess_frac = 0.5;  // resample when ESS < frac * N
  double init_sigma_xy = 0.1;      // init_pose spread
  double init_sigma_theta = 0.05;
  uint64_t seed = 42;
  bool parallel = true;            // OpenMP weighting/prediction kernels
};

struct PoseEstimate {
  Pose2D mean;
  // row-major covariance over (x, y, theta); angular residuals wrapped
  std::array<double, 9> cov{};
  double ess = 0.0;
  bool lost = false;
};

struct StepTiming {
  double predict_ms = 0.0;
  double update_ms = 0.0;
  double resample_ms = 0.0;
  double estimate_ms = 0.0;
  double total_ms = 0.0;
  bool resampled = false;
};

// Monte-Carlo localization: predict / weight / conditional systematic
// resample / weighted mean. All randomness flows through counter-based
// streams keyed on (seed, step, particle), so runs are bit-reproducible for
// a fixed seed no matter how many threads execute the kernels.
class ParticleFilter {
 public:
  explicit ParticleFilter(const FilterParams& p);

  // Uniform over FREE cells, heading uniform in [-pi, pi).
  void init_global(const OccupancyGrid& g);
  // Gaussian ball around a pose (heading sigma wraps).
  void init_pose(const Pose2D& center);

  void predict(const OdometryDelta& d, const MotionParams& m,
               MotionModel model);
  // Returns true if every particle hit the log-weight floor (lost).
  bool update(const SensorModel& sm, const ScanFrame& scan);
  // Systematic resample when ESS < frac*N. Returns true if it ran.
  bool maybe_resample();
  PoseEstimate estimate() const;

  // One full cycle: predict, update, conditional resample, estimate.
  PoseEstimate step(const OdometryDelta& d, const MotionParams& m,
                    MotionModel model, const SensorModel& sm,
                    const ScanFrame& scan, StepTiming* timing = nullptr);

  int n() const { return static_cast<int>(particles_.size()); }
  const std::vector<Pose2D>& particles() const { return particles_; }
  const std::vector<double>& weights() const { return weights_; }
  double ess() const { return ess_; }
  bool lost() const { return lost_; }
  uint64_t steps_taken() const { return step_count_; }

 private:
  void normalize_from_logs();

  FilterParams params_;
  std::vector<Pose2D> particles_;
  std::vector<double> logw_;     // per-update scratch
  std::vector<double> weights_;  // normalized, persists between updates
  double ess_ = 0.0;
  bool lost_ = false;
  uint64_t step_count_ = 0;  // advances every predict; keys rng streams
  rng::Stream seq_;          // sequential draws (init, resample)
};

// Systematic resampling exposed for tests: picks n indices from the weight
// vector with a single uniform offset.
std::vector<int> systematic_resample_indices(const std::vector<double>& w,
                                             int n, double u01);

}  // namespace trackloc
