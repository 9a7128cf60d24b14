#pragma once
#include <string>
#include <vector>

#include "trackloc/filter.hpp"
#include "trackloc/grid.hpp"
#include "trackloc/sensor.hpp"
#include "trackloc/track.hpp"

namespace trackloc {

// Exact Euclidean distance (meters) to the nearest OCCUPIED cell, sampled at
// cell centers. Built once per map, queried per scan endpoint.
class DistanceField {
 public:
  static DistanceField build(const OccupancyGrid& g);

  // +large outside the map
  double at_world(double wx, double wy) const {
    int cx, cy;
    if (!grid_to_cell(wx, wy, cx, cy)) return 1e18;
    return dist_[static_cast<size_t>(cy) * nx_ + cx];
  }
  double at_cell(int cx, int cy) const {
    return dist_[static_cast<size_t>(cy) * nx_ + cx];
  }

 private:
  bool grid_to_cell(double wx, double wy, int& cx, int& cy) const {
    double lx = wx - origin_.x, ly = wy - origin_.y;
    double gx = (cos0_ * lx + sin0_ * ly) * inv_res_;
    double gy = (-sin0_ * lx + cos0_ * ly) * inv_res_;
    if (gx < 0.0 || gy < 0.0) return false;
    cx = static_cast<int>(gx);
    cy = static_cast<int>(gy);
    return cx < nx_ && cy < ny_;
  }
  int nx_ = 0, ny_ = 0;
  Pose2D origin_;
  double inv_res_ = 0.0, cos0_ = 1.0, sin0_ = 0.0;
  std::vector<double> dist_;
};

// Fraction of scan endpoints (projected from `pose`, every `stride`-th beam,
// max-range returns excluded) that land within `tolerance` of an OCCUPIED
// cell. Returns 0 when no beam qualifies.
double scan_alignment(const Pose2D& pose, const ScanFrame& scan,
                      const DistanceField& dfield, const Pose2D& lidar_offset,
                      double tolerance, int stride);

// Unsigned distance from (x, y) to the raceline polyline.
double lateral_error(double x, double y, const std::vector<RacePoint>& line);

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // population convention
  int n = 0;
};
Summary summarize(const std::vector<double>& xs);

// nearest-rank percentile, q in [0, 100]
double percentile(std::vector<double> xs, double q);

// Wall-time percentiles per filter phase, measured by cycling the filter
// over a fixed scan/odometry workload.
struct LatencyReport {
  int particles = 0;
  int scanlines = 0;
  int ntheta = 0;     // 0 = exact-cast backend
  int steps = 0;
  std::string host;
  double sensor_p50_ms = 0.0, sensor_p99_ms = 0.0;
  double step_p50_ms = 0.0, step_p99_ms = 0.0;
  double predict_p50_ms = 0.0;
  double resample_p50_ms = 0.0;
  double estimate_p50_ms = 0.0;
};

// CPU model plus thread count, recorded alongside latency numbers.
std::string host_descriptor();

LatencyReport bench_step_latency(ParticleFilter& pf, const MotionParams& mp,
                                 MotionModel model, const SensorModel& sm,
                                 const std::vector<ScanFrame>& scans,
                                 const std::vector<OdometryDelta>& deltas,
                                 int steps);

}  // namespace trackloc
