#pragma once
#include <vector>

#include "trackloc/pose.hpp"
#include "trackloc/raycast.hpp"

namespace trackloc {

// One planar range scan. Beam i points at angle_min + i * angle_increment in
// the sensor frame; non-returns are encoded as range_max.
struct ScanFrame {
  double stamp = 0.0;
  double angle_min = 0.0;
  double angle_increment = 0.0;
  double range_max = 0.0;
  std::vector<float> ranges;

  int beams() const { return static_cast<int>(ranges.size()); }
  double bearing(int i) const { return angle_min + i * angle_increment; }
};

ScanFrame make_scan_frame(int beams, double fov, double range_max);

struct Scanline {
  int index;       // beam index into ScanFrame::ranges
  double bearing;  // sensor-frame angle of that beam
};

// K beam indices evenly spread across the whole field of view, both edge
// beams included. K=1 picks the middle beam.
std::vector<Scanline> layout_uniform(int beams, double angle_min,
                                     double angle_increment, int K);

// K beams aimed at points spaced uniformly by arc length along the perimeter
// of a unit-length rectangle of width `aspect` centered on the sensor, walked
// symmetrically from the forward-axis midpoint. Narrow aspect concentrates
// beams down-track; points outside the scanner's field of view are clipped.
// Snapped to the nearest beam, duplicates advance to the next free index.
std::vector<Scanline> layout_boxed(int beams, double angle_min,
                                   double angle_increment, int K,
                                   double aspect);

struct BeamModelParams {
  double z_hit = 0.75;
  double z_short = 0.10;
  double z_max = 0.07;
  double z_rand = 0.08;
  double sigma_hit = 0.10;     // m
  double lambda_short = 1.0;   // 1/m
};

// Discretized p(measured bin | expected bin). Bin width equals the map
// resolution; the last bin stands for range_max (non-returns). Columns
// (fixed expected bin) are normalized to sum to 1.
class BeamModelTable {
 public:
  static BeamModelTable build(const BeamModelParams& p, double bin_width,
                              double max_range);

  int nbins() const { return nbins_; }
  double bin_width() const { return bin_w_; }
  int bin(double range) const {
    int b = static_cast<int>(range / bin_w_ + 0.5);
    if (b < 0) return 0;
    return b >= nbins_ ? nbins_ - 1 : b;
  }
  double p(int measured, int expected) const {
    return p_[static_cast<size_t>(measured) * nbins_ + expected];
  }
  double logp(int measured, int expected) const {
    return logp_[static_cast<size_t>(measured) * nbins_ + expected];
  }

 private:
  int nbins_ = 0;
  double bin_w_ = 0.0;
  // row-major in measured bin: weighting walks one measured row across many
  // expected bins, one particle after another
  std::vector<double> p_, logp_;
};

// Everything needed to score a particle against a scan.
struct SensorModel {
  const RangeLUT* lut = nullptr;
  // exact-cast fallback path; used when lut is null (benchmark comparisons)
  const OccupancyGrid* grid = nullptr;
  const BeamModelTable* table = nullptr;
  std::vector<Scanline> lines;
  Pose2D lidar_offset;            // sensor pose in the body frame
  double squash = 1.0 / 2.2;      // exponent applied in log domain
  double floor_logw = -80.0;

  // Measured-range bins for the active scanlines; computed once per scan and
  // shared by every particle.
  std::vector<int> bin_measurements(const ScanFrame& scan) const;

  // Log-weight for one particle: sum of log p(measured|expected) over the
  // scanlines, squashed, floored. Out-of-map particles get the floor.
  double weigh(const Pose2D& particle, const std::vector<int>& mbins) const;
};

}  // namespace trackloc
