#pragma once
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "trackloc/grid.hpp"
#include "trackloc/pose.hpp"

namespace trackloc {

// March a ray from (x, y) at world angle `angle` until it enters a cell that
// blocks it (OCCUPIED or UNKNOWN) or leaves the grid; returns the traveled
// distance, capped at max_range. Step size is resolution/2, so the result is
// accurate to about half a cell. Throws std::out_of_range when the start
// point is outside the grid.
double cast_exact(const OccupancyGrid& g, double x, double y, double angle,
                  double max_range);

struct LutParams {
  int ntheta = 108;          // angular bins over the full circle
  double max_range = 10.0;   // meters
  double memory_cap_mb = 2048.0;
};

struct LutBuildStats {
  double seconds = 0.0;
  size_t bytes = 0;
  size_t cells_free = 0;
  size_t cells_total = 0;
};

// Precomputed ranges: for every map cell and every angular bin, the exact
// cast from the cell center at the bin-center angle. Non-FREE source cells
// store 0. Values are quantized to 16 bits at resolution/4 per count, so a
// lookup reproduces the exact cast to within resolution/8. The table carries
// its own copy of the map geometry and is self-contained after load().
class RangeLUT {
 public:
  // parallel=true uses the OpenMP kernel; false runs the serial reference.
  // Both produce identical tables.
  static RangeLUT build(const OccupancyGrid& g, const LutParams& p,
                        LutBuildStats* stats = nullptr, bool parallel = true);

  // Nearest-cell, nearest-bin lookup; no interpolation. Throws
  // std::out_of_range when (x, y) is outside the grid.
  double query(double x, double y, double world_angle) const {
    int cx, cy;
    if (!world_to_grid(x, y, cx, cy))
      throw std::out_of_range("RangeLUT::query: pose outside map");
    return values_[entry_index(cx, cy, bin_of(world_angle))] * quantum_;
  }

  bool world_to_grid(double wx, double wy, int& cx, int& cy) const {
    double lx = wx - origin_.x, ly = wy - origin_.y;
    double gx = (cos0_ * lx + sin0_ * ly) * inv_res_;
    double gy = (-sin0_ * lx + cos0_ * ly) * inv_res_;
    if (gx < 0.0 || gy < 0.0) return false;
    int ix = static_cast<int>(gx), iy = static_cast<int>(gy);
    if (ix >= nx_ || iy >= ny_) return false;
    cx = ix;
    cy = iy;
    return true;
  }

  int bin_of(double world_angle) const {
    double rel = world_angle - theta0_;
    rel -= 2.0 * kPi * std::floor(rel / (2.0 * kPi));  // [0, 2pi)
    int b = static_cast<int>(rel * inv_bin_w_ + 0.5);
    return b >= ntheta_ ? 0 : b;
  }
  double bin_center(int b) const { return theta0_ + b * bin_w_; }

  uint16_t raw_at(int cx, int cy, int b) const {
    return values_[entry_index(cx, cy, b)];
  }
  double value_at(int cx, int cy, int b) const {
    return values_[entry_index(cx, cy, b)] * quantum_;
  }
  // Base of the ntheta contiguous entries for one cell (hot path helper).
  const uint16_t* cell_row(int cx, int cy) const {
    return values_.data() + entry_index(cx, cy, 0);
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int ntheta() const { return ntheta_; }
  double resolution() const { return res_; }
  double max_range() const { return max_range_; }
  double quantum() const { return quantum_; }
  double theta0() const { return theta0_; }
  double bin_width() const { return bin_w_; }
  size_t bytes() const { return values_.size() * sizeof(uint16_t); }

  // Versioned little-endian binary file. load() rejects bad magic, unknown
  // versions, and truncated payloads with IoError.
  void save(const std::string& path) const;
  static RangeLUT load(const std::string& path);

 private:
  size_t entry_index(int cx, int cy, int b) const {
    return (static_cast<size_t>(cy) * nx_ + cx) * ntheta_ + b;
  }
  void finish_init();

  int nx_ = 0, ny_ = 0, ntheta_ = 0;
  double res_ = 0.0, max_range_ = 0.0;
  Pose2D origin_;
  double cos0_ = 1.0, sin0_ = 0.0, inv_res_ = 0.0;
  double theta0_ = -kPi;  // center of bin 0
  double bin_w_ = 0.0, inv_bin_w_ = 0.0;
  double quantum_ = 0.0;
  std::vector<uint16_t> values_;
};

}  // namespace trackloc
