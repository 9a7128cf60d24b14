#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "trackloc/pose.hpp"

namespace trackloc {

enum class CellState : uint8_t { FREE = 0, OCCUPIED = 1, UNKNOWN = 2 };

// Metadata sidecar, same key set the usual map tooling writes:
// image, resolution, origin [x y yaw], negate, occupied_thresh, free_thresh.
// Optional width/height keys are checked against the image when present.
struct MapMetadata {
  std::string image;
  double resolution = 0.05;
  Pose2D origin;
  double occupied_thresh = 0.65;
  double free_thresh = 0.196;
  bool negate = false;
};

// Tri-state occupancy grid. Cell (0,0) sits at the map origin corner; y grows
// upward, so image row 0 is the top row of the grid.
class OccupancyGrid {
 public:
  // Loads metadata YAML + the 8-bit grayscale image (PGM or PNG) it names.
  // Throws IoError for missing/unreadable files, ConfigError for bad content
  // (inverted thresholds, non-grayscale image, dimension mismatch).
  static OccupancyGrid load(const std::string& metadata_path);

  // Assemble directly from cell states (tests, track generation).
  static OccupancyGrid from_states(int nx, int ny, double resolution,
                                   const Pose2D& origin,
                                   std::vector<CellState> states);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double resolution() const { return res_; }
  const Pose2D& origin() const { return origin_; }

  // World -> cell index. False when the point falls outside the grid.
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

  // Cell center in world coordinates.
  void grid_to_world(int cx, int cy, double& wx, double& wy) const {
    double gx = (cx + 0.5) * res_, gy = (cy + 0.5) * res_;
    wx = origin_.x + cos0_ * gx - sin0_ * gy;
    wy = origin_.y + sin0_ * gx + cos0_ * gy;
  }

  CellState state(int cx, int cy) const {
    return static_cast<CellState>(cells_[static_cast<size_t>(cy) * nx_ + cx]);
  }
  bool in_bounds(int cx, int cy) const {
    return cx >= 0 && cy >= 0 && cx < nx_ && cy < ny_;
  }
  bool is_free(int cx, int cy) const {
    return state(cx, cy) == CellState::FREE;
  }
  // UNKNOWN stops rays just like OCCUPIED: no information past the boundary.
  bool blocks_ray(int cx, int cy) const {
    return state(cx, cy) != CellState::FREE;
  }

  bool is_free_world(double wx, double wy) const {
    int cx, cy;
    return world_to_grid(wx, wy, cx, cy) && is_free(cx, cy);
  }

  size_t count(CellState s) const;
  const std::vector<uint8_t>& raw() const { return cells_; }

  // Write the grid back out as PGM + metadata YAML (track generation).
  void save_pgm(const std::string& pgm_path) const;
  void save_metadata(const std::string& yaml_path,
                     const std::string& image_name) const;

 private:
  int nx_ = 0, ny_ = 0;
  double res_ = 0.05, inv_res_ = 20.0;
  Pose2D origin_;
  double cos0_ = 1.0, sin0_ = 0.0;
  std::vector<uint8_t> cells_;  // CellState values, row cy=0 first

  void finish_init();
};

// Exposed for tests: threshold an 8-bit pixel into a cell state.
CellState classify_pixel(uint8_t pixel, const MapMetadata& m);

}  // namespace trackloc
