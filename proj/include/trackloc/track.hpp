#pragma once
#include <string>
#include <vector>

#include "trackloc/grid.hpp"

namespace trackloc {

struct RacePoint {
  double x = 0.0, y = 0.0;
  double v = 0.0;  // target speed (m/s)
};

struct TrackParams {
  double straight_len = 14.0;  // length of each straight (m)
  double radius = 3.0;         // centerline radius of the end arcs (m)
  double width = 3.0;          // corridor width (m)
  double resolution = 0.05;    // map resolution (m/cell)
  double wall_thickness = 0.10;
  double margin = 0.4;         // unknown padding outside the walls (m)
  double v_max = 7.6;          // speed cap for the raceline profile (m/s)
  double a_lat = 4.0;          // lateral accel bound -> corner speeds
  double a_long = 4.0;         // accel/brake bound for profile smoothing
  double point_spacing = 0.25; // raceline sample spacing (m)
};

TrackParams oval_params();
TrackParams hairpin_params();

struct Track {
  OccupancyGrid map;
  std::vector<RacePoint> raceline;    // closed: first point repeated last
  std::vector<RacePoint> centerline;  // same shape, speed column included
  double raceline_length = 0.0;
};

// Stadium circuit: two straights joined by half-circle ends. The corridor is
// FREE, walls OCCUPIED, everything beyond UNKNOWN. The raceline follows the
// centerline with a curvature-limited, accel-smoothed speed profile.
Track gen_stadium(const TrackParams& p);

// Bundle I/O: map.pgm + map.yaml + raceline.csv + centerline.csv in `dir`.
void save_track(const Track& t, const std::string& dir);
Track load_track(const std::string& dir);

// CSV helpers (header "x,y,v", one point per row).
void save_raceline_csv(const std::vector<RacePoint>& line,
                       const std::string& path);
std::vector<RacePoint> load_raceline_csv(const std::string& path);

// Arc-length projection helpers over the closed raceline polyline.
struct RacelineProjection {
  double s = 0.0;        // arc length of the closest point
  double lateral = 0.0;  // unsigned distance to the polyline
  int segment = 0;
  double v = 0.0;        // interpolated target speed
};
class RacelineIndex {
 public:
  explicit RacelineIndex(const std::vector<RacePoint>& line);
  RacelineProjection project(double x, double y) const;
  // point at arc length s (wraps)
  RacePoint at(double s) const;
  double length() const { return total_; }

 private:
  std::vector<RacePoint> pts_;
  std::vector<double> cum_;  // cumulative arc length per vertex
  double total_ = 0.0;
};

}  // namespace trackloc
