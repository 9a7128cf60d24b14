#include "trackloc/track.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "trackloc/angles.hpp"
#include "trackloc/errors.hpp"

namespace trackloc {

TrackParams oval_params() { return TrackParams{}; }

TrackParams hairpin_params() {
  TrackParams p;
  p.straight_len = 16.0;
  p.radius = 1.6;
  p.width = 2.4;
  return p;
}

namespace {

// stadium centerline = points at distance `radius` from the spine segment
// between (-L/2, 0) and (L/2, 0)
double dist_to_spine(double x, double y, double half_len) {
  double cx = std::clamp(x, -half_len, half_len);
  return std::hypot(x - cx, y);
}

// walk the centerline at arc length s, starting at the middle of the bottom
// straight (heading +x), counterclockwise
void centerline_at(double s, double half_len, double r, double& x, double& y,
                   double& curvature) {
  double straight = 2.0 * half_len;
  double arc = kPi * r;
  double total = 2.0 * straight + 2.0 * arc;
  s = std::fmod(s, total);
  if (s < 0) s += total;

  if (s < half_len) {  // bottom straight, right half
    x = s;
    y = -r;
    curvature = 0.0;
    return;
  }
  s -= half_len;
  if (s < arc) {  // right end arc
    double a = s / r;  // 0 at bottom
    x = half_len + r * std::sin(a);
    y = -r * std::cos(a);
    curvature = 1.0 / r;
    return;
  }
  s -= arc;
  if (s < straight) {  // top straight
    x = half_len - s;
    y = r;
    curvature = 0.0;
    return;
  }
  s -= straight;
  if (s < arc) {  // left end arc
    double a = s / r;
    x = -half_len - r * std::sin(a);
    y = r * std::cos(a);
    curvature = 1.0 / r;
    return;
  }
  s -= arc;  // bottom straight, left half
  x = -half_len + s;
  y = -r;
  curvature = 0.0;
}

}  // namespace

Track gen_stadium(const TrackParams& p) {
  if (p.width <= 0 || p.radius <= p.width / 2.0)
    throw ConfigError("gen_stadium: radius must exceed half the width");

  double half_len = p.straight_len / 2.0;
  double res = p.resolution;
  double half_w = p.width / 2.0;
  double outer = p.radius + half_w + p.wall_thickness + p.margin;
  double min_x = -half_len - outer, max_x = half_len + outer;
  double min_y = -outer, max_y = outer;
  int nx = static_cast<int>(std::ceil((max_x - min_x) / res));
  int ny = static_cast<int>(std::ceil((max_y - min_y) / res));

  Pose2D origin{min_x, min_y, 0.0};
  std::vector<CellState> cells(static_cast<size_t>(nx) * ny,
                               CellState::UNKNOWN);
  for (int cy = 0; cy < ny; ++cy) {
    for (int cx = 0; cx < nx; ++cx) {
      double wx = min_x + (cx + 0.5) * res;
      double wy = min_y + (cy + 0.5) * res;
      double d = std::abs(dist_to_spine(wx, wy, half_len) - p.radius);
      CellState s = CellState::UNKNOWN;
      if (d < half_w)
        s = CellState::FREE;
      else if (d <= half_w + p.wall_thickness)
        s = CellState::OCCUPIED;
      cells[static_cast<size_t>(cy) * nx + cx] = s;
    }
  }

  Track t;
  t.map = OccupancyGrid::from_states(nx, ny, res, origin, std::move(cells));

  // sample the centerline and build the speed profile
  double straight = 2.0 * half_len, arc = kPi * p.radius;
  double total = 2.0 * straight + 2.0 * arc;
  int npts = std::max(8, static_cast<int>(std::round(total / p.point_spacing)));
  double ds = total / npts;

  std::vector<RacePoint> line(npts);
  std::vector<double> vmax(npts);
  for (int i = 0; i < npts; ++i) {
    double curvature;
    centerline_at(i * ds, half_len, p.radius, line[i].x, line[i].y, curvature);
    double v = p.v_max;
    if (curvature > 0.0) v = std::min(v, std::sqrt(p.a_lat / curvature));
    vmax[i] = v;
  }
  // backward pass (braking) then forward pass (acceleration); run each twice
  // so the limits propagate across the wrap point
  std::vector<double> v(vmax);
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 2 * npts - 1; i >= 0; --i) {
      int j = i % npts, k = (j + 1) % npts;
      v[j] = std::min(v[j], std::sqrt(v[k] * v[k] + 2.0 * p.a_long * ds));
    }
    for (int i = 0; i < 2 * npts; ++i) {
      int j = i % npts, k = (j - 1 + npts) % npts;
      v[j] = std::min(v[j], std::sqrt(v[k] * v[k] + 2.0 * p.a_long * ds));
    }
  }
  for (int i = 0; i < npts; ++i) line[i].v = v[i];
  line.push_back(line.front());  // close the loop

  t.raceline = line;
  t.centerline = line;
  t.raceline_length = total;
  return t;
}

void save_raceline_csv(const std::vector<RacePoint>& line,
                       const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << "x,y,v\n";
  char buf[96];
  for (const auto& p : line) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f\n", p.x, p.y, p.v);
    f << buf;
  }
}

std::vector<RacePoint> load_raceline_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::string header;
  std::getline(f, header);
  if (header.rfind("x,y,v", 0) != 0)
    throw IoError("bad raceline header in " + path);
  std::vector<RacePoint> out;
  std::string row;
  int lineno = 1;
  while (std::getline(f, row)) {
    ++lineno;
    if (row.empty()) continue;
    RacePoint p;
    char extra;
    std::istringstream ss(row);
    char c1, c2;
    if (!(ss >> p.x >> c1 >> p.y >> c2 >> p.v) || c1 != ',' || c2 != ',' ||
        (ss >> extra))
      throw IoError("bad raceline row at " + path + ":" +
                    std::to_string(lineno));
    out.push_back(p);
  }
  if (out.size() < 3) throw IoError("raceline too short: " + path);
  return out;
}

void save_track(const Track& t, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::filesystem::path d(dir);
  t.map.save_pgm((d / "map.pgm").string());
  t.map.save_metadata((d / "map.yaml").string(), "map.pgm");
  save_raceline_csv(t.raceline, (d / "raceline.csv").string());
  save_raceline_csv(t.centerline, (d / "centerline.csv").string());
}

Track load_track(const std::string& dir) {
  std::filesystem::path d(dir);
  Track t;
  t.map = OccupancyGrid::load((d / "map.yaml").string());
  t.raceline = load_raceline_csv((d / "raceline.csv").string());
  std::string cpath = (d / "centerline.csv").string();
  t.centerline = std::filesystem::exists(cpath) ? load_raceline_csv(cpath)
                                                : t.raceline;
  double len = 0.0;
  for (size_t i = 1; i < t.raceline.size(); ++i)
    len += std::hypot(t.raceline[i].x - t.raceline[i - 1].x,
                      t.raceline[i].y - t.raceline[i - 1].y);
  t.raceline_length = len;
  return t;
}

RacelineIndex::RacelineIndex(const std::vector<RacePoint>& line)
    : pts_(line) {
  if (pts_.size() < 2) throw ConfigError("raceline needs at least 2 points");
  cum_.resize(pts_.size(), 0.0);
  for (size_t i = 1; i < pts_.size(); ++i)
    cum_[i] = cum_[i - 1] + std::hypot(pts_[i].x - pts_[i - 1].x,
                                       pts_[i].y - pts_[i - 1].y);
  total_ = cum_.back();
}

RacelineProjection RacelineIndex::project(double x, double y) const {
  RacelineProjection best;
  best.lateral = 1e18;
  for (size_t i = 0; i + 1 < pts_.size(); ++i) {
    double ax = pts_[i].x, ay = pts_[i].y;
    double bx = pts_[i + 1].x, by = pts_[i + 1].y;
    double vx = bx - ax, vy = by - ay;
    double len2 = vx * vx + vy * vy;
    double u = len2 > 0 ? ((x - ax) * vx + (y - ay) * vy) / len2 : 0.0;
    u = std::clamp(u, 0.0, 1.0);
    double px = ax + u * vx, py = ay + u * vy;
    double d = std::hypot(x - px, y - py);
    if (d < best.lateral) {
      best.lateral = d;
      best.segment = static_cast<int>(i);
      best.s = cum_[i] + u * std::sqrt(len2);
      best.v = pts_[i].v + u * (pts_[i + 1].v - pts_[i].v);
    }
  }
  return best;
}

RacePoint RacelineIndex::at(double s) const {
  s = std::fmod(s, total_);
  if (s < 0) s += total_;
  auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
  size_t i = std::min(pts_.size() - 2,
                      static_cast<size_t>(std::max<std::ptrdiff_t>(
                          0, it - cum_.begin() - 1)));
  double seg = cum_[i + 1] - cum_[i];
  double u = seg > 0 ? (s - cum_[i]) / seg : 0.0;
  RacePoint p;
  p.x = pts_[i].x + u * (pts_[i + 1].x - pts_[i].x);
  p.y = pts_[i].y + u * (pts_[i + 1].y - pts_[i].y);
  p.v = pts_[i].v + u * (pts_[i + 1].v - pts_[i].v);
  return p;
}

}  // namespace trackloc
