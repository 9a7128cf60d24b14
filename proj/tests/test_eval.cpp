#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "trackloc/errors.hpp"
#include "trackloc/eval.hpp"
#include "trackloc/raycast.hpp"
#include "trackloc/sensor.hpp"
#include "trackloc/sim.hpp"

using namespace trackloc;

namespace {

OccupancyGrid box_room(int nx, int ny, double res) {
  std::vector<CellState> st(static_cast<size_t>(nx) * ny, CellState::FREE);
  for (int cx = 0; cx < nx; ++cx) {
    st[cx] = CellState::OCCUPIED;
    st[static_cast<size_t>(ny - 1) * nx + cx] = CellState::OCCUPIED;
  }
  for (int cy = 0; cy < ny; ++cy) {
    st[static_cast<size_t>(cy) * nx] = CellState::OCCUPIED;
    st[static_cast<size_t>(cy) * nx + nx - 1] = CellState::OCCUPIED;
  }
  return OccupancyGrid::from_states(nx, ny, res, Pose2D{}, st);
}

ScanFrame exact_scan(const OccupancyGrid& g, const Pose2D& pose, int beams,
                     double fov, double range_max) {
  ScanFrame s = make_scan_frame(beams, fov, range_max);
  for (int i = 0; i < beams; ++i) {
    double r = cast_exact(g, pose.x, pose.y, pose.theta + s.bearing(i),
                          range_max);
    s.ranges[static_cast<size_t>(i)] = static_cast<float>(r);
  }
  return s;
}

}  // namespace

TEST_CASE("distance field matches a brute-force sweep") {
  const int nx = 24, ny = 17;
  const double res = 0.1;
  std::vector<CellState> st(static_cast<size_t>(nx) * ny, CellState::FREE);
  std::vector<std::pair<int, int>> occ;
  uint32_t x = 12345;
  for (int k = 0; k < 25; ++k) {  // scattered deterministic obstacles
    x = x * 1664525u + 1013904223u;
    int cx = static_cast<int>((x >> 8) % nx);
    int cy = static_cast<int>((x >> 20) % ny);
    st[static_cast<size_t>(cy) * nx + cx] = CellState::OCCUPIED;
    occ.push_back({cx, cy});
  }
  // UNKNOWN must not act as an obstacle
  st[5] = st[6] = CellState::UNKNOWN;

  OccupancyGrid g = OccupancyGrid::from_states(nx, ny, res, Pose2D{}, st);
  DistanceField df = DistanceField::build(g);
  for (int cy = 0; cy < ny; ++cy)
    for (int cx = 0; cx < nx; ++cx) {
      double best = 1e18;
      for (auto [ox, oy] : occ)
        best = std::min(best, res * std::hypot(cx - ox, cy - oy));
      CHECK(df.at_cell(cx, cy) == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("distance field: no obstacles means no finite distances") {
  OccupancyGrid g = OccupancyGrid::from_states(
      6, 6, 0.1, Pose2D{},
      std::vector<CellState>(36, CellState::FREE));
  DistanceField df = DistanceField::build(g);
  CHECK(df.at_cell(3, 3) >= 1e17);
  CHECK(df.at_world(-1.0, 0.0) >= 1e17);  // off the map
}

TEST_CASE("distance field respects a rotated map origin") {
  std::vector<CellState> st(static_cast<size_t>(8) * 8, CellState::FREE);
  st[3 * 8 + 2] = CellState::OCCUPIED;  // cell (2, 3)
  double res = 0.1;
  Pose2D origin{5.0, 7.0, kPi / 2.0};
  OccupancyGrid g = OccupancyGrid::from_states(8, 8, res, origin, st);
  DistanceField df = DistanceField::build(g);

  auto world_of = [&](double lx, double ly) {
    return std::pair<double, double>{5.0 - ly, 7.0 + lx};
  };
  auto [wx0, wy0] = world_of(2.5 * res, 3.5 * res);  // occupied cell center
  CHECK(df.at_world(wx0, wy0) == doctest::Approx(0.0));
  auto [wx2, wy2] = world_of(2.5 * res, 5.5 * res);  // two cells up
  CHECK(df.at_world(wx2, wy2) == doctest::Approx(2.0 * res).epsilon(1e-12));
}

TEST_CASE("scan alignment: truth pose with an exact scan scores one") {
  OccupancyGrid g = box_room(120, 60, 0.05);
  DistanceField df = DistanceField::build(g);
  Pose2D pose{3.0, 1.5, 0.7};
  ScanFrame s = exact_scan(g, pose, 360, 2.0 * kPi, 10.0);
  CHECK(scan_alignment(pose, s, df, Pose2D{}, 0.1, 1) == 1.0);
  CHECK(scan_alignment(pose, s, df, Pose2D{}, 0.1, 4) == 1.0);
}

TEST_CASE("scan alignment: known mixed scan counts exactly") {
  OccupancyGrid g = box_room(120, 60, 0.05);
  DistanceField df = DistanceField::build(g);
  Pose2D pose{3.0, 1.5, 0.0};
  ScanFrame s = make_scan_frame(4, 2.0 * kPi, 10.0);
  for (int i = 0; i < 4; ++i) {
    double exact = cast_exact(g, pose.x, pose.y, pose.theta + s.bearing(i),
                              10.0);
    // odd beams stop halfway: endpoints in free space
    s.ranges[static_cast<size_t>(i)] =
        static_cast<float>(i % 2 == 0 ? exact : exact / 2.0);
  }
  CHECK(scan_alignment(pose, s, df, Pose2D{}, 0.1, 1) == 0.5);
  CHECK(scan_alignment(pose, s, df, Pose2D{}, 0.1, 2) == 1.0);  // beams 0, 2
}

TEST_CASE("scan alignment: a pose shifted off the wall scores zero") {
  OccupancyGrid g = box_room(200, 40, 0.05);  // 10 x 2 m corridor
  DistanceField df = DistanceField::build(g);
  Pose2D truth{5.0, 1.0, kPi / 2.0};  // narrow fan onto the top wall
  ScanFrame s = exact_scan(g, truth, 60, 0.6, 10.0);
  CHECK(scan_alignment(truth, s, df, Pose2D{}, 0.1, 1) == 1.0);
  Pose2D shifted{5.0, 0.8, kPi / 2.0};  // endpoints now 0.2 m short
  CHECK(scan_alignment(shifted, s, df, Pose2D{}, 0.1, 1) == 0.0);
}

TEST_CASE("scan alignment: a flipped heading in an asymmetric room is poor") {
  std::vector<CellState> st(static_cast<size_t>(120) * 60, CellState::FREE);
  OccupancyGrid box = box_room(120, 60, 0.05);
  for (int cy = 0; cy < 60; ++cy)
    for (int cx = 0; cx < 120; ++cx)
      st[static_cast<size_t>(cy) * 120 + cx] = box.state(cx, cy);
  for (int cy = 10; cy < 20; ++cy)  // block breaks the symmetry
    for (int cx = 20; cx < 30; ++cx)
      st[static_cast<size_t>(cy) * 120 + cx] = CellState::OCCUPIED;
  OccupancyGrid g = OccupancyGrid::from_states(120, 60, 0.05, Pose2D{}, st);
  DistanceField df = DistanceField::build(g);

  Pose2D pose{2.0, 1.0, 0.3};
  ScanFrame s = exact_scan(g, pose, 360, 2.0 * kPi, 10.0);
  CHECK(scan_alignment(pose, s, df, Pose2D{}, 0.1, 1) == 1.0);
  Pose2D flipped{2.0, 1.0, 0.3 + kPi};
  CHECK(scan_alignment(flipped, s, df, Pose2D{}, 0.1, 1) < 0.5);
}

TEST_CASE("scan alignment: max-range returns carry no evidence") {
  OccupancyGrid g = box_room(120, 60, 0.05);
  DistanceField df = DistanceField::build(g);
  ScanFrame s = make_scan_frame(10, 2.0 * kPi, 10.0);
  std::fill(s.ranges.begin(), s.ranges.end(), 10.0f);
  CHECK(scan_alignment(Pose2D{3, 1.5, 0}, s, df, Pose2D{}, 0.1, 1) == 0.0);
}

TEST_CASE("scan alignment: the score is invariant to the map frame") {
  // same occupancy lattice, one map at the identity and one translated and
  // rotated; poses composed with the frame shift must score identically
  const int nx = 80, ny = 50;
  const double res = 0.05;
  std::vector<CellState> st(static_cast<size_t>(nx) * ny, CellState::FREE);
  for (int cx = 0; cx < nx; ++cx) {
    st[cx] = CellState::OCCUPIED;
    st[static_cast<size_t>(ny - 1) * nx + cx] = CellState::OCCUPIED;
  }
  for (int cy = 0; cy < ny; ++cy) {
    st[static_cast<size_t>(cy) * nx] = CellState::OCCUPIED;
    st[static_cast<size_t>(cy) * nx + nx - 1] = CellState::OCCUPIED;
  }
  for (int cy = 20; cy < 28; ++cy)
    for (int cx = 50; cx < 55; ++cx)
      st[static_cast<size_t>(cy) * nx + cx] = CellState::OCCUPIED;

  OccupancyGrid a = OccupancyGrid::from_states(nx, ny, res, Pose2D{}, st);
  Pose2D shift{5.0, 7.0, kPi / 2.0};
  OccupancyGrid b = OccupancyGrid::from_states(nx, ny, res, shift, st);
  DistanceField da = DistanceField::build(a);
  DistanceField db = DistanceField::build(b);

  Pose2D pa{1.3, 0.9, 0.35};
  Pose2D pb = compose(shift, pa);
  Pose2D offset{0.1, 0.0, 0.0};
  ScanFrame s = exact_scan(a, compose(pa, offset), 90, 2.0 * kPi, 10.0);
  double va = scan_alignment(pa, s, da, offset, 0.1, 1);
  double vb = scan_alignment(pb, s, db, offset, 0.1, 1);
  CHECK(va == doctest::Approx(vb).epsilon(1e-12));
  CHECK(va > 0.9);
}

TEST_CASE("lateral error: distance to the polyline from either side") {
  std::vector<RacePoint> sq = {{0, 0, 1},
                               {10, 0, 1},
                               {10, 10, 1},
                               {0, 10, 1},
                               {0, 0, 1}};
  CHECK(lateral_error(5.0, 0.0, sq) == doctest::Approx(0.0));
  CHECK(lateral_error(5.0, 0.1, sq) == doctest::Approx(0.1));
  CHECK(lateral_error(5.0, -0.1, sq) == doctest::Approx(0.1));
  CHECK(lateral_error(11.0, -1.0, sq) == doctest::Approx(std::sqrt(2.0)));

  // brute force: densely sample the polyline, take the min distance
  auto brute = [&](double x, double y) {
    double best = 1e18;
    for (size_t i = 0; i + 1 < sq.size(); ++i) {
      double ax = sq[i].x, ay = sq[i].y;
      double bx = sq[i + 1].x, by = sq[i + 1].y;
      double len = std::hypot(bx - ax, by - ay);
      int steps = static_cast<int>(len / 0.001);
      for (int k = 0; k <= steps; ++k) {
        double u = static_cast<double>(k) / steps;
        best = std::min(best,
                        std::hypot(x - (ax + u * (bx - ax)),
                                   y - (ay + u * (by - ay))));
      }
    }
    return best;
  };
  for (auto [px, py] : std::vector<std::pair<double, double>>{
           {3.7, 2.1}, {9.4, 9.9}, {-0.5, 5.0}, {10.4, -0.2}, {5.0, 5.0}}) {
    CHECK(lateral_error(px, py, sq) ==
          doctest::Approx(brute(px, py)).epsilon(1e-3));
  }
}

TEST_CASE("summarize: population mean and spread") {
  Summary two = summarize({9.0, 9.4});
  CHECK(two.mean == doctest::Approx(9.2));
  CHECK(two.stddev == doctest::Approx(0.2));
  CHECK(two.n == 2);

  Summary one = summarize({5.5});
  CHECK(one.mean == doctest::Approx(5.5));
  CHECK(one.stddev == 0.0);
  CHECK(one.n == 1);

  Summary none = summarize({});
  CHECK(none.n == 0);
  CHECK(none.mean == 0.0);
}

TEST_CASE("percentile: nearest rank on a small sample") {
  std::vector<double> xs = {4, 1, 3, 2, 5, 6, 8, 7, 10, 9};  // any order
  CHECK(percentile(xs, 50.0) == 5.0);
  CHECK(percentile(xs, 90.0) == 9.0);
  CHECK(percentile(xs, 95.0) == 10.0);
  CHECK(percentile(xs, 0.0) == 1.0);
  CHECK(percentile(xs, 100.0) == 10.0);
  CHECK(percentile({3, 1, 2}, 50.0) == 2.0);
  CHECK(percentile({}, 50.0) == 0.0);
}

TEST_CASE("host descriptor names the cpu and thread count") {
  std::string h = host_descriptor();
  CHECK(!h.empty());
  CHECK(h.find("threads") != std::string::npos);
}

TEST_CASE("latency bench: dimensions echoed, inputs validated, scaling") {
  OccupancyGrid g = box_room(120, 60, 0.05);
  LutParams lp;
  lp.ntheta = 36;
  RangeLUT lut = RangeLUT::build(g, lp);
  BeamModelTable table = BeamModelTable::build(BeamModelParams{}, 0.05, 10.0);
  Pose2D truth{3.0, 1.5, 0.7};

  ScanFrame probe = make_scan_frame(360, deg2rad(270.0), 10.0);
  SensorModel sm;
  sm.lut = &lut;
  sm.table = &table;
  sm.lines = layout_uniform(360, probe.angle_min, probe.angle_increment, 30);

  std::vector<ScanFrame> scans;
  for (int k = 0; k < 3; ++k)
    scans.push_back(exact_scan(g, truth, 360, deg2rad(270.0), 10.0));
  std::vector<OdometryDelta> deltas(3);

  MotionParams mp;
  mp.sigma_xy = 0.01;
  mp.sigma_theta = 0.01;

  auto bench_at = [&](int n, const SensorModel& model) {
    FilterParams fp;
    fp.n = n;
    ParticleFilter pf(fp);
    pf.init_pose(truth);
    return bench_step_latency(pf, mp, MotionModel::naive, model, scans,
                              deltas, 25);
  };

  LatencyReport r2k = bench_at(2000, sm);
  CHECK(r2k.particles == 2000);
  CHECK(r2k.scanlines == 30);
  CHECK(r2k.ntheta == 36);
  CHECK(r2k.steps == 25);
  CHECK(!r2k.host.empty());
  CHECK(r2k.sensor_p50_ms > 0.0);
  CHECK(r2k.sensor_p99_ms >= r2k.sensor_p50_ms);
  CHECK(r2k.step_p99_ms >= r2k.step_p50_ms);
  CHECK(r2k.step_p50_ms >= r2k.sensor_p50_ms);  // the step contains the update

  // the sensor phase is linear in the particle count
  LatencyReport r4k = bench_at(4000, sm);
  double ratio = r4k.sensor_p50_ms / r2k.sensor_p50_ms;
  CHECK(ratio > 1.4);
  CHECK(ratio < 2.7);

  // the table-lookup backend beats exact ray marching
  SensorModel exact = sm;
  exact.lut = nullptr;
  exact.grid = &g;
  LatencyReport rex = bench_at(2000, exact);
  CHECK(rex.ntheta == 0);
  CHECK(rex.sensor_p50_ms > r2k.sensor_p50_ms);

  FilterParams fp;
  fp.n = 100;
  ParticleFilter pf(fp);
  pf.init_pose(truth);
  CHECK_THROWS_AS(
      bench_step_latency(pf, mp, MotionModel::naive, sm, {}, deltas, 10),
      ConfigError);
  CHECK_THROWS_AS(
      bench_step_latency(pf, mp, MotionModel::naive, sm, scans, {}, 10),
      ConfigError);
  CHECK_THROWS_AS(
      bench_step_latency(pf, mp, MotionModel::naive, sm, scans, deltas, 0),
      ConfigError);
}
