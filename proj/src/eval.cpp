#include "trackloc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <omp.h>

#include "trackloc/errors.hpp"

namespace trackloc {

namespace {

constexpr double kInf = 1e20;

// 1D squared-distance transform (lower envelope of parabolas)
void dt1d(const std::vector<double>& f, int n, std::vector<double>& d,
          std::vector<int>& v, std::vector<double>& z) {
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      int p = v[k];
      s = ((f[q] + q * static_cast<double>(q)) -
           (f[p] + p * static_cast<double>(p))) /
          (2.0 * (q - p));
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    int p = v[k];
    d[q] = (q - p) * static_cast<double>(q - p) + f[p];
  }
}

}  // namespace

DistanceField DistanceField::build(const OccupancyGrid& g) {
  DistanceField df;
  df.nx_ = g.nx();
  df.ny_ = g.ny();
  df.origin_ = g.origin();
  df.inv_res_ = 1.0 / g.resolution();
  df.cos0_ = std::cos(g.origin().theta);
  df.sin0_ = std::sin(g.origin().theta);

  int nx = df.nx_, ny = df.ny_;
  std::vector<double> sq(static_cast<size_t>(nx) * ny);
  for (int cy = 0; cy < ny; ++cy)
    for (int cx = 0; cx < nx; ++cx)
      sq[static_cast<size_t>(cy) * nx + cx] =
          g.state(cx, cy) == CellState::OCCUPIED ? 0.0 : kInf;

  int nmax = std::max(nx, ny);
  std::vector<double> f(nmax), d(nmax), z(nmax + 1);
  std::vector<int> v(nmax);

  for (int cy = 0; cy < ny; ++cy) {  // rows
    for (int cx = 0; cx < nx; ++cx)
      f[cx] = sq[static_cast<size_t>(cy) * nx + cx];
    dt1d(f, nx, d, v, z);
    for (int cx = 0; cx < nx; ++cx)
      sq[static_cast<size_t>(cy) * nx + cx] = d[cx];
  }
  for (int cx = 0; cx < nx; ++cx) {  // columns
    for (int cy = 0; cy < ny; ++cy)
      f[cy] = sq[static_cast<size_t>(cy) * nx + cx];
    dt1d(f, ny, d, v, z);
    for (int cy = 0; cy < ny; ++cy)
      sq[static_cast<size_t>(cy) * nx + cx] = d[cy];
  }

  df.dist_.resize(sq.size());
  double res = g.resolution();
  for (size_t i = 0; i < sq.size(); ++i)
    df.dist_[i] = sq[i] >= kInf ? 1e18 : std::sqrt(sq[i]) * res;
  return df;
}

double scan_alignment(const Pose2D& pose, const ScanFrame& scan,
                      const DistanceField& dfield, const Pose2D& lidar_offset,
                      double tolerance, int stride) {
  if (stride < 1) stride = 1;
  Pose2D sp = compose(pose, lidar_offset);
  int considered = 0, aligned = 0;
  double cutoff = scan.range_max - 1e-6;
  for (int i = 0; i < scan.beams(); i += stride) {
    double r = scan.ranges[i];
    if (r >= cutoff) continue;  // non-returns carry no wall evidence
    double a = sp.theta + scan.bearing(i);
    double ex = sp.x + r * std::cos(a), ey = sp.y + r * std::sin(a);
    ++considered;
    if (dfield.at_world(ex, ey) <= tolerance) ++aligned;
  }
  return considered > 0 ? static_cast<double>(aligned) / considered : 0.0;
}

double lateral_error(double x, double y, const std::vector<RacePoint>& line) {
  RacelineIndex idx(line);
  return idx.project(x, y).lateral;
}

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.n = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / xs.size());
  return s;
}

double percentile(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  q = std::clamp(q, 0.0, 100.0);
  // nearest-rank: smallest value with at least q percent of the sample at or
  // below it; P(0) is the minimum
  auto rank = static_cast<size_t>(std::ceil(q / 100.0 * xs.size()));
  if (rank < 1) rank = 1;
  return xs[std::min(rank, xs.size()) - 1];
}

std::string host_descriptor() {
  std::string cpu = "unknown cpu";
  std::ifstream f("/proc/cpuinfo");
  std::string line;
  while (std::getline(f, line)) {
    if (line.rfind("model name", 0) == 0) {
      size_t colon = line.find(':');
      if (colon != std::string::npos) {
        size_t start = line.find_first_not_of(" \t", colon + 1);
        if (start != std::string::npos) cpu = line.substr(start);
      }
      break;
    }
  }
  return cpu + ", " + std::to_string(omp_get_max_threads()) + " threads";
}

LatencyReport bench_step_latency(ParticleFilter& pf, const MotionParams& mp,
                                 MotionModel model, const SensorModel& sm,
                                 const std::vector<ScanFrame>& scans,
                                 const std::vector<OdometryDelta>& deltas,
                                 int steps) {
  if (scans.empty() || deltas.empty() || steps < 1)
    throw ConfigError("latency bench needs scans, deltas, and steps >= 1");

  LatencyReport rep;
  rep.particles = pf.n();
  rep.scanlines = static_cast<int>(sm.lines.size());
  rep.ntheta = sm.lut ? sm.lut->ntheta() : 0;
  rep.steps = steps;
  rep.host = host_descriptor();

  std::vector<double> sensor_ms, step_ms, predict_ms, resample_ms, est_ms;
  sensor_ms.reserve(steps);
  step_ms.reserve(steps);
  predict_ms.reserve(steps);
  resample_ms.reserve(steps);
  est_ms.reserve(steps);

  for (int i = 0; i < steps; ++i) {
    StepTiming tm;
    pf.step(deltas[i % deltas.size()], mp, model, sm,
            scans[i % scans.size()], &tm);
    sensor_ms.push_back(tm.update_ms);
    step_ms.push_back(tm.total_ms);
    predict_ms.push_back(tm.predict_ms);
    resample_ms.push_back(tm.resample_ms);
    est_ms.push_back(tm.estimate_ms);
  }
  rep.sensor_p50_ms = percentile(sensor_ms, 50.0);
  rep.sensor_p99_ms = percentile(sensor_ms, 99.0);
  rep.step_p50_ms = percentile(step_ms, 50.0);
  rep.step_p99_ms = percentile(step_ms, 99.0);
  rep.predict_p50_ms = percentile(predict_ms, 50.0);
  rep.resample_p50_ms = percentile(resample_ms, 50.0);
  rep.estimate_p50_ms = percentile(est_ms, 50.0);
  return rep;
}

}  // namespace trackloc
