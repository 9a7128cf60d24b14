#include "trackloc/filter.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "trackloc/errors.hpp"

namespace trackloc {

namespace {
double ms_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}
// stream ids: one per (phase, step, particle) so phases never share draws
enum StreamPhase : uint64_t { kInit = 1, kPredict = 2, kResample = 3 };
uint64_t stream_id(uint64_t phase, uint64_t step, uint64_t particle) {
  return rng::split(rng::split(phase, step), particle);
}
}  // namespace

ParticleFilter::ParticleFilter(const FilterParams& p)
    : params_(p), seq_(p.seed, stream_id(kResample, 0, 0)) {
  if (p.n < 1) throw ConfigError("filter needs at least one particle");
  particles_.resize(p.n);
  logw_.assign(p.n, 0.0);
  weights_.assign(p.n, 1.0 / p.n);
}

void ParticleFilter::init_global(const OccupancyGrid& g) {
  std::vector<std::pair<int, int>> free_cells;
  free_cells.reserve(static_cast<size_t>(g.nx()) * g.ny() / 4);
  for (int cy = 0; cy < g.ny(); ++cy)
    for (int cx = 0; cx < g.nx(); ++cx)
      if (g.is_free(cx, cy)) free_cells.push_back({cx, cy});
  if (free_cells.empty())
    throw ConfigError("init_global: map has no FREE cells");

  rng::Stream rs(params_.seed, stream_id(kInit, step_count_, 0));
  double res = g.resolution();
  for (auto& p : particles_) {
    auto [cx, cy] = free_cells[rs.uniform_int(free_cells.size())];
    double wx, wy;
    g.grid_to_world(cx, cy, wx, wy);
    // uniform inside the chosen cell
    p.x = wx + res * (rs.uniform() - 0.5);
    p.y = wy + res * (rs.uniform() - 0.5);
    p.theta = rs.uniform(-kPi, kPi);
  }
  std::fill(weights_.begin(), weights_.end(), 1.0 / particles_.size());
  lost_ = false;
  ess_ = static_cast<double>(particles_.size());
}

void ParticleFilter::init_pose(const Pose2D& center) {
  rng::Stream rs(params_.seed, stream_id(kInit, step_count_, 1));
  for (auto& p : particles_) {
    p.x = center.x + params_.init_sigma_xy * rs.normal();
    p.y = center.y + params_.init_sigma_xy * rs.normal();
    p.theta = wrap_angle(center.theta + params_.init_sigma_theta * rs.normal());
  }
  std::fill(weights_.begin(), weights_.end(), 1.0 / particles_.size());
  lost_ = false;
  ess_ = static_cast<double>(particles_.size());
}

void ParticleFilter::predict(const OdometryDelta& d, const MotionParams& m,
                             MotionModel model) {
  ++step_count_;
  const int n = static_cast<int>(particles_.size());
  const uint64_t seed = params_.seed, step = step_count_;
  Pose2D* ps = particles_.data();
#pragma omp parallel for schedule(static) if (params_.parallel)
  for (int i = 0; i < n; ++i) {
    rng::Stream rs(seed, stream_id(kPredict, step, static_cast<uint64_t>(i)));
    switch (model) {
      case MotionModel::naive: ps[i] = sample_naive(ps[i], d, m, rs); break;
      case MotionModel::diff_drive:
        ps[i] = sample_diff_drive(ps[i], d, m, rs);
        break;
      case MotionModel::tum: ps[i] = sample_tum(ps[i], d, m, rs); break;
    }
  }
}

void ParticleFilter::normalize_from_logs() {
  const int n = static_cast<int>(particles_.size());
  double maxw = logw_[0];
  for (int i = 1; i < n; ++i) maxw = std::max(maxw, logw_[i]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    weights_[i] = std::exp(logw_[i] - maxw);
    sum += weights_[i];
  }
  double inv = 1.0 / sum;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    weights_[i] *= inv;
    sq += weights_[i] * weights_[i];
  }
  ess_ = 1.0 / sq;
}

bool ParticleFilter::update(const SensorModel& sm, const ScanFrame& scan) {
  const int n = static_cast<int>(particles_.size());
  std::vector<int> mbins = sm.bin_measurements(scan);
  const Pose2D* ps = particles_.data();
  double* lw = logw_.data();
#pragma omp parallel for schedule(static) if (params_.parallel)
  for (int i = 0; i < n; ++i) lw[i] = sm.weigh(ps[i], mbins);

  // weights persist between resamples: fold the previous normalized weight in
  bool all_floor = true;
  for (int i = 0; i < n; ++i) {
    if (lw[i] > sm.floor_logw) all_floor = false;
    lw[i] += std::log(std::max(weights_[i], 1e-300));
  }
  lost_ = all_floor;
  if (lost_) {
    std::fill(weights_.begin(), weights_.end(), 1.0 / n);
    ess_ = static_cast<double>(n);
  } else {
    normalize_from_logs();
  }
  return lost_;
}

std::vector<int> systematic_resample_indices(const std::vector<double>& w,
                                             int n, double u01) {
  std::vector<int> idx(n);
  double u = u01 / n;
  double cum = w.empty() ? 0.0 : w[0];
  int j = 0;
  const int m = static_cast<int>(w.size());
  for (int i = 0; i < n; ++i) {
    double target = u + static_cast<double>(i) / n;
    while (cum < target && j + 1 < m) cum += w[++j];
    idx[i] = j;
  }
  return idx;
}

bool ParticleFilter::maybe_resample() {
  const int n = static_cast<int>(particles_.size());
  if (ess_ >= params_.resample_ess_frac * n) return false;
  std::vector<int> idx = systematic_resample_indices(weights_, n,
                                                     seq_.uniform());
  std::vector<Pose2D> next(n);
  for (int i = 0; i < n; ++i) next[i] = particles_[idx[i]];
  particles_.swap(next);
  std::fill(weights_.begin(), weights_.end(), 1.0 / n);
  ess_ = static_cast<double>(n);
  return true;
}

PoseEstimate ParticleFilter::estimate() const {
  const int n = static_cast<int>(particles_.size());
  PoseEstimate e;
  e.ess = ess_;
  e.lost = lost_;
  double sx = 0.0, sy = 0.0, sc = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    double w = weights_[i];
    sx += w * particles_[i].x;
    sy += w * particles_[i].y;
    sc += w * std::cos(particles_[i].theta);
    ss += w * std::sin(particles_[i].theta);
  }
  e.mean.x = sx;
  e.mean.y = sy;
  e.mean.theta = wrap_angle(std::atan2(ss, sc));

  for (int i = 0; i < n; ++i) {
    double w = weights_[i];
    double rx = particles_[i].x - e.mean.x;
    double ry = particles_[i].y - e.mean.y;
    double rt = angle_diff(particles_[i].theta, e.mean.theta);
    e.cov[0] += w * rx * rx;
    e.cov[1] += w * rx * ry;
    e.cov[2] += w * rx * rt;
    e.cov[4] += w * ry * ry;
    e.cov[5] += w * ry * rt;
    e.cov[8] += w * rt * rt;
  }
  e.cov[3] = e.cov[1];
  e.cov[6] = e.cov[2];
  e.cov[7] = e.cov[5];
  return e;
}

PoseEstimate ParticleFilter::step(const OdometryDelta& d,
                                  const MotionParams& m, MotionModel model,
                                  const SensorModel& sm, const ScanFrame& scan,
                                  StepTiming* timing) {
  auto t0 = std::chrono::steady_clock::now();
  predict(d, m, model);
  double t_predict = ms_since(t0);

  auto t1 = std::chrono::steady_clock::now();
  update(sm, scan);
  double t_update = ms_since(t1);

  auto t2 = std::chrono::steady_clock::now();
  bool resampled = maybe_resample();
  double t_resample = ms_since(t2);

  auto t3 = std::chrono::steady_clock::now();
  PoseEstimate est = estimate();
  double t_estimate = ms_since(t3);

  if (timing) {
    timing->predict_ms = t_predict;
    timing->update_ms = t_update;
    timing->resample_ms = t_resample;
    timing->estimate_ms = t_estimate;
    timing->total_ms = ms_since(t0);
    timing->resampled = resampled;
  }
  return est;
}

}  // namespace trackloc
