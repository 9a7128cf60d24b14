#include "trackloc/sensor.hpp"

#include <algorithm>
#include <cmath>

#include "trackloc/errors.hpp"

namespace trackloc {

ScanFrame make_scan_frame(int beams, double fov, double range_max) {
  ScanFrame s;
  s.angle_increment = fov / beams;
  s.angle_min = -fov / 2.0;
  s.range_max = range_max;
  s.ranges.assign(beams, static_cast<float>(range_max));
  return s;
}

std::vector<Scanline> layout_uniform(int beams, double angle_min,
                                     double angle_increment, int K) {
  if (K < 1 || K > beams)
    throw ConfigError("layout_uniform: K must be in [1, beams]");
  std::vector<Scanline> out;
  out.reserve(K);
  if (K == 1) {
    int idx = beams / 2;
    out.push_back({idx, angle_min + idx * angle_increment});
    return out;
  }
  double stride = static_cast<double>(beams - 1) / (K - 1);
  int prev = -1;
  for (int i = 0; i < K; ++i) {
    int idx = static_cast<int>(std::lround(i * stride));
    if (idx <= prev) idx = prev + 1;  // guard against rounding collisions
    prev = idx;
    out.push_back({idx, angle_min + idx * angle_increment});
  }
  return out;
}

namespace {

// Perimeter geometry of the scan box: unit length along the facing axis,
// width = aspect. Arc length s is measured from the forward-axis midpoint
// (+x face center), positive toward +y; s covers [0, 1 + aspect] over the
// upper half. Points for negative s mirror in y.

struct BoxWalk {
  double hl, hw;  // half length, half width
  double half_perimeter() const { return 2.0 * hl + 2.0 * hw; }

  void point_at(double s, double& px, double& py) const {
    double a = std::abs(s);
    if (a <= hw) {
      px = hl;
      py = a;
    } else if (a <= hw + 2.0 * hl) {
      px = hl - (a - hw);
      py = hw;
    } else {
      px = -hl;
      py = hw - (a - hw - 2.0 * hl);
    }
    if (s < 0.0) py = -py;
  }

  // arc length of the perimeter crossing in direction phi, phi in [0, pi]
  double arc_of_bearing(double phi) const {
    double corner_front = std::atan2(hw, hl);
    double corner_back = std::atan2(hw, -hl);
    if (phi <= corner_front) return hl * std::tan(phi);
    if (phi < corner_back) {
      double x = hw * std::cos(phi) / std::sin(phi);
      return hw + (hl - x);
    }
    double y = -hl * std::tan(phi);
    return hw + 2.0 * hl + (hw - y);
  }
};

}  // namespace

std::vector<Scanline> layout_boxed(int beams, double angle_min,
                                   double angle_increment, int K,
                                   double aspect) {
  if (K < 1 || K > beams)
    throw ConfigError("layout_boxed: K must be in [1, beams]");
  if (aspect <= 0.0) throw ConfigError("layout_boxed: aspect must be > 0");

  BoxWalk box{0.5, aspect / 2.0};
  double span = beams * angle_increment;
  bool full_circle = span >= 2.0 * kPi - 1e-9;
  double angle_max = angle_min + (beams - 1) * angle_increment;
  double phi_lim =
      full_circle ? kPi : std::min({-angle_min, angle_max, kPi});
  if (phi_lim <= 0.0)
    throw ConfigError("layout_boxed: field of view does not cover forward");

  double s_vis = box.arc_of_bearing(phi_lim);
  double d = 2.0 * s_vis / K;

  // walk order: 0, +d, -d, +2d, -2d, ...; even K ends on +K/2*d
  std::vector<double> offsets;
  offsets.reserve(K);
  offsets.push_back(0.0);
  for (int j = 1; static_cast<int>(offsets.size()) < K; ++j) {
    offsets.push_back(j * d);
    if (static_cast<int>(offsets.size()) < K) offsets.push_back(-j * d);
  }

  std::vector<char> taken(beams, 0);
  std::vector<int> picked;
  picked.reserve(K);
  for (double s : offsets) {
    double px, py;
    box.point_at(s, px, py);
    double bearing = std::atan2(py, px);
    int idx;
    if (full_circle) {
      double rel = bearing - angle_min;
      rel -= 2.0 * kPi * std::floor(rel / (2.0 * kPi));
      idx = static_cast<int>(std::lround(rel / angle_increment)) % beams;
    } else {
      double clamped = std::clamp(bearing, angle_min, angle_max);
      idx = static_cast<int>(std::lround((clamped - angle_min) /
                                         angle_increment));
      idx = std::clamp(idx, 0, beams - 1);
    }
    // duplicate: advance to the next free index
    int tries = 0;
    while (taken[idx] && tries < beams) {
      idx = full_circle ? (idx + 1) % beams : idx + 1;
      if (!full_circle && idx >= beams) break;
      ++tries;
    }
    if (idx >= beams || taken[idx]) {
      // walked off the top edge: search downward instead
      idx = std::min(idx, beams - 1);
      while (idx >= 0 && taken[idx]) --idx;
      if (idx < 0) throw ConfigError("layout_boxed: no free beam index left");
    }
    taken[idx] = 1;
    picked.push_back(idx);
  }

  std::sort(picked.begin(), picked.end());
  std::vector<Scanline> out;
  out.reserve(K);
  for (int idx : picked)
    out.push_back({idx, angle_min + idx * angle_increment});
  return out;
}

BeamModelTable BeamModelTable::build(const BeamModelParams& p,
                                     double bin_width, double max_range) {
  if (bin_width <= 0.0 || max_range <= 0.0)
    throw ConfigError("beam model: bin_width and max_range must be > 0");
  if (p.z_hit < 0 || p.z_short < 0 || p.z_max < 0 || p.z_rand < 0 ||
      p.sigma_hit <= 0 || p.lambda_short <= 0)
    throw ConfigError("beam model: negative mixture weight or scale");
  if (p.z_hit + p.z_short + p.z_max + p.z_rand <= 0.0)
    throw ConfigError("beam model: mixture weights sum to zero");

  BeamModelTable t;
  t.bin_w_ = bin_width;
  t.nbins_ = static_cast<int>(std::lround(max_range / bin_width)) + 1;
  int n = t.nbins_;
  t.p_.assign(static_cast<size_t>(n) * n, 0.0);

  std::vector<double> col(n);
  for (int e = 0; e < n; ++e) {
    double ze = e * bin_width;

    // hit: Gaussian around the expected bin, normalized over the column
    double hit_norm = 0.0;
    for (int m = 0; m < n; ++m) {
      double dz = m * bin_width - ze;
      col[m] = std::exp(-dz * dz / (2.0 * p.sigma_hit * p.sigma_hit));
      hit_norm += col[m];
    }

    // short: exponential in measured range, only below the expected range
    double short_norm = 0.0;
    std::vector<double> shorts(n, 0.0);
    for (int m = 0; m < e; ++m) {
      shorts[m] = p.lambda_short *
                  std::exp(-p.lambda_short * m * bin_width);
      short_norm += shorts[m];
    }

    double sum = 0.0;
    for (int m = 0; m < n; ++m) {
      double v = 0.0;
      if (hit_norm > 0.0) v += p.z_hit * col[m] / hit_norm;
      if (short_norm > 0.0) v += p.z_short * shorts[m] / short_norm;
      if (m == n - 1) v += p.z_max;
      v += p.z_rand / n;
      t.p_[static_cast<size_t>(m) * n + e] = v;
      sum += v;
    }
    if (sum <= 0.0)
      throw ConfigError("beam model: column " + std::to_string(e) +
                        " is not normalizable");
    for (int m = 0; m < n; ++m) t.p_[static_cast<size_t>(m) * n + e] /= sum;
  }

  t.logp_.resize(t.p_.size());
  for (size_t i = 0; i < t.p_.size(); ++i)
    t.logp_[i] = std::log(std::max(t.p_[i], 1e-300));
  return t;
}

std::vector<int> SensorModel::bin_measurements(const ScanFrame& scan) const {
  std::vector<int> mbins(lines.size());
  for (size_t j = 0; j < lines.size(); ++j) {
    double r = std::clamp(static_cast<double>(scan.ranges[lines[j].index]),
                          0.0, scan.range_max);
    mbins[j] = table->bin(r);
  }
  return mbins;
}

double SensorModel::weigh(const Pose2D& particle,
                          const std::vector<int>& mbins) const {
  Pose2D sp = compose(particle, lidar_offset);
  double acc = 0.0;
  if (lut) {
    int cx, cy;
    if (!lut->world_to_grid(sp.x, sp.y, cx, cy)) return floor_logw;
    const uint16_t* row = lut->cell_row(cx, cy);
    double q = lut->quantum();
    for (size_t j = 0; j < lines.size(); ++j) {
      double expected = row[lut->bin_of(sp.theta + lines[j].bearing)] * q;
      acc += table->logp(mbins[j], table->bin(expected));
    }
  } else {
    int cx, cy;
    if (!grid->world_to_grid(sp.x, sp.y, cx, cy)) return floor_logw;
    double max_range = (table->nbins() - 1) * table->bin_width();
    for (size_t j = 0; j < lines.size(); ++j) {
      double expected =
          cast_exact(*grid, sp.x, sp.y, sp.theta + lines[j].bearing,
                     max_range);
      acc += table->logp(mbins[j], table->bin(expected));
    }
  }
  return std::max(squash * acc, floor_logw);
}

}  // namespace trackloc
