#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "trackloc/motion.hpp"

using namespace trackloc;

namespace {

MotionParams zero_noise() {
  MotionParams m;
  m.alpha1 = m.alpha2 = m.alpha3 = m.alpha4 = 0.0;
  m.sigma_xy = m.sigma_theta = 0.0;
  return m;
}

struct Moments {
  double mean = 0.0, var = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments mo;
  for (double x : xs) mo.mean += x;
  mo.mean /= xs.size();
  for (double x : xs) mo.var += (x - mo.mean) * (x - mo.mean);
  mo.var /= xs.size();
  return mo;
}

}  // namespace

TEST_CASE("decompose: pure translation") {
  OdometryDelta d = decompose({0, 0, 0}, {1, 0, 0}, 0.025);
  CHECK(d.rot1 == doctest::Approx(0.0));
  CHECK(d.trans == doctest::Approx(1.0));
  CHECK(d.rot2 == doctest::Approx(0.0));
  CHECK(d.dt == doctest::Approx(0.025));
}

TEST_CASE("decompose: pure rotation goes entirely to rot2") {
  OdometryDelta d = decompose({0, 0, 0}, {0, 0, kPi / 2}, 0.025);
  CHECK(d.rot1 == 0.0);
  CHECK(d.trans == 0.0);
  CHECK(d.rot2 == doctest::Approx(kPi / 2));
}

TEST_CASE("decompose: quarter-turn diagonal") {
  OdometryDelta d = decompose({0, 0, 0}, {1, 1, kPi / 2}, 0.025);
  CHECK(d.rot1 == doctest::Approx(kPi / 4));
  CHECK(d.trans == doctest::Approx(std::sqrt(2.0)));
  CHECK(d.rot2 == doctest::Approx(kPi / 4));
}

TEST_CASE("decompose: reverse motion keeps trans nonnegative") {
  OdometryDelta d = decompose({0, 0, 0}, {-1, 0, 0}, 0.025);
  CHECK(d.trans == doctest::Approx(1.0));
  CHECK(std::abs(d.rot1) == doctest::Approx(kPi));
  // rot1 + rot2 must still sum to the actual heading change (zero)
  CHECK(wrap_angle(d.rot1 + d.rot2) == doctest::Approx(0.0));
}

TEST_CASE("decompose: degenerate threshold sits at one micrometer") {
  OdometryDelta tiny = decompose({0, 0, 0}, {0.5e-6, 0.5e-6, 0.3}, 0.025);
  CHECK(tiny.rot1 == 0.0);
  CHECK(tiny.rot2 == doctest::Approx(0.3));
  OdometryDelta small = decompose({0, 0, 0}, {2e-6, 2e-6, 0.3}, 0.025);
  CHECK(small.rot1 == doctest::Approx(kPi / 4));  // atan2 direction engages
}

TEST_CASE("sample_diff_drive with zero alphas is the exact advance") {
  rng::Stream rs(1);
  OdometryDelta d{kPi / 4, std::sqrt(2.0), kPi / 4, 0.025};
  Pose2D out = sample_diff_drive({0, 0, 0}, d, zero_noise(), rs);
  CHECK(out.x == doctest::Approx(1.0));
  CHECK(out.y == doctest::Approx(1.0));
  CHECK(out.theta == doctest::Approx(kPi / 2));
}

TEST_CASE("diff-drive Monte-Carlo moments match the alpha closed forms") {
  MotionParams m;  // defaults: a1=0.5 a2=0.015 a3=0.1 a4=1.0
  OdometryDelta d{0.0, 1.0, 0.0, 0.025};  // pure translation, 1 m
  const int n = 100000;
  std::vector<double> heading, dist;
  heading.reserve(n);
  dist.reserve(n);
  for (int i = 0; i < n; ++i) {
    rng::Stream rs(99, i);
    Pose2D out = sample_diff_drive({0, 0, 0}, d, m, rs);
    heading.push_back(out.theta);
    dist.push_back(std::hypot(out.x, out.y));
  }
  // heading change = rot1 noise + rot2 noise, each var alpha2 * trans^2
  Moments mh = moments(heading);
  CHECK(mh.var == doctest::Approx(2.0 * m.alpha2).epsilon(0.03));
  // displacement = perturbed trans, var alpha3 * trans^2
  Moments md = moments(dist);
  CHECK(md.var == doctest::Approx(m.alpha3).epsilon(0.03));
  // mean-unbiasedness within 3 sigma of the Monte-Carlo error
  CHECK(std::abs(mh.mean) < 3.0 * std::sqrt(mh.var / n));
  CHECK(std::abs(md.mean - 1.0) < 3.0 * std::sqrt(md.var / n));
}

TEST_CASE("sample_naive: fixed-variance noise independent of the delta") {
  MotionParams m;
  m.sigma_xy = 0.1;
  m.sigma_theta = 0.02;
  const int n = 100000;
  std::vector<double> x_small, x_large;
  for (int i = 0; i < n; ++i) {
    rng::Stream a(7, i), b(7, i);  // paired: identical draws
    OdometryDelta ds{0.0, 0.01, 0.0, 0.025};
    OdometryDelta dl{0.0, 1.0, 0.0, 0.025};
    x_small.push_back(sample_naive({0, 0, 0}, ds, m, a).x - 0.01);
    x_large.push_back(sample_naive({0, 0, 0}, dl, m, b).x - 1.0);
  }
  Moments ms = moments(x_small), ml = moments(x_large);
  CHECK(std::sqrt(ms.var) == doctest::Approx(0.1).epsilon(0.03));
  // same seeds, fixed sigma: the residual noise is literally identical
  for (int i = 0; i < 100; ++i)
    CHECK(x_small[i] == doctest::Approx(x_large[i]).epsilon(1e-12));
  CHECK(ms.var == doctest::Approx(ml.var).epsilon(1e-9));
}

TEST_CASE("sample_naive with zero sigmas is deterministic") {
  rng::Stream rs(3);
  MotionParams m = zero_noise();
  OdometryDelta d{0.1, 0.5, -0.2, 0.025};
  Pose2D a = sample_naive({1, 2, 0.3}, d, m, rs);
  rng::Stream rs2(4);
  Pose2D b = sample_naive({1, 2, 0.3}, d, m, rs2);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(a.theta == b.theta);
}

TEST_CASE("tum below lam_thresh matches diff-drive bitwise") {
  MotionParams m;
  OdometryDelta d{0.05, 0.09, -0.03, 0.025};  // trans < 0.1
  for (int i = 0; i < 50; ++i) {
    rng::Stream a(11, i), b(11, i);
    Pose2D pd = sample_diff_drive({0.5, -0.2, 0.8}, d, m, a);
    Pose2D pt = sample_tum({0.5, -0.2, 0.8}, d, m, b);
    CHECK(pd.x == pt.x);
    CHECK(pd.y == pt.y);
    CHECK(pd.theta == pt.theta);
  }
}

TEST_CASE("tum caps heading noise on a fast straight") {
  MotionParams m;
  OdometryDelta d{0.0, 0.19, 0.0, 0.025};  // 7.6 m/s at 40 Hz
  REQUIRE(d.trans >= m.lam_thresh);
  // the cap must actually bind for this delta
  REQUIRE(tum_rot_cap(d, m) < diff_drive_sigma_rot1(d, m));
  const int n = 20000;
  std::vector<double> h_dd, h_tum;
  for (int i = 0; i < n; ++i) {
    rng::Stream a(21, i), b(21, i);
    h_dd.push_back(sample_diff_drive({0, 0, 0}, d, m, a).theta);
    h_tum.push_back(sample_tum({0, 0, 0}, d, m, b).theta);
  }
  Moments dd = moments(h_dd), tum = moments(h_tum);
  CHECK(tum.var < dd.var);  // strictly smaller heading spread
  double cap = tum_rot_cap(d, m);
  CHECK(tum.var == doctest::Approx(2.0 * cap * cap).epsilon(0.05));
}

TEST_CASE("tum with max_steer at pi/2 reduces to diff-drive") {
  MotionParams m;
  m.max_steer = kPi / 2 - 1e-9;  // tan -> huge, cap never binds
  rng::Stream a(31), b(31);
  OdometryDelta d{0.1, 0.5, -0.05, 0.025};
  for (int i = 0; i < 50; ++i) {
    Pose2D pd = sample_diff_drive({0, 0, 0}, d, m, a);
    Pose2D pt = sample_tum({0, 0, 0}, d, m, b);
    CHECK(pd.x == pt.x);
    CHECK(pd.y == pt.y);
    CHECK(pd.theta == pt.theta);
  }
}

TEST_CASE("gate continuity: a slack cap is invisible on both sides") {
  MotionParams m;
  m.kappa = 100.0;  // cap far above the diff-drive sigma
  double eps = 1e-6;
  for (double trans : {m.lam_thresh - eps, m.lam_thresh + eps}) {
    OdometryDelta d{0.02, trans, 0.01, 0.025};
    REQUIRE(tum_rot_cap(d, m) > diff_drive_sigma_rot1(d, m));
    for (int i = 0; i < 20; ++i) {
      rng::Stream a(41, i), b(41, i);
      Pose2D pd = sample_diff_drive({0, 0, 0}, d, m, a);
      Pose2D pt = sample_tum({0, 0, 0}, d, m, b);
      CHECK(pd.x == pt.x);
      CHECK(pd.y == pt.y);
      CHECK(pd.theta == pt.theta);
    }
  }
}

TEST_CASE("tum heading variance never exceeds diff-drive on random deltas") {
  MotionParams m;
  rng::Stream gen(55);
  int strict = 0;
  for (int k = 0; k < 100; ++k) {
    OdometryDelta d;
    d.rot1 = gen.uniform(-0.3, 0.3);
    d.rot2 = gen.uniform(-0.3, 0.3);
    d.trans = gen.uniform(m.lam_thresh, 0.25);
    d.dt = 0.025;
    const int n = 4000;
    std::vector<double> h_dd, h_tum;
    for (int i = 0; i < n; ++i) {
      rng::Stream a(1000 + k, i), b(1000 + k, i);
      h_dd.push_back(
          angle_diff(sample_diff_drive({0, 0, 0}, d, m, a).theta, 0.0));
      h_tum.push_back(angle_diff(sample_tum({0, 0, 0}, d, m, b).theta, 0.0));
    }
    double vd = moments(h_dd).var, vt = moments(h_tum).var;
    CHECK(vt <= vd * (1.0 + 1e-9));
    if (vt < vd * 0.99) ++strict;
  }
  CHECK(strict > 0);  // the cap actually binds somewhere in the sweep
}

TEST_CASE("every model consumes exactly three normal draws") {
  MotionParams m;
  OdometryDelta d{0.1, 0.2, -0.05, 0.025};
  auto probe = [&](auto sampler) {
    rng::Stream used(77, 5);
    sampler({0, 0, 0}, d, m, used);
    rng::Stream ref(77, 5);
    for (int i = 0; i < 3; ++i) ref.normal();  // 2 uniforms each
    // both streams must now be in the same state
    CHECK(used.next_u64() == ref.next_u64());
  };
  probe([](const Pose2D& p, const OdometryDelta& dd, const MotionParams& mm,
           rng::Stream& rs) { return sample_naive(p, dd, mm, rs); });
  probe([](const Pose2D& p, const OdometryDelta& dd, const MotionParams& mm,
           rng::Stream& rs) { return sample_diff_drive(p, dd, mm, rs); });
  probe([](const Pose2D& p, const OdometryDelta& dd, const MotionParams& mm,
           rng::Stream& rs) { return sample_tum(p, dd, mm, rs); });
}

TEST_CASE("sigma helpers evaluate the documented forms") {
  MotionParams m;
  OdometryDelta d{0.2, 0.5, -0.1, 0.025};
  CHECK(diff_drive_sigma_rot1(d, m) ==
        doctest::Approx(std::sqrt(0.5 * 0.04 + 0.015 * 0.25)));
  CHECK(diff_drive_sigma_rot2(d, m) ==
        doctest::Approx(std::sqrt(0.5 * 0.01 + 0.015 * 0.25)));
  CHECK(diff_drive_sigma_trans(d, m) ==
        doctest::Approx(std::sqrt(0.1 * 0.25 + 1.0 * 0.05)));
  CHECK(tum_rot_cap(d, m) ==
        doctest::Approx(0.08 * 0.5 * std::tan(0.4189) / 0.325));
}
