#include "trackloc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "trackloc/errors.hpp"
#include "trackloc/raycast.hpp"

namespace trackloc {

void step_car(CarState& s, double steer_cmd, double accel_cmd, double dt,
              const CarParams& p) {
  steer_cmd = std::clamp(steer_cmd, -p.max_steer, p.max_steer);
  double dmax = p.steer_rate * dt;
  s.steer += std::clamp(steer_cmd - s.steer, -dmax, dmax);

  accel_cmd = std::clamp(accel_cmd, -p.brake_max, p.accel_max);
  double v0 = s.v;
  s.v = std::max(0.0, s.v + accel_cmd * dt);
  double v_avg = 0.5 * (v0 + s.v);

  double omega = v_avg * std::tan(s.steer) / p.wheelbase;
  double th = s.pose.theta;
  if (std::abs(omega) < 1e-9) {
    s.pose.x += v_avg * dt * std::cos(th);
    s.pose.y += v_avg * dt * std::sin(th);
  } else {
    // constant v and steer over dt: exact arc
    double radius = v_avg / omega;
    double th1 = th + omega * dt;
    s.pose.x += radius * (std::sin(th1) - std::sin(th));
    s.pose.y += radius * (-std::cos(th1) + std::cos(th));
    s.pose.theta = wrap_angle(th1);
  }
}

SlipProfile hq_profile() { return {1.0, 1e-4, 0.005}; }
SlipProfile lq_profile() { return {1.1, 2.5e-3, 0.05}; }

OdometryDelta corrupt_odometry(const OdometryDelta& d, const SlipProfile& s,
                               rng::Stream& rs) {
  OdometryDelta out = d;
  out.trans = d.trans * s.trans_scale *
              (1.0 + std::sqrt(s.trans_noise) * rs.normal());
  double rot_sigma = s.rot_noise * d.trans;
  out.rot1 = wrap_angle(d.rot1 + rot_sigma * rs.normal());
  out.rot2 = wrap_angle(d.rot2 + rot_sigma * rs.normal());
  return out;
}

ScanFrame synth_scan(const OccupancyGrid& g, const Pose2D& sensor_pose,
                     const ScanSimParams& p, double stamp, rng::Stream& rs) {
  ScanFrame s = make_scan_frame(p.beams, p.fov, p.range_max);
  s.stamp = stamp;
  // one key for the whole scan; each beam derives its own counter stream
  uint64_t scan_key = rs.next_u64();
  float* out = s.ranges.data();
  const int beams = p.beams;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < beams; ++i) {
    double r = cast_exact(g, sensor_pose.x, sensor_pose.y,
                          sensor_pose.theta + s.bearing(i), p.range_max);
    if (p.noise_sigma > 0.0) {
      rng::Stream beam(scan_key, static_cast<uint64_t>(i));
      r += p.noise_sigma * beam.normal();
    }
    out[i] = static_cast<float>(std::clamp(r, 0.0, p.range_max));
  }
  return s;
}

// ---- SimLog ------------------------------------------------------------

void SimLog::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write log: " + path);
  nlohmann::json meta{{"type", "meta"},
                      {"beams", beams},
                      {"angle_min", angle_min},
                      {"angle_increment", angle_increment},
                      {"range_max", range_max},
                      {"update_hz", update_hz},
                      {"lidar_offset",
                       {lidar_offset.x, lidar_offset.y, lidar_offset.theta}},
                      {"start", {start.x, start.y, start.theta}},
                      {"seed", seed}};
  f << meta.dump() << "\n";
  for (const auto& r : records) {
    nlohmann::json j{{"t", r.t},
                     {"gt", {r.gt.x, r.gt.y, r.gt.theta}},
                     {"odom", {r.odom.x, r.odom.y, r.odom.theta}},
                     {"v", r.v},
                     {"ranges", r.ranges}};
    f << j.dump() << "\n";
  }
  if (!f) throw IoError("short write on log: " + path);
}

SimLog SimLog::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open log: " + path);
  SimLog log;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& why) {
    throw IoError("bad log line " + std::to_string(lineno) + " in " + path +
                  ": " + why);
  };
  auto pose_of = [](const nlohmann::json& a) {
    return Pose2D{a.at(0).get<double>(), a.at(1).get<double>(),
                  a.at(2).get<double>()};
  };
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      if (lineno == 1) {
        if (j.value("type", "") != "meta") fail("missing meta line");
        log.beams = j.at("beams").get<int>();
        log.angle_min = j.at("angle_min").get<double>();
        log.angle_increment = j.at("angle_increment").get<double>();
        log.range_max = j.at("range_max").get<double>();
        log.update_hz = j.at("update_hz").get<double>();
        log.lidar_offset = pose_of(j.at("lidar_offset"));
        log.start = pose_of(j.at("start"));
        log.seed = j.at("seed").get<uint64_t>();
        continue;
      }
      Record r;
      r.t = j.at("t").get<double>();
      r.gt = pose_of(j.at("gt"));
      r.odom = pose_of(j.at("odom"));
      r.v = j.at("v").get<double>();
      r.ranges = j.at("ranges").get<std::vector<float>>();
      if (static_cast<int>(r.ranges.size()) != log.beams)
        fail("wrong beam count");
      log.records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      fail(e.what());
    }
  }
  if (lineno == 0) throw IoError("empty log: " + path);
  return log;
}

// ---- LapRunner ----------------------------------------------------------

LapRunner::LapRunner(const Track& track, const SensorModel& sm,
                     const MotionParams& motion, MotionModel model,
                     const FilterParams& filter_params, const RunParams& run,
                     uint64_t seed)
    : track_(track),
      sm_(sm),
      motion_(motion),
      model_(model),
      run_(run),
      fparams_(filter_params),
      seed_(seed),
      raceline_(track.raceline),
      dfield_(DistanceField::build(track.map)) {}

std::vector<LapResult> LapRunner::run(int laps, SimLog* log) {
  const double dt = 1.0 / run_.physics_hz;
  const int steps_per_update = std::max(
      1, static_cast<int>(std::round(run_.physics_hz / run_.update_hz)));
  const double align_tol = 2.0 * track_.map.resolution();

  // start at the raceline origin, heading along the path
  RacePoint p0 = raceline_.at(0.0);
  RacePoint p1 = raceline_.at(0.3);
  CarState car;
  car.pose = {p0.x, p0.y, std::atan2(p1.y - p0.y, p1.x - p0.x)};

  fparams_.seed = seed_;
  ParticleFilter filter(fparams_);
  filter.init_pose(car.pose);

  Pose2D odom = car.pose;        // dead-reckoned pose, never reset
  Pose2D gt_prev = car.pose;     // at the previous update instant
  Pose2D ctrl_pose = car.pose;   // what the controller steers by
  rng::Stream odom_stream(seed_, rng::split(0x0d0d, 1));
  rng::Stream scan_stream(seed_, rng::split(0x5ca, 1));

  if (log) {
    log->beams = run_.scan.beams;
    log->angle_min = -run_.scan.fov / 2.0;
    log->angle_increment = run_.scan.fov / run_.scan.beams;
    log->range_max = run_.scan.range_max;
    log->update_hz = run_.update_hz;
    log->lidar_offset = run_.lidar_offset;
    log->start = car.pose;
    log->seed = seed_;
  }

  std::vector<LapResult> results;
  double t = 0.0;
  double progress = 0.0;
  double s_prev = raceline_.project(car.pose.x, car.pose.y).s;
  int step_i = 0;

  for (int lap = 0; lap < laps; ++lap) {
    LapResult res;
    double lap_start_t = t;
    bool crashed = false;

    while (true) {
      // controller (every physics step, on the freshest pose source)
      RacelineProjection proj =
          raceline_.project(ctrl_pose.x, ctrl_pose.y);
      double ld = std::clamp(run_.lookahead_gain * car.v, run_.lookahead_min,
                             run_.lookahead_max);
      RacePoint target = raceline_.at(proj.s + ld);
      double alpha = wrap_angle(std::atan2(target.y - ctrl_pose.y,
                                           target.x - ctrl_pose.x) -
                                ctrl_pose.theta);
      double steer_cmd =
          std::atan2(2.0 * run_.car.wheelbase * std::sin(alpha), ld);
      double v_target =
          raceline_.at(proj.s + car.v * run_.speed_preview).v *
          run_.speed_scale;
      double accel_cmd = run_.speed_gain * (v_target - car.v);

      step_car(car, steer_cmd, accel_cmd, dt, run_.car);
      t += dt;
      ++step_i;

      // lap progress from ground truth
      double s_now = raceline_.project(car.pose.x, car.pose.y).s;
      double ds = s_now - s_prev;
      double half = raceline_.length() / 2.0;
      if (ds > half) ds -= raceline_.length();
      if (ds < -half) ds += raceline_.length();
      progress += ds;
      s_prev = s_now;

      if (dfield_.at_world(car.pose.x, car.pose.y) <= run_.car.clearance) {
        crashed = true;
        break;
      }

      if (step_i % steps_per_update == 0) {
        // sense
        Pose2D sensor_pose = compose(car.pose, run_.lidar_offset);
        ScanFrame scan =
            synth_scan(track_.map, sensor_pose, run_.scan, t, scan_stream);

        // odometer: corrupt the true delta, integrate
        double update_dt = steps_per_update * dt;
        OdometryDelta true_delta = decompose(gt_prev, car.pose, update_dt);
        OdometryDelta rep = corrupt_odometry(true_delta, run_.slip,
                                             odom_stream);
        Pose2D odom_next = {
            odom.x + rep.trans * std::cos(odom.theta + rep.rot1),
            odom.y + rep.trans * std::sin(odom.theta + rep.rot1),
            wrap_angle(odom.theta + rep.rot1 + rep.rot2)};
        OdometryDelta delta = decompose(odom, odom_next, update_dt);
        odom = odom_next;
        gt_prev = car.pose;

        // localize
        StepRecord rec;
        PoseEstimate est =
            filter.step(delta, motion_, model_, sm_, scan, &rec.timing);

        rec.t = t;
        rec.gt = car.pose;
        rec.est = est.mean;
        rec.odom = odom;
        rec.v = car.v;
        rec.ess = est.ess;
        rec.lost = est.lost;
        rec.alignment = scan_alignment(est.mean, scan, dfield_,
                                       run_.lidar_offset, align_tol,
                                       run_.alignment_stride);
        res.steps.push_back(rec);

        if (log) {
          SimLog::Record lr;
          lr.t = t;
          lr.gt = car.pose;
          lr.odom = odom;
          lr.v = car.v;
          lr.ranges = scan.ranges;
          log->records.push_back(std::move(lr));
        }

        ctrl_pose = run_.use_filter ? est.mean : car.pose;
      } else if (!run_.use_filter) {
        ctrl_pose = car.pose;
      }

      if (progress >= raceline_.length() * (lap + 1)) {
        res.completed = true;
        break;
      }
      if (t - lap_start_t > run_.t_limit) break;  // stuck: DNF
    }

    res.lap_time = t - lap_start_t;
    res.dnf_wall = crashed;
    results.push_back(std::move(res));
    if (!results.back().completed) break;  // car is in the wall or stuck
  }
  return results;
}

}  // namespace trackloc
