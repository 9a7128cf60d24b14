// trackloc: Monte-Carlo localization testbed for small high-speed cars.
// Subcommands cover track generation, range-table builds, closed-loop
// experiments, log replay, latency benchmarks, and config inspection.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "trackloc/config.hpp"
#include "trackloc/errors.hpp"
#include "trackloc/eval.hpp"
#include "trackloc/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace trackloc;

namespace {

std::vector<Scanline> make_layout(const RunConfig& cfg, int beams,
                                  double angle_min, double increment) {
  if (cfg.sensor.layout == "uniform")
    return layout_uniform(beams, angle_min, increment, cfg.sensor.k);
  return layout_boxed(beams, angle_min, increment, cfg.sensor.k,
                      cfg.sensor.aspect);
}

// Everything an experiment needs, owned in one place so the sensor model's
// pointers stay valid.
struct Assets {
  Track track;
  RangeLUT lut;
  BeamModelTable table;
  SensorModel sm;
};

void load_assets(const RunConfig& cfg, Assets& a, bool verbose) {
  if (cfg.track_dir.empty())
    throw ConfigError("no track: pass --track or set track_dir in the config");
  a.track = load_track(cfg.track_dir);

  if (!cfg.lut_file.empty() && fs::exists(cfg.lut_file)) {
    a.lut = RangeLUT::load(cfg.lut_file);
    if (verbose)
      std::printf("loaded range table %s (%.1f MB)\n", cfg.lut_file.c_str(),
                  a.lut.bytes() / 1048576.0);
  } else {
    LutBuildStats st;
    a.lut = RangeLUT::build(a.track.map, cfg.lut_params(), &st);
    if (verbose)
      std::printf("built range table in %.2f s (%.1f MB)\n", st.seconds,
                  st.bytes / 1048576.0);
    if (!cfg.lut_file.empty()) a.lut.save(cfg.lut_file);
  }

  a.table = BeamModelTable::build(cfg.sensor.beam, a.track.map.resolution(),
                                  cfg.lut.max_range);
  ScanFrame proto = make_scan_frame(cfg.sim.scan_beams,
                                    deg2rad(cfg.sim.scan_fov_deg),
                                    cfg.lut.max_range);
  a.sm.lut = &a.lut;
  a.sm.grid = &a.track.map;
  a.sm.table = &a.table;
  a.sm.lines = make_layout(cfg, proto.beams(), proto.angle_min,
                           proto.angle_increment);
  a.sm.lidar_offset = cfg.sensor.lidar_offset;
  a.sm.squash = cfg.sensor.squash;
  a.sm.floor_logw = cfg.sensor.floor_log_weight;
}

// ---- experiment ----------------------------------------------------------

struct LapRow {
  int lap = 0;
  bool completed = false, dnf_wall = false;
  double time_s = 0.0;
  double align = 0.0;        // mean per-step endpoint fraction
  double lat_gt = 0.0;       // car path vs raceline (m)
  double lat_est = 0.0;      // estimate vs raceline (m)
  double rmse = 0.0;         // estimate vs ground truth, after t=1 s
  double dead_reckon = 0.0;  // odometry-only terminal error (m)
  double ess_mean = 0.0;
  int steps = 0;
};

struct CondReport {
  std::string model, slip;
  int requested = 0, completed = 0, dnf = 0;
  Summary lap_time;  // completed laps only
  double align_mean = 0.0;
  Summary lateral;  // per-lap means of lat_gt, completed laps
  double rmse = 0.0;
  double dead_reckon_mean = 0.0;
  std::vector<LapRow> rows;
};

LapRow lap_metrics(int lap_no, const LapResult& lap, const RacelineIndex& rl) {
  LapRow row;
  row.lap = lap_no;
  row.completed = lap.completed;
  row.dnf_wall = lap.dnf_wall;
  row.time_s = lap.lap_time;
  row.steps = static_cast<int>(lap.steps.size());
  double asum = 0, lg = 0, le = 0, esum = 0, sq = 0;
  int nsq = 0;
  for (const auto& r : lap.steps) {
    asum += r.alignment;
    lg += rl.project(r.gt.x, r.gt.y).lateral;
    le += rl.project(r.est.x, r.est.y).lateral;
    esum += r.ess;
    if (r.t >= 1.0) {  // skip the settle-in second of the run
      double dx = r.est.x - r.gt.x, dy = r.est.y - r.gt.y;
      sq += dx * dx + dy * dy;
      ++nsq;
    }
  }
  int n = row.steps ? row.steps : 1;
  row.align = asum / n;
  row.lat_gt = lg / n;
  row.lat_est = le / n;
  row.ess_mean = esum / n;
  row.rmse = nsq ? std::sqrt(sq / nsq) : 0.0;
  if (row.steps >= 2) {
    // realign odometry to ground truth at lap start; the gap at lap end is
    // what pure dead reckoning would have accumulated
    const auto& first = lap.steps.front();
    const auto& last = lap.steps.back();
    Pose2D realign = compose(first.gt, inverse(first.odom));
    Pose2D end = compose(realign, last.odom);
    row.dead_reckon = std::hypot(end.x - last.gt.x, end.y - last.gt.y);
  }
  return row;
}

CondReport make_cond_report(const std::string& model, const std::string& slip,
                            const std::vector<LapResult>& laps, int requested,
                            const RacelineIndex& rl) {
  CondReport rep;
  rep.model = model;
  rep.slip = slip;
  rep.requested = requested;
  std::vector<double> times, lats;
  double asum = 0, drsum = 0, sq = 0;
  int ncomp = 0;
  long nsq = 0;
  for (size_t i = 0; i < laps.size(); ++i) {
    LapRow row = lap_metrics(static_cast<int>(i + 1), laps[i], rl);
    if (row.completed) {
      ++ncomp;
      times.push_back(row.time_s);
      lats.push_back(row.lat_gt);
      asum += row.align;
      drsum += row.dead_reckon;
      for (const auto& r : laps[i].steps)
        if (r.t >= 1.0) {
          double dx = r.est.x - r.gt.x, dy = r.est.y - r.gt.y;
          sq += dx * dx + dy * dy;
          ++nsq;
        }
    }
    rep.rows.push_back(row);
  }
  rep.completed = ncomp;
  rep.dnf = requested - ncomp;
  rep.lap_time = summarize(times);
  rep.lateral = summarize(lats);
  rep.align_mean = ncomp ? asum / ncomp : 0.0;
  rep.dead_reckon_mean = ncomp ? drsum / ncomp : 0.0;
  rep.rmse = nsq ? std::sqrt(sq / nsq) : 0.0;
  return rep;
}

void write_lap_csv(const fs::path& path, const LapResult& lap,
                   const RacelineIndex& rl) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << "t,gt_x,gt_y,gt_theta,est_x,est_y,est_theta,"
       "odom_x,odom_y,odom_theta,v,ess,alignment,lateral_gt,lateral_est,"
       "pos_err,lost\n";
  char buf[640];
  for (const auto& r : lap.steps) {
    double lat_gt = rl.project(r.gt.x, r.gt.y).lateral;
    double lat_est = rl.project(r.est.x, r.est.y).lateral;
    double pe = std::hypot(r.est.x - r.gt.x, r.est.y - r.gt.y);
    std::snprintf(buf, sizeof buf,
                  "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,"
                  "%.6f,%.3f,%.6f,%.6f,%.6f,%.6f,%d\n",
                  r.t, r.gt.x, r.gt.y, r.gt.theta, r.est.x, r.est.y,
                  r.est.theta, r.odom.x, r.odom.y, r.odom.theta, r.v, r.ess,
                  r.alignment, lat_gt, lat_est, pe, r.lost ? 1 : 0);
    f << buf;
  }
  if (!f) throw IoError("short write on " + path.string());
}

// Wall-clock phase timings are machine-dependent, so they live in their own
// file and stay out of the byte-reproducible reports.
void write_timing_csv(const fs::path& path,
                      const std::vector<LapResult>& laps) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f << "lap,step,predict_ms,update_ms,resample_ms,estimate_ms,total_ms,"
       "resampled\n";
  char buf[256];
  for (size_t li = 0; li < laps.size(); ++li) {
    const auto& steps = laps[li].steps;
    for (size_t si = 0; si < steps.size(); ++si) {
      const StepTiming& t = steps[si].timing;
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.4f,%.4f,%.4f,%.4f,%.4f,%d\n",
                    li + 1, si, t.predict_ms, t.update_ms, t.resample_ms,
                    t.estimate_ms, t.total_ms, t.resampled ? 1 : 0);
      f << buf;
    }
  }
}

ordered_json cond_json(const CondReport& rep) {
  ordered_json c;
  c["model"] = rep.model;
  c["slip"] = rep.slip;
  c["laps_requested"] = rep.requested;
  c["completed"] = rep.completed;
  c["dnf"] = rep.dnf;
  c["lap_time_mean_s"] = rep.lap_time.mean;
  c["lap_time_std_s"] = rep.lap_time.stddev;
  c["alignment_mean_pct"] = rep.align_mean * 100.0;
  c["lateral_mean_m"] = rep.lateral.mean;
  c["lateral_std_m"] = rep.lateral.stddev;
  c["pos_rmse_m"] = rep.rmse;
  c["dead_reckon_terminal_mean_m"] = rep.dead_reckon_mean;
  ordered_json rows = ordered_json::array();
  for (const auto& row : rep.rows) {
    ordered_json r;
    r["lap"] = row.lap;
    r["completed"] = row.completed;
    r["dnf_wall"] = row.dnf_wall;
    r["time_s"] = row.time_s;
    r["alignment_pct"] = row.align * 100.0;
    r["lateral_m"] = row.lat_gt;
    r["lateral_est_m"] = row.lat_est;
    r["pos_rmse_m"] = row.rmse;
    r["dead_reckon_terminal_m"] = row.dead_reckon;
    r["ess_mean"] = row.ess_mean;
    r["steps"] = row.steps;
    rows.push_back(std::move(r));
  }
  c["laps"] = std::move(rows);
  return c;
}

void print_table(const std::vector<CondReport>& reports) {
  std::printf("\n%-20s %5s %4s  %-17s %-16s %-10s\n", "condition", "laps",
              "dnf", "lap time [s]", "lateral [cm]", "align [%]");
  std::printf("%s\n", std::string(78, '-').c_str());
  for (const auto& r : reports) {
    char time_col[64], lat_col[64];
    if (r.completed > 0) {
      std::snprintf(time_col, sizeof time_col, "%.3f +/- %.3f",
                    r.lap_time.mean, r.lap_time.stddev);
      std::snprintf(lat_col, sizeof lat_col, "%.2f +/- %.2f",
                    r.lateral.mean * 100.0, r.lateral.stddev * 100.0);
    } else {
      std::snprintf(time_col, sizeof time_col, "-");
      std::snprintf(lat_col, sizeof lat_col, "-");
    }
    std::printf("%-20s %2d/%-2d %4d  %-17s %-16s %6.1f\n",
                (r.model + " / " + r.slip).c_str(), r.completed, r.requested,
                r.dnf, time_col, lat_col, r.align_mean * 100.0);
  }
  std::printf("(mean +/- population std dev over completed laps)\n\n");
}

int cmd_experiment(const RunConfig& cfg) {
  Assets a;
  load_assets(cfg, a, true);
  fs::create_directories(cfg.out_dir);
  RacelineIndex rl(a.track.raceline);
  FilterParams fp = cfg.filter_params();

  std::vector<CondReport> reports;
  for (const auto& model_name : cfg.experiment.models) {
    for (const auto& cond : cfg.experiment.conditions) {
      std::string cname = model_name + "-" + cond;
      fs::path cdir = fs::path(cfg.out_dir) / cname;
      fs::create_directories(cdir);

      std::printf("running %s, %d laps...\n", cname.c_str(),
                  cfg.experiment.laps);
      std::fflush(stdout);
      LapRunner runner(a.track, a.sm, cfg.motion.params,
                       parse_motion_model(model_name), fp,
                       cfg.run_params(cond), cfg.seed);
      SimLog log;
      std::vector<LapResult> laps =
          runner.run(cfg.experiment.laps,
                     cfg.experiment.save_logs ? &log : nullptr);
      if (cfg.experiment.save_logs)
        log.save((cdir / "sim_log.jsonl").string());

      for (size_t i = 0; i < laps.size(); ++i)
        write_lap_csv(cdir / ("lap_" + std::to_string(i + 1) + ".csv"),
                      laps[i], rl);
      write_timing_csv(cdir / "timing.csv", laps);
      reports.push_back(make_cond_report(model_name, cond, laps,
                                         cfg.experiment.laps, rl));
    }
  }

  ordered_json root;
  root["report"] = "experiment summary";
  root["stddev_convention"] = "population";
  root["alignment_convention"] =
      "per-step endpoint fractions averaged over steps, then over laps";
  root["track"] = cfg.track_dir;
  root["seed"] = cfg.seed;
  root["laps_requested"] = cfg.experiment.laps;
  root["particles"] = cfg.filter.particles;
  root["scanlines"] = cfg.sensor.k;
  root["layout"] = cfg.sensor.layout;
  root["ground_truth_controller"] = cfg.experiment.ground_truth;
  ordered_json conds = ordered_json::array();
  for (const auto& r : reports) conds.push_back(cond_json(r));
  root["conditions"] = std::move(conds);
  fs::path summary_path = fs::path(cfg.out_dir) / "summary.json";
  {
    std::ofstream f(summary_path);
    if (!f) throw IoError("cannot write " + summary_path.string());
    f << root.dump(2) << "\n";
  }
  std::printf("wrote %s\n", summary_path.string().c_str());

  print_table(reports);

  std::vector<std::string> failed;
  for (const auto& r : reports)
    if (r.completed == 0) failed.push_back(r.model + "/" + r.slip);
  if (!failed.empty()) {
    std::string who;
    for (const auto& s : failed) who += (who.empty() ? "" : ", ") + s;
    throw DnfError("conditions with no completed laps: " + who);
  }
  return 0;
}

// ---- replay ---------------------------------------------------------------

int cmd_replay(const RunConfig& cfg, const std::string& log_path,
               bool seed_given) {
  SimLog log = SimLog::load(log_path);
  if (log.records.empty()) throw IoError("log has no records: " + log_path);

  Assets a;
  load_assets(cfg, a, true);
  if (std::abs(log.range_max - cfg.lut.max_range) > 1e-6)
    std::fprintf(stderr,
                 "warning: log range_max %.2f != configured max_range %.2f\n",
                 log.range_max, cfg.lut.max_range);

  // scan geometry and mounting come from the log, not the config
  a.sm.lines = make_layout(cfg, log.beams, log.angle_min, log.angle_increment);
  a.sm.lidar_offset = log.lidar_offset;

  FilterParams fp = cfg.filter_params();
  fp.seed = seed_given ? cfg.seed : log.seed;
  ParticleFilter filter(fp);
  filter.init_pose(log.start);

  DistanceField dfield = DistanceField::build(a.track.map);
  double dt = 1.0 / log.update_hz;
  double align_tol = 2.0 * a.track.map.resolution();

  fs::create_directories(cfg.out_dir);
  fs::path csv_path = fs::path(cfg.out_dir) / "replay.csv";
  fs::path tcsv_path = fs::path(cfg.out_dir) / "replay_timing.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot write " + csv_path.string());
  csv << "t,gt_x,gt_y,gt_theta,est_x,est_y,est_theta,odom_x,odom_y,"
         "odom_theta,ess,alignment,pos_err,lost\n";
  std::ofstream tcsv(tcsv_path);
  if (!tcsv) throw IoError("cannot write " + tcsv_path.string());
  tcsv << "step,predict_ms,update_ms,resample_ms,estimate_ms,total_ms,"
          "resampled\n";

  ScanFrame scan = make_scan_frame(log.beams, 0.0, log.range_max);
  scan.angle_min = log.angle_min;
  scan.angle_increment = log.angle_increment;

  Pose2D odom_prev = log.start;
  std::vector<double> aligns, sensor_ms, total_ms;
  double sq = 0.0;
  long nsq = 0;
  int lost_steps = 0;
  char buf[512];
  for (size_t i = 0; i < log.records.size(); ++i) {
    const auto& rec = log.records[i];
    OdometryDelta d = decompose(odom_prev, rec.odom, dt);
    odom_prev = rec.odom;
    scan.stamp = rec.t;
    scan.ranges = rec.ranges;

    StepTiming tm;
    PoseEstimate est = filter.step(d, cfg.motion.params, cfg.motion_model(),
                                   a.sm, scan, &tm);
    double al = scan_alignment(est.mean, scan, dfield, log.lidar_offset,
                               align_tol, cfg.eval.alignment_stride);
    double pe = std::hypot(est.mean.x - rec.gt.x, est.mean.y - rec.gt.y);
    aligns.push_back(al);
    if (rec.t >= 1.0) {
      sq += pe * pe;
      ++nsq;
    }
    if (est.lost) ++lost_steps;
    sensor_ms.push_back(tm.update_ms);
    total_ms.push_back(tm.total_ms);

    std::snprintf(buf, sizeof buf,
                  "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,"
                  "%.3f,%.6f,%.6f,%d\n",
                  rec.t, rec.gt.x, rec.gt.y, rec.gt.theta, est.mean.x,
                  est.mean.y, est.mean.theta, rec.odom.x, rec.odom.y,
                  rec.odom.theta, est.ess, al, pe, est.lost ? 1 : 0);
    csv << buf;
    std::snprintf(buf, sizeof buf, "%zu,%.4f,%.4f,%.4f,%.4f,%.4f,%d\n", i,
                  tm.predict_ms, tm.update_ms, tm.resample_ms, tm.estimate_ms,
                  tm.total_ms, tm.resampled ? 1 : 0);
    tcsv << buf;
  }

  Summary align_sum = summarize(aligns);
  double rmse = nsq ? std::sqrt(sq / nsq) : 0.0;
  ordered_json rep;
  rep["report"] = "replay summary";
  rep["log"] = log_path;
  rep["steps"] = log.records.size();
  rep["seed"] = fp.seed;
  rep["model"] = cfg.motion.model;
  rep["alignment_mean_pct"] = align_sum.mean * 100.0;
  rep["pos_rmse_m"] = rmse;
  rep["lost_steps"] = lost_steps;
  fs::path json_path = fs::path(cfg.out_dir) / "replay.json";
  {
    std::ofstream f(json_path);
    if (!f) throw IoError("cannot write " + json_path.string());
    f << rep.dump(2) << "\n";
  }

  std::printf(
      "replayed %zu steps (model %s, seed %llu): alignment %.1f%%, "
      "pos RMSE %.3f m, %d lost; sensor p50 %.2f ms, step p50 %.2f ms\n",
      log.records.size(), cfg.motion.model.c_str(),
      static_cast<unsigned long long>(fp.seed), align_sum.mean * 100.0, rmse,
      lost_steps, percentile(sensor_ms, 50.0), percentile(total_ms, 50.0));
  std::printf("wrote %s, %s, %s\n", csv_path.string().c_str(),
              tcsv_path.string().c_str(), json_path.string().c_str());
  return 0;
}

// ---- bench ------------------------------------------------------------

// Poses spaced along the closed raceline; the workload wraps seamlessly, so
// the filter relocalizes lap after lap while we time it.
void bench_workload(const RunConfig& cfg, const Assets& a,
                    std::vector<Pose2D>& poses,
                    std::vector<ScanFrame>& scans,
                    std::vector<OdometryDelta>& deltas) {
  RacelineIndex rl(a.track.raceline);
  int n = std::max(8, static_cast<int>(std::floor(rl.length() / 0.1)));
  double spacing = rl.length() / n;
  double dt = 1.0 / cfg.sim.update_hz;

  poses.resize(n);
  for (int i = 0; i < n; ++i) {
    RacePoint p = rl.at(i * spacing);
    RacePoint q = rl.at(i * spacing + 0.05);
    poses[i] = {p.x, p.y, std::atan2(q.y - p.y, q.x - p.x)};
  }
  deltas.resize(n);
  scans.resize(n);
  rng::Stream ss(cfg.seed, rng::split(0xbe, 1));
  for (int i = 0; i < n; ++i) {
    const Pose2D& next = poses[(i + 1) % n];
    deltas[i] = decompose(poses[i], next, dt);
    scans[i] = synth_scan(a.track.map, compose(next, cfg.sensor.lidar_offset),
                          cfg.scan_params(), i * dt, ss);
  }
}

void print_latency_row(const char* backend, const LatencyReport& r) {
  std::printf("%-6s %6d %4d %6d %6d   %7.3f / %-8.3f %7.3f / %-8.3f\n",
              backend, r.particles, r.scanlines, r.ntheta, r.steps,
              r.sensor_p50_ms, r.sensor_p99_ms, r.step_p50_ms, r.step_p99_ms);
}

ordered_json latency_json(const std::string& backend, const LatencyReport& r) {
  ordered_json j;
  j["backend"] = backend;
  j["particles"] = r.particles;
  j["scanlines"] = r.scanlines;
  j["ntheta"] = r.ntheta;
  j["steps"] = r.steps;
  j["sensor_p50_ms"] = r.sensor_p50_ms;
  j["sensor_p99_ms"] = r.sensor_p99_ms;
  j["step_p50_ms"] = r.step_p50_ms;
  j["step_p99_ms"] = r.step_p99_ms;
  j["predict_p50_ms"] = r.predict_p50_ms;
  j["resample_p50_ms"] = r.resample_p50_ms;
  j["estimate_p50_ms"] = r.estimate_p50_ms;
  return j;
}

int cmd_bench(const RunConfig& cfg, const std::string& backend, int steps,
              bool steps_given, std::vector<int> sweep_n) {
  Assets a;
  load_assets(cfg, a, true);
  std::vector<Pose2D> poses;
  std::vector<ScanFrame> scans;
  std::vector<OdometryDelta> deltas;
  bench_workload(cfg, a, poses, scans, deltas);

  if (sweep_n.empty()) sweep_n.push_back(cfg.filter.particles);
  std::printf("host: %s\n", host_descriptor().c_str());
  std::printf("%-6s %6s %4s %6s %6s   %-18s %-18s\n", "", "N", "K", "ntheta",
              "steps", "sensor p50/p99 ms", "step p50/p99 ms");

  ordered_json rows = ordered_json::array();
  double lut_p50 = 0.0, exact_p50 = 0.0;
  for (int n_particles : sweep_n) {
    FilterParams fp = cfg.filter_params();
    fp.n = n_particles;
    if (backend == "lut" || backend == "both") {
      ParticleFilter pf(fp);
      pf.init_pose(poses[0]);
      SensorModel sm = a.sm;
      sm.grid = nullptr;  // force table lookups
      int m = steps_given ? steps : 10000;
      LatencyReport rep = bench_step_latency(pf, cfg.motion.params,
                                             cfg.motion_model(), sm, scans,
                                             deltas, m);
      print_latency_row("lut", rep);
      rows.push_back(latency_json("lut", rep));
      lut_p50 = rep.sensor_p50_ms;
    }
    if (backend == "exact" || backend == "both") {
      ParticleFilter pf(fp);
      pf.init_pose(poses[0]);
      SensorModel sm = a.sm;
      sm.lut = nullptr;  // march every ray
      int m = steps_given ? steps : 300;
      LatencyReport rep = bench_step_latency(pf, cfg.motion.params,
                                             cfg.motion_model(), sm, scans,
                                             deltas, m);
      print_latency_row("exact", rep);
      rows.push_back(latency_json("exact", rep));
      exact_p50 = rep.sensor_p50_ms;
    }
  }
  if (backend == "both" && lut_p50 > 0.0)
    std::printf("lut speedup over exact: %.1fx (sensor p50)\n",
                exact_p50 / lut_p50);

  fs::create_directories(cfg.out_dir);
  fs::path out = fs::path(cfg.out_dir) / "bench.json";
  ordered_json root;
  root["report"] = "step latency";
  root["host"] = host_descriptor();
  root["track"] = cfg.track_dir;
  root["runs"] = std::move(rows);
  std::ofstream f(out);
  if (!f) throw IoError("cannot write " + out.string());
  f << root.dump(2) << "\n";
  std::printf("wrote %s\n", out.string().c_str());
  return 0;
}

// ---- build-lut / gen-track / dump-config -------------------------------

int cmd_build_lut(const RunConfig& cfg, bool serial) {
  if (cfg.track_dir.empty())
    throw ConfigError("no track: pass --track or set track_dir in the config");
  OccupancyGrid map = OccupancyGrid::load(
      (fs::path(cfg.track_dir) / "map.yaml").string());
  LutBuildStats st;
  RangeLUT lut = RangeLUT::build(map, cfg.lut_params(), &st, !serial);
  std::string out = cfg.lut_file.empty()
                        ? (fs::path(cfg.track_dir) / "range_lut.bin").string()
                        : cfg.lut_file;
  lut.save(out);
  std::printf(
      "wrote %s: %d x %d cells x %d bins, %.1f MB, built in %.2f s "
      "(%zu of %zu cells free)\n",
      out.c_str(), lut.nx(), lut.ny(), lut.ntheta(), st.bytes / 1048576.0,
      st.seconds, st.cells_free, st.cells_total);
  return 0;
}

int cmd_gen_track(const std::string& preset, const std::string& out,
                  const TrackParams& p) {
  Track t = gen_stadium(p);
  save_track(t, out);
  double v_lo = 1e18, v_hi = 0.0;
  for (const auto& rp : t.raceline) {
    v_lo = std::min(v_lo, rp.v);
    v_hi = std::max(v_hi, rp.v);
  }
  std::printf(
      "%s -> %s: %dx%d cells @ %.2f m, raceline %.2f m (%zu points), "
      "speeds %.2f..%.2f m/s\n",
      preset.c_str(), out.c_str(), t.map.nx(), t.map.ny(),
      t.map.resolution(), t.raceline_length, t.raceline.size(), v_lo, v_hi);
  return 0;
}

// Shared flags; values only land in the config when the flag was passed.
struct CommonFlags {
  std::string config, track, out, lut, model;
  uint64_t seed = 0;
  int threads = -1;
  CLI::Option* o_track = nullptr;
  CLI::Option* o_out = nullptr;
  CLI::Option* o_lut = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_threads = nullptr;
  CLI::Option* o_model = nullptr;

  void attach(CLI::App* cmd, bool with_model = false) {
    cmd->add_option("--config", config,
                    "YAML config file; flags override its values");
    o_track = cmd->add_option("--track", track, "track bundle directory");
    o_out = cmd->add_option("--out", out, "output directory");
    o_lut = cmd->add_option("--lut", lut,
                            "range table file (loaded if present, else "
                            "built and saved there)");
    o_seed = cmd->add_option("--seed", seed, "root seed");
    o_threads = cmd->add_option("--threads", threads,
                                "worker threads (0 = runtime default)");
    if (with_model)
      o_model = cmd->add_option("--model", model,
                                "motion model: naive | diffdrive | tum");
  }

  RunConfig resolve() const {
    RunConfig cfg =
        config.empty() ? RunConfig{} : RunConfig::from_file(config);
    if (o_track && o_track->count()) cfg.track_dir = track;
    if (o_out && o_out->count()) cfg.out_dir = out;
    if (o_lut && o_lut->count()) cfg.lut_file = lut;
    if (o_seed && o_seed->count()) cfg.seed = seed;
    if (o_threads && o_threads->count()) cfg.threads = threads;
    if (o_model && o_model->count()) {
      parse_motion_model(model);  // validate before storing
      cfg.motion.model = model;
    }
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte-Carlo localization testbed for small fast cars"};
  app.require_subcommand(1);

  // build-lut
  auto* c_lut = app.add_subcommand(
      "build-lut", "precompute the expected-range table for a track");
  CommonFlags f_lut;
  f_lut.attach(c_lut);
  int lut_ntheta = 0;
  double lut_max_range = 0.0, lut_mem_cap = 0.0;
  bool lut_serial = false;
  auto* o_ntheta = c_lut->add_option("--ntheta", lut_ntheta,
                                     "angular bins over the full circle");
  auto* o_maxr = c_lut->add_option("--max-range", lut_max_range, "meters");
  auto* o_cap = c_lut->add_option("--memory-cap-mb", lut_mem_cap,
                                  "refuse to build tables larger than this");
  c_lut->add_flag("--serial", lut_serial, "use the serial reference builder");

  // gen-track
  auto* c_gen = app.add_subcommand(
      "gen-track", "generate a stadium track bundle (map + raceline)");
  std::string gen_preset, gen_out;
  c_gen->add_option("--preset", gen_preset, "oval | hairpin")->required();
  c_gen->add_option("--out", gen_out, "bundle directory")->required();
  double gen_res = 0.0, gen_width = 0.0, gen_straight = 0.0, gen_radius = 0.0,
         gen_vmax = 0.0;
  auto* og_res = c_gen->add_option("--resolution", gen_res, "m per cell");
  auto* og_w = c_gen->add_option("--width", gen_width, "corridor width (m)");
  auto* og_s = c_gen->add_option("--straight", gen_straight,
                                 "straight length (m)");
  auto* og_r = c_gen->add_option("--radius", gen_radius, "end-arc radius (m)");
  auto* og_v = c_gen->add_option("--vmax", gen_vmax, "speed cap (m/s)");

  // experiment
  auto* c_exp = app.add_subcommand(
      "experiment", "closed-loop laps over the model x slip grid");
  CommonFlags f_exp;
  f_exp.attach(c_exp);
  int exp_laps = 0;
  std::vector<std::string> exp_models, exp_conditions;
  bool exp_gt = false, exp_save_logs = false;
  auto* oe_laps = c_exp->add_option("--laps", exp_laps, "laps per condition");
  auto* oe_models =
      c_exp->add_option("--models", exp_models, "comma list: naive,diffdrive,tum")
          ->delimiter(',');
  auto* oe_conds =
      c_exp->add_option("--conditions", exp_conditions, "comma list: hq,lq")
          ->delimiter(',');
  c_exp->add_flag("--ground-truth", exp_gt,
                  "controller reads ground truth (baseline row)");
  c_exp->add_flag("--save-logs", exp_save_logs,
                  "also write replayable scan logs");

  // replay
  auto* c_rep = app.add_subcommand(
      "replay", "run the filter open-loop over a recorded scan log");
  CommonFlags f_rep;
  f_rep.attach(c_rep, /*with_model=*/true);
  std::string rep_log;
  c_rep->add_option("--log", rep_log, "sim_log.jsonl path")->required();

  // bench
  auto* c_bench = app.add_subcommand(
      "bench", "filter step latency on a synthetic raceline workload");
  CommonFlags f_bench;
  f_bench.attach(c_bench, /*with_model=*/true);
  std::string bench_backend = "lut";
  int bench_steps = 0, bench_k = 0;
  std::vector<int> bench_sweep;
  c_bench->add_option("--backend", bench_backend, "lut | exact | both")
      ->check(CLI::IsMember({"lut", "exact", "both"}));
  auto* ob_steps = c_bench->add_option(
      "--steps", bench_steps, "steps per run (default 10000 lut, 300 exact)");
  auto* ob_k = c_bench->add_option("--k", bench_k, "scanlines per update");
  c_bench->add_option("--sweep-n", bench_sweep,
                      "comma list of particle counts")
      ->delimiter(',');

  // dump-config
  auto* c_dump = app.add_subcommand(
      "dump-config", "print the fully resolved configuration");
  CommonFlags f_dump;
  f_dump.attach(c_dump, /*with_model=*/true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad flags are config errors
  }

  try {
    if (c_lut->parsed()) {
      RunConfig cfg = f_lut.resolve();
      if (o_ntheta->count()) cfg.lut.ntheta = lut_ntheta;
      if (o_maxr->count()) cfg.lut.max_range = lut_max_range;
      if (o_cap->count()) cfg.lut.memory_cap_mb = lut_mem_cap;
      return cmd_build_lut(cfg, lut_serial);
    }
    if (c_gen->parsed()) {
      TrackParams p;
      if (gen_preset == "oval") {
        p = oval_params();
      } else if (gen_preset == "hairpin") {
        p = hairpin_params();
      } else {
        throw ConfigError("unknown preset '" + gen_preset +
                          "' (want oval or hairpin)");
      }
      if (og_res->count()) p.resolution = gen_res;
      if (og_w->count()) p.width = gen_width;
      if (og_s->count()) p.straight_len = gen_straight;
      if (og_r->count()) p.radius = gen_radius;
      if (og_v->count()) p.v_max = gen_vmax;
      return cmd_gen_track(gen_preset, gen_out, p);
    }
    if (c_exp->parsed()) {
      RunConfig cfg = f_exp.resolve();
      if (oe_laps->count()) cfg.experiment.laps = exp_laps;
      if (oe_models->count()) {
        for (const auto& m : exp_models) parse_motion_model(m);
        cfg.experiment.models = exp_models;
      }
      if (oe_conds->count()) {
        for (const auto& c : exp_conditions)
          if (c != "hq" && c != "lq")
            throw ConfigError("conditions must be hq or lq");
        cfg.experiment.conditions = exp_conditions;
      }
      if (exp_gt) cfg.experiment.ground_truth = true;
      if (exp_save_logs) cfg.experiment.save_logs = true;
      return cmd_experiment(cfg);
    }
    if (c_rep->parsed()) {
      RunConfig cfg = f_rep.resolve();
      return cmd_replay(cfg, rep_log, f_rep.o_seed->count() > 0);
    }
    if (c_bench->parsed()) {
      RunConfig cfg = f_bench.resolve();
      if (ob_k->count()) cfg.sensor.k = bench_k;
      return cmd_bench(cfg, bench_backend, bench_steps, ob_steps->count() > 0,
                       bench_sweep);
    }
    if (c_dump->parsed()) {
      RunConfig cfg = f_dump.resolve();
      cfg.dump(std::cout);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 3;
  } catch (const DnfError& e) {
    std::fprintf(stderr, "dnf: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
