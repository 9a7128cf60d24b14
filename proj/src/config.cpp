#include "trackloc/config.hpp"

#include <cmath>
#include <filesystem>
#include <ostream>
#include <set>
#include <sstream>
#include <yaml-cpp/yaml.h>

#include "trackloc/errors.hpp"

namespace trackloc {

namespace {

// reads one section, complains about keys it does not know
class Section {
 public:
  Section(const YAML::Node& node, std::string name)
      : node_(node), name_(std::move(name)) {}

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_[key]) return;
    try {
      out = node_[key].as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError("bad value for " + path(key));
    }
  }

  YAML::Node sub(const char* key) {
    seen_.insert(key);
    return node_ ? node_[key] : YAML::Node(YAML::NodeType::Undefined);
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      std::string key = kv.first.as<std::string>();
      if (!seen_.count(key))
        throw ConfigError("unknown config key " + path(key.c_str()));
    }
  }

 private:
  std::string path(const char* key) const {
    return name_.empty() ? std::string(key) : name_ + "." + key;
  }
  YAML::Node node_;
  std::string name_;
  std::set<std::string> seen_;
};

void parse_slip(const YAML::Node& n, const std::string& name,
                SlipProfile& out) {
  Section s(n, name);
  s.get("trans_scale", out.trans_scale);
  s.get("trans_noise", out.trans_noise);
  s.get("rot_noise", out.rot_noise);
  s.finish();
  if (out.trans_noise < 0 || out.rot_noise < 0 || out.trans_scale <= 0)
    throw ConfigError(name + ": noise terms must be >= 0, scale > 0");
}

RunConfig parse_root(const YAML::Node& root) {
  RunConfig c;
  Section top(root, "");
  top.get("seed", c.seed);
  top.get("threads", c.threads);
  top.get("track_dir", c.track_dir);
  top.get("out_dir", c.out_dir);
  top.get("lut_file", c.lut_file);

  {
    Section s(top.sub("motion"), "motion");
    s.get("model", c.motion.model);
    s.get("alpha1", c.motion.params.alpha1);
    s.get("alpha2", c.motion.params.alpha2);
    s.get("alpha3", c.motion.params.alpha3);
    s.get("alpha4", c.motion.params.alpha4);
    s.get("lam_thresh", c.motion.params.lam_thresh);
    s.get("kappa", c.motion.params.kappa);
    s.get("max_steer", c.motion.params.max_steer);
    s.get("wheelbase", c.motion.params.wheelbase);
    s.get("sigma_xy", c.motion.params.sigma_xy);
    s.get("sigma_theta", c.motion.params.sigma_theta);
    s.finish();
    parse_motion_model(c.motion.model);  // validates the name
  }
  {
    Section s(top.sub("sensor"), "sensor");
    s.get("layout", c.sensor.layout);
    s.get("k", c.sensor.k);
    s.get("aspect", c.sensor.aspect);
    s.get("z_hit", c.sensor.beam.z_hit);
    s.get("z_short", c.sensor.beam.z_short);
    s.get("z_max", c.sensor.beam.z_max);
    s.get("z_rand", c.sensor.beam.z_rand);
    s.get("sigma_hit", c.sensor.beam.sigma_hit);
    s.get("lambda_short", c.sensor.beam.lambda_short);
    s.get("squash", c.sensor.squash);
    s.get("floor_log_weight", c.sensor.floor_log_weight);
    s.get("lidar_offset_x", c.sensor.lidar_offset.x);
    s.get("lidar_offset_y", c.sensor.lidar_offset.y);
    s.get("lidar_offset_theta", c.sensor.lidar_offset.theta);
    s.finish();
    if (c.sensor.layout != "uniform" && c.sensor.layout != "boxed")
      throw ConfigError("sensor.layout must be uniform or boxed");
  }
  {
    Section s(top.sub("lut"), "lut");
    s.get("ntheta", c.lut.ntheta);
    s.get("max_range", c.lut.max_range);
    s.get("memory_cap_mb", c.lut.memory_cap_mb);
    s.finish();
  }
  {
    Section s(top.sub("filter"), "filter");
    s.get("particles", c.filter.particles);
    s.get("resample_ess_frac", c.filter.resample_ess_frac);
    s.get("init_sigma_xy", c.filter.init_sigma_xy);
    s.get("init_sigma_theta", c.filter.init_sigma_theta);
    s.finish();
  }
  {
    Section s(top.sub("sim"), "sim");
    s.get("physics_hz", c.sim.physics_hz);
    s.get("update_hz", c.sim.update_hz);
    s.get("speed_scale", c.sim.speed_scale);
    s.get("t_limit", c.sim.t_limit);
    s.get("scan_beams", c.sim.scan_beams);
    s.get("scan_fov_deg", c.sim.scan_fov_deg);
    s.get("scan_noise_sigma", c.sim.scan_noise_sigma);
    s.get("wheelbase", c.sim.car.wheelbase);
    s.get("max_steer", c.sim.car.max_steer);
    s.get("steer_rate", c.sim.car.steer_rate);
    s.get("accel_max", c.sim.car.accel_max);
    s.get("brake_max", c.sim.car.brake_max);
    s.get("clearance", c.sim.car.clearance);
    s.get("lookahead_gain", c.sim.lookahead_gain);
    s.get("lookahead_min", c.sim.lookahead_min);
    s.get("lookahead_max", c.sim.lookahead_max);
    s.get("speed_preview", c.sim.speed_preview);
    s.get("speed_gain", c.sim.speed_gain);
    s.finish();
  }
  {
    Section s(top.sub("slip"), "slip");
    parse_slip(s.sub("hq"), "slip.hq", c.slip.hq);
    parse_slip(s.sub("lq"), "slip.lq", c.slip.lq);
    s.finish();
  }
  {
    Section s(top.sub("eval"), "eval");
    s.get("alignment_stride", c.eval.alignment_stride);
    s.finish();
  }
  {
    Section s(top.sub("experiment"), "experiment");
    s.get("laps", c.experiment.laps);
    s.get("models", c.experiment.models);
    s.get("conditions", c.experiment.conditions);
    s.get("save_logs", c.experiment.save_logs);
    s.get("ground_truth", c.experiment.ground_truth);
    s.finish();
    for (const auto& m : c.experiment.models) parse_motion_model(m);
    for (const auto& cond : c.experiment.conditions)
      if (cond != "hq" && cond != "lq")
        throw ConfigError("experiment.conditions entries must be hq or lq");
  }
  top.finish();

  if (c.filter.particles < 1) throw ConfigError("filter.particles must be >= 1");
  if (c.sensor.k < 1) throw ConfigError("sensor.k must be >= 1");
  if (c.sim.update_hz <= 0 || c.sim.physics_hz < c.sim.update_hz)
    throw ConfigError("sim rates must satisfy physics_hz >= update_hz > 0");
  return c;
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw IoError("config file not found: " + path);
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw ConfigError("bad config YAML (" + path + "): " + e.what());
  }
  return parse_root(root);
}

RunConfig RunConfig::from_yaml_string(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("bad config YAML: ") + e.what());
  }
  return parse_root(root);
}

MotionModel parse_motion_model(const std::string& name) {
  if (name == "naive") return MotionModel::naive;
  if (name == "diffdrive") return MotionModel::diff_drive;
  if (name == "tum") return MotionModel::tum;
  throw ConfigError("unknown motion model '" + name +
                    "' (want naive, diffdrive, or tum)");
}

MotionModel RunConfig::motion_model() const {
  return parse_motion_model(motion.model);
}

FilterParams RunConfig::filter_params() const {
  FilterParams p;
  p.n = filter.particles;
  p.resample_ess_frac = filter.resample_ess_frac;
  p.init_sigma_xy = filter.init_sigma_xy;
  p.init_sigma_theta = filter.init_sigma_theta;
  p.seed = seed;
  return p;
}

LutParams RunConfig::lut_params() const {
  LutParams p;
  p.ntheta = lut.ntheta;
  p.max_range = lut.max_range;
  p.memory_cap_mb = lut.memory_cap_mb;
  return p;
}

ScanSimParams RunConfig::scan_params() const {
  ScanSimParams p;
  p.beams = sim.scan_beams;
  p.fov = deg2rad(sim.scan_fov_deg);
  p.range_max = lut.max_range;
  p.noise_sigma = sim.scan_noise_sigma;
  return p;
}

SlipProfile RunConfig::slip_for(const std::string& condition) const {
  if (condition == "hq") return slip.hq;
  if (condition == "lq") return slip.lq;
  throw ConfigError("unknown slip condition '" + condition + "'");
}

RunParams RunConfig::run_params(const std::string& condition) const {
  RunParams r;
  r.physics_hz = sim.physics_hz;
  r.update_hz = sim.update_hz;
  r.speed_scale = sim.speed_scale;
  r.t_limit = sim.t_limit;
  r.lookahead_gain = sim.lookahead_gain;
  r.lookahead_min = sim.lookahead_min;
  r.lookahead_max = sim.lookahead_max;
  r.speed_preview = sim.speed_preview;
  r.speed_gain = sim.speed_gain;
  r.use_filter = !experiment.ground_truth;
  r.alignment_stride = eval.alignment_stride;
  r.lidar_offset = sensor.lidar_offset;
  r.scan = scan_params();
  r.slip = slip_for(condition);
  r.car = sim.car;
  return r;
}

void RunConfig::dump(std::ostream& os) const {
  auto num = [](double v) {
    std::ostringstream ss;
    ss.precision(15);  // round-trips every value we dump
    ss << v;
    return ss.str();
  };
  os << "# resolved run configuration; every key shown with its active value\n";
  os << "seed: " << seed << "              # root rng seed, all streams derive from it\n";
  os << "threads: " << threads << "           # OpenMP threads, 0 keeps the runtime default\n";
  os << "track_dir: \"" << track_dir << "\"   # track bundle: map.yaml + map.pgm + raceline.csv\n";
  os << "out_dir: \"" << out_dir << "\"      # experiment/replay output root\n";
  os << "lut_file: \"" << lut_file << "\"     # prebuilt range table; empty builds one in memory\n";
  os << "motion:\n";
  os << "  model: " << motion.model << "        # naive | diffdrive | tum\n";
  os << "  alpha1: " << num(motion.params.alpha1) << "        # rot noise from rot\n";
  os << "  alpha2: " << num(motion.params.alpha2) << "       # rot noise from trans\n";
  os << "  alpha3: " << num(motion.params.alpha3) << "        # trans noise from trans\n";
  os << "  alpha4: " << num(motion.params.alpha4) << "          # trans noise from rot\n";
  os << "  lam_thresh: " << num(motion.params.lam_thresh) << "    # m of trans above which the rot-noise cap engages\n";
  os << "  kappa: " << num(motion.params.kappa) << "        # cap gain: sigma_cap = kappa*trans*tan(max_steer)/wheelbase\n";
  os << "  max_steer: " << num(motion.params.max_steer) << "   # rad\n";
  os << "  wheelbase: " << num(motion.params.wheelbase) << "    # m\n";
  os << "  sigma_xy: " << num(motion.params.sigma_xy) << "      # naive model: fixed position noise (m)\n";
  os << "  sigma_theta: " << num(motion.params.sigma_theta) << "   # naive model: fixed heading noise (rad)\n";
  os << "sensor:\n";
  os << "  layout: " << sensor.layout << "        # uniform | boxed\n";
  os << "  k: " << sensor.k << "              # scanlines per update\n";
  os << "  aspect: " << num(sensor.aspect) << "        # boxed layout: corridor width/length ratio\n";
  os << "  z_hit: " << num(sensor.beam.z_hit) << "\n";
  os << "  z_short: " << num(sensor.beam.z_short) << "\n";
  os << "  z_max: " << num(sensor.beam.z_max) << "\n";
  os << "  z_rand: " << num(sensor.beam.z_rand) << "\n";
  os << "  sigma_hit: " << num(sensor.beam.sigma_hit) << "     # m\n";
  os << "  lambda_short: " << num(sensor.beam.lambda_short) << "   # 1/m\n";
  os << "  squash: " << num(sensor.squash) << "  # exponent applied to the beam product\n";
  os << "  floor_log_weight: " << num(sensor.floor_log_weight) << "\n";
  os << "  lidar_offset_x: " << num(sensor.lidar_offset.x) << "   # sensor pose in the body frame (m)\n";
  os << "  lidar_offset_y: " << num(sensor.lidar_offset.y) << "\n";
  os << "  lidar_offset_theta: " << num(sensor.lidar_offset.theta) << "\n";
  os << "lut:\n";
  os << "  ntheta: " << lut.ntheta << "        # angular bins over 2*pi\n";
  os << "  max_range: " << num(lut.max_range) << "    # m, also the scan range cap\n";
  os << "  memory_cap_mb: " << num(lut.memory_cap_mb) << "\n";
  os << "filter:\n";
  os << "  particles: " << filter.particles << "\n";
  os << "  resample_ess_frac: " << num(filter.resample_ess_frac) << "  # resample when ESS < frac*N\n";
  os << "  init_sigma_xy: " << num(filter.init_sigma_xy) << "      # init_pose spread (m)\n";
  os << "  init_sigma_theta: " << num(filter.init_sigma_theta) << "  # rad\n";
  os << "sim:\n";
  os << "  physics_hz: " << num(sim.physics_hz) << "\n";
  os << "  update_hz: " << num(sim.update_hz) << "     # scan + filter rate\n";
  os << "  speed_scale: " << num(sim.speed_scale) << "    # scales raceline target speeds\n";
  os << "  t_limit: " << num(sim.t_limit) << "      # per-lap timeout (simulated s)\n";
  os << "  scan_beams: " << sim.scan_beams << "\n";
  os << "  scan_fov_deg: " << num(sim.scan_fov_deg) << "\n";
  os << "  scan_noise_sigma: " << num(sim.scan_noise_sigma) << "  # m\n";
  os << "  wheelbase: " << num(sim.car.wheelbase) << "     # m\n";
  os << "  max_steer: " << num(sim.car.max_steer) << "    # rad\n";
  os << "  steer_rate: " << num(sim.car.steer_rate) << "      # rad/s slew\n";
  os << "  accel_max: " << num(sim.car.accel_max) << "       # m/s^2\n";
  os << "  brake_max: " << num(sim.car.brake_max) << "       # m/s^2\n";
  os << "  clearance: " << num(sim.car.clearance) << "    # wall-contact distance (m)\n";
  os << "  lookahead_gain: " << num(sim.lookahead_gain) << "  # Ld = clamp(gain*v, min, max)\n";
  os << "  lookahead_min: " << num(sim.lookahead_min) << "\n";
  os << "  lookahead_max: " << num(sim.lookahead_max) << "\n";
  os << "  speed_preview: " << num(sim.speed_preview) << "   # s of raceline profile lookahead\n";
  os << "  speed_gain: " << num(sim.speed_gain) << "        # accel = gain*(v_target - v)\n";
  os << "slip:\n";
  os << "  hq:                  # grippy odometry\n";
  os << "    trans_scale: " << num(slip.hq.trans_scale) << "\n";
  os << "    trans_noise: " << num(slip.hq.trans_noise) << "  # variance of the multiplicative trans jitter\n";
  os << "    rot_noise: " << num(slip.hq.rot_noise) << "    # rad-per-m drift scale\n";
  os << "  lq:                  # slippery odometry\n";
  os << "    trans_scale: " << num(slip.lq.trans_scale) << "\n";
  os << "    trans_noise: " << num(slip.lq.trans_noise) << "\n";
  os << "    rot_noise: " << num(slip.lq.rot_noise) << "\n";
  os << "eval:\n";
  os << "  alignment_stride: " << eval.alignment_stride << "  # every n-th beam scored\n";
  os << "experiment:\n";
  os << "  laps: " << experiment.laps << "\n";
  os << "  models: [";
  for (size_t i = 0; i < experiment.models.size(); ++i)
    os << (i ? ", " : "") << experiment.models[i];
  os << "]\n";
  os << "  conditions: [";
  for (size_t i = 0; i < experiment.conditions.size(); ++i)
    os << (i ? ", " : "") << experiment.conditions[i];
  os << "]\n";
  os << "  save_logs: " << (experiment.save_logs ? "true" : "false")
     << "       # also write per-lap scan logs (jsonl)\n";
  os << "  ground_truth: " << (experiment.ground_truth ? "true" : "false")
     << "    # controller bypasses the filter (baseline)\n";
}

}  // namespace trackloc
