#include "trackloc/raycast.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>

#include "trackloc/errors.hpp"

namespace trackloc {

double cast_exact(const OccupancyGrid& g, double x, double y, double angle,
                  double max_range) {
  int cx, cy;
  if (!g.world_to_grid(x, y, cx, cy))
    throw std::out_of_range("cast_exact: start pose outside map");

  double step = g.resolution() * 0.5;
  double dx = std::cos(angle) * step, dy = std::sin(angle) * step;
  int nsteps = static_cast<int>(max_range / step);
  double px = x, py = y;
  for (int i = 0; i <= nsteps; ++i) {
    if (!g.world_to_grid(px, py, cx, cy)) return i * step;  // left the map
    if (g.blocks_ray(cx, cy)) return i * step;
    px += dx;
    py += dy;
  }
  return max_range;
}

void RangeLUT::finish_init() {
  inv_res_ = 1.0 / res_;
  cos0_ = std::cos(origin_.theta);
  sin0_ = std::sin(origin_.theta);
  bin_w_ = 2.0 * kPi / ntheta_;
  inv_bin_w_ = 1.0 / bin_w_;
}

RangeLUT RangeLUT::build(const OccupancyGrid& g, const LutParams& p,
                         LutBuildStats* stats, bool parallel) {
  if (p.ntheta < 1) throw ConfigError("LUT ntheta must be >= 1");
  if (p.max_range <= 0.0) throw ConfigError("LUT max_range must be > 0");

  size_t entries = static_cast<size_t>(g.nx()) * g.ny() * p.ntheta;
  size_t bytes = entries * sizeof(uint16_t);
  if (bytes > p.memory_cap_mb * 1024.0 * 1024.0)
    throw ConfigError("LUT would need " + std::to_string(bytes / (1 << 20)) +
                      " MB, above the configured cap");

  RangeLUT lut;
  lut.nx_ = g.nx();
  lut.ny_ = g.ny();
  lut.ntheta_ = p.ntheta;
  lut.res_ = g.resolution();
  lut.max_range_ = p.max_range;
  lut.origin_ = g.origin();
  lut.quantum_ = g.resolution() * 0.25;
  lut.finish_init();

  double qmax = p.max_range / lut.quantum_;
  if (qmax > 65535.0)
    throw ConfigError("max_range too large for 16-bit range quantization");

  auto t0 = std::chrono::steady_clock::now();
  lut.values_.assign(entries, 0);

  const int nx = lut.nx_, ny = lut.ny_, nt = lut.ntheta_;
  const double inv_quantum = 1.0 / lut.quantum_;
  uint16_t* out = lut.values_.data();

  // every entry is independent: same table whether or not this runs parallel
#pragma omp parallel for schedule(dynamic, 8) if (parallel)
  for (int cy = 0; cy < ny; ++cy) {
    for (int cx = 0; cx < nx; ++cx) {
      if (!g.is_free(cx, cy)) continue;  // stays 0
      double wx, wy;
      g.grid_to_world(cx, cy, wx, wy);
      uint16_t* row = out + (static_cast<size_t>(cy) * nx + cx) * nt;
      for (int b = 0; b < nt; ++b) {
        double r = cast_exact(g, wx, wy, lut.bin_center(b), p.max_range);
        row[b] = static_cast<uint16_t>(r * inv_quantum + 0.5);
      }
    }
  }

  if (stats) {
    stats->seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    stats->bytes = bytes;
    stats->cells_free = g.count(CellState::FREE);
    stats->cells_total = static_cast<size_t>(g.nx()) * g.ny();
  }
  return lut;
}

namespace {

constexpr char kMagic[4] = {'R', 'L', 'U', 'T'};
constexpr uint32_t kVersion = 1;

void put_u32(std::ostream& f, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  f.write(reinterpret_cast<char*>(b), 4);
}

uint32_t get_u32(std::istream& f) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& f, double v) {
  uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  f.write(reinterpret_cast<char*>(b), 8);
}

double get_f64(std::istream& f) {
  unsigned char b[8];
  f.read(reinterpret_cast<char*>(b), 8);
  uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

void RangeLUT::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write LUT file: " + path);
  f.write(kMagic, 4);
  put_u32(f, kVersion);
  put_u32(f, static_cast<uint32_t>(nx_));
  put_u32(f, static_cast<uint32_t>(ny_));
  put_u32(f, static_cast<uint32_t>(ntheta_));
  put_f64(f, res_);
  put_f64(f, max_range_);
  put_f64(f, origin_.x);
  put_f64(f, origin_.y);
  put_f64(f, origin_.theta);
  put_f64(f, quantum_);
  std::vector<unsigned char> buf(values_.size() * 2);
  for (size_t i = 0; i < values_.size(); ++i) {
    buf[2 * i] = static_cast<unsigned char>(values_[i]);
    buf[2 * i + 1] = static_cast<unsigned char>(values_[i] >> 8);
  }
  f.write(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size()));
  if (!f) throw IoError("short write on LUT file: " + path);
}

RangeLUT RangeLUT::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open LUT file: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("not a LUT file (bad magic): " + path);
  uint32_t version = get_u32(f);
  if (version != kVersion)
    throw IoError("unsupported LUT file version " + std::to_string(version) +
                  ": " + path);
  RangeLUT lut;
  lut.nx_ = static_cast<int>(get_u32(f));
  lut.ny_ = static_cast<int>(get_u32(f));
  lut.ntheta_ = static_cast<int>(get_u32(f));
  lut.res_ = get_f64(f);
  lut.max_range_ = get_f64(f);
  lut.origin_.x = get_f64(f);
  lut.origin_.y = get_f64(f);
  lut.origin_.theta = get_f64(f);
  lut.quantum_ = get_f64(f);
  if (!f || lut.nx_ <= 0 || lut.ny_ <= 0 || lut.ntheta_ <= 0 ||
      lut.res_ <= 0.0 || lut.quantum_ <= 0.0)
    throw IoError("corrupt LUT header: " + path);
  size_t entries = static_cast<size_t>(lut.nx_) * lut.ny_ * lut.ntheta_;
  std::vector<unsigned char> buf(entries * 2);
  f.read(reinterpret_cast<char*>(buf.data()),
         static_cast<std::streamsize>(buf.size()));
  if (static_cast<size_t>(f.gcount()) != buf.size())
    throw IoError("truncated LUT payload: " + path);
  lut.values_.resize(entries);
  for (size_t i = 0; i < entries; ++i)
    lut.values_[i] = static_cast<uint16_t>(buf[2 * i]) |
                     (static_cast<uint16_t>(buf[2 * i + 1]) << 8);
  lut.finish_init();
  return lut;
}

}  // namespace trackloc
