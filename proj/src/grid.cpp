#include "trackloc/grid.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <yaml-cpp/yaml.h>

#include "trackloc/errors.hpp"

namespace trackloc {

namespace {

struct Image {
  int width = 0, height = 0;
  std::vector<uint8_t> pixels;  // row 0 = top
};

Image load_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open image: " + path);
  std::string magic;
  f >> magic;
  if (magic != "P5" && magic != "P2")
    throw ConfigError("unsupported image format (want P2/P5 PGM): " + path);

  auto next_int = [&]() -> int {
    // skip whitespace and '#' comments between header tokens
    while (true) {
      int c = f.peek();
      if (c == '#') {
        std::string line;
        std::getline(f, line);
      } else if (std::isspace(c)) {
        f.get();
      } else {
        break;
      }
    }
    int v;
    if (!(f >> v)) throw IoError("truncated PGM header: " + path);
    return v;
  };

  Image img;
  img.width = next_int();
  img.height = next_int();
  int maxval = next_int();
  if (img.width <= 0 || img.height <= 0)
    throw ConfigError("bad PGM dimensions: " + path);
  if (maxval != 255)
    throw ConfigError("only 8-bit PGM supported (maxval 255): " + path);

  size_t n = static_cast<size_t>(img.width) * img.height;
  img.pixels.resize(n);
  if (magic == "P5") {
    f.get();  // single whitespace after maxval
    f.read(reinterpret_cast<char*>(img.pixels.data()),
           static_cast<std::streamsize>(n));
    if (static_cast<size_t>(f.gcount()) != n)
      throw IoError("truncated PGM payload: " + path);
  } else {
    for (size_t i = 0; i < n; ++i) {
      int v;
      if (!(f >> v)) throw IoError("truncated PGM payload: " + path);
      img.pixels[i] = static_cast<uint8_t>(v);
    }
  }
  return img;
}

Image load_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("cannot open image: " + path);
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (fp) std::fclose(fp);
    throw IoError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoError("corrupt PNG: " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY || depth != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw ConfigError("map image must be 8-bit grayscale: " + path);
  }
  Image img;
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.pixels.resize(static_cast<size_t>(img.width) * img.height);
  std::vector<png_bytep> rows(img.height);
  for (int r = 0; r < img.height; ++r)
    rows[r] = img.pixels.data() + static_cast<size_t>(r) * img.width;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

bool has_suffix(const std::string& s, const std::string& suf) {
  if (s.size() < suf.size()) return false;
  std::string tail = s.substr(s.size() - suf.size());
  for (auto& c : tail) c = static_cast<char>(std::tolower(c));
  return tail == suf;
}

MapMetadata parse_metadata(const std::string& path, int* want_w, int* want_h) {
  if (!std::filesystem::exists(path))
    throw IoError("metadata file not found: " + path);
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw ConfigError("bad metadata YAML (" + path + "): " + e.what());
  }
  MapMetadata m;
  *want_w = *want_h = -1;
  for (const auto& kv : root) {
    std::string key = kv.first.as<std::string>();
    try {
      if (key == "image") {
        m.image = kv.second.as<std::string>();
      } else if (key == "resolution") {
        m.resolution = kv.second.as<double>();
      } else if (key == "origin") {
        if (!kv.second.IsSequence() || kv.second.size() < 2)
          throw ConfigError("metadata origin must be [x, y, yaw]: " + path);
        m.origin.x = kv.second[0].as<double>();
        m.origin.y = kv.second[1].as<double>();
        m.origin.theta = kv.second.size() > 2 ? kv.second[2].as<double>() : 0.0;
      } else if (key == "negate") {
        m.negate = kv.second.as<int>() != 0;
      } else if (key == "occupied_thresh") {
        m.occupied_thresh = kv.second.as<double>();
      } else if (key == "free_thresh") {
        m.free_thresh = kv.second.as<double>();
      } else if (key == "width") {
        *want_w = kv.second.as<int>();
      } else if (key == "height") {
        *want_h = kv.second.as<int>();
      } else if (key == "mode") {
        // tolerated for compatibility with common map sidecars; ignored
      } else {
        throw ConfigError("unknown metadata key '" + key + "' in " + path);
      }
    } catch (const YAML::Exception& e) {
      throw ConfigError("bad metadata value for '" + key + "': " + e.what());
    }
  }
  if (m.image.empty()) throw ConfigError("metadata missing 'image': " + path);
  if (m.resolution <= 0.0)
    throw ConfigError("metadata resolution must be > 0: " + path);
  if (m.free_thresh >= m.occupied_thresh)
    throw ConfigError("free_thresh must be below occupied_thresh: " + path);
  return m;
}

}  // namespace

CellState classify_pixel(uint8_t pixel, const MapMetadata& m) {
  double occ = m.negate ? pixel / 255.0 : (255 - pixel) / 255.0;
  if (occ >= m.occupied_thresh) return CellState::OCCUPIED;
  if (occ <= m.free_thresh) return CellState::FREE;
  return CellState::UNKNOWN;
}

void OccupancyGrid::finish_init() {
  inv_res_ = 1.0 / res_;
  cos0_ = std::cos(origin_.theta);
  sin0_ = std::sin(origin_.theta);
}

OccupancyGrid OccupancyGrid::load(const std::string& metadata_path) {
  int want_w, want_h;
  MapMetadata meta = parse_metadata(metadata_path, &want_w, &want_h);

  std::filesystem::path img_path(meta.image);
  if (img_path.is_relative())
    img_path = std::filesystem::path(metadata_path).parent_path() / img_path;

  Image img;
  if (has_suffix(img_path.string(), ".png"))
    img = load_png(img_path.string());
  else
    img = load_pgm(img_path.string());

  if ((want_w >= 0 && want_w != img.width) ||
      (want_h >= 0 && want_h != img.height))
    throw ConfigError("metadata dimensions disagree with image: " +
                      metadata_path);

  OccupancyGrid g;
  g.nx_ = img.width;
  g.ny_ = img.height;
  g.res_ = meta.resolution;
  g.origin_ = meta.origin;
  g.cells_.resize(static_cast<size_t>(g.nx_) * g.ny_);
  // image row 0 is the top of the map; cell row 0 is the bottom
  for (int cy = 0; cy < g.ny_; ++cy) {
    const uint8_t* src =
        img.pixels.data() + static_cast<size_t>(g.ny_ - 1 - cy) * g.nx_;
    uint8_t* dst = g.cells_.data() + static_cast<size_t>(cy) * g.nx_;
    for (int cx = 0; cx < g.nx_; ++cx)
      dst[cx] = static_cast<uint8_t>(classify_pixel(src[cx], meta));
  }
  g.finish_init();
  return g;
}

OccupancyGrid OccupancyGrid::from_states(int nx, int ny, double resolution,
                                         const Pose2D& origin,
                                         std::vector<CellState> states) {
  if (nx <= 0 || ny <= 0 ||
      states.size() != static_cast<size_t>(nx) * static_cast<size_t>(ny))
    throw ConfigError("from_states: dimensions do not match state vector");
  OccupancyGrid g;
  g.nx_ = nx;
  g.ny_ = ny;
  g.res_ = resolution;
  g.origin_ = origin;
  g.cells_.resize(states.size());
  for (size_t i = 0; i < states.size(); ++i)
    g.cells_[i] = static_cast<uint8_t>(states[i]);
  g.finish_init();
  return g;
}

size_t OccupancyGrid::count(CellState s) const {
  size_t n = 0;
  for (uint8_t c : cells_)
    if (c == static_cast<uint8_t>(s)) ++n;
  return n;
}

void OccupancyGrid::save_pgm(const std::string& pgm_path) const {
  std::ofstream f(pgm_path, std::ios::binary);
  if (!f) throw IoError("cannot write " + pgm_path);
  f << "P5\n" << nx_ << " " << ny_ << "\n255\n";
  std::vector<uint8_t> row(nx_);
  for (int r = 0; r < ny_; ++r) {
    int cy = ny_ - 1 - r;  // top image row = highest cell row
    for (int cx = 0; cx < nx_; ++cx) {
      switch (state(cx, cy)) {
        case CellState::FREE: row[cx] = 255; break;
        case CellState::OCCUPIED: row[cx] = 0; break;
        default: row[cx] = 205; break;
      }
    }
    f.write(reinterpret_cast<const char*>(row.data()), nx_);
  }
  if (!f) throw IoError("short write: " + pgm_path);
}

void OccupancyGrid::save_metadata(const std::string& yaml_path,
                                  const std::string& image_name) const {
  std::ofstream f(yaml_path);
  if (!f) throw IoError("cannot write " + yaml_path);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "image: %s\nresolution: %.6f\norigin: [%.6f, %.6f, %.6f]\n"
                "negate: 0\noccupied_thresh: 0.65\nfree_thresh: 0.196\n",
                image_name.c_str(), res_, origin_.x, origin_.y, origin_.theta);
  f << buf;
}

}  // namespace trackloc
