#include "dronav/runtime/map_io.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dronav::runtime {
namespace fs = std::filesystem;
using mapping::CellState;

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << data;
  if (!out) throw IoError("short write to " + path);
}

std::string describe(const std::string& file, long line, long byte, const std::string& what) {
  std::string loc = file;
  if (line >= 0) loc += ":" + std::to_string(line);
  if (byte >= 0) loc += " byte " + std::to_string(byte);
  return loc + ": " + what;
}

}  // namespace

FormatError::FormatError(const std::string& file, long line, long byte, const std::string& what)
    : Error(describe(file, line, byte, what)), line_(line), byte_(byte) {}

std::string map_yaml_path(const std::string& path) {
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".yaml") == 0) return path;
  return path + ".yaml";
}

std::string encode_pgm(const mapping::OccupancyGrid& grid) {
  const auto& g = grid.geometry;
  std::string out = "P5\n# CREATOR: dronav " + shortest(g.resolution) + " m/pix\n" + std::to_string(g.width) +
                    " " + std::to_string(g.height) + "\n255\n";
  const auto header = out.size();
  out.resize(header + static_cast<std::size_t>(g.width) * g.height);
  for (int row = 0; row < g.height; ++row) {
    const int y = g.height - 1 - row;
    for (int x = 0; x < g.width; ++x) {
      unsigned char v = 205;
      switch (grid.at({x, y})) {
        case CellState::kFree: v = 255; break;
        case CellState::kOccupied: v = 0; break;
        case CellState::kUnknown: v = 205; break;
      }
      out[header + static_cast<std::size_t>(row) * g.width + x] = static_cast<char>(v);
    }
  }
  return out;
}

std::string save_map(const mapping::OccupancyGrid& grid, const std::string& path) {
  const auto& g = grid.geometry;
  if (g.width <= 0 || g.height <= 0 || grid.cells.empty()) throw IoError("refusing to save an empty map");
  const fs::path yaml = map_yaml_path(path);
  fs::path pgm = yaml;
  pgm.replace_extension(".pgm");
  if (yaml.has_parent_path()) fs::create_directories(yaml.parent_path());
  write_file(pgm.string(), encode_pgm(grid));
  std::string y = "image: " + pgm.filename().string() + "\n";
  y += "resolution: " + shortest(g.resolution) + "\n";
  y += "origin: [" + shortest(g.origin.x) + ", " + shortest(g.origin.y) + ", 0]\n";
  y += "negate: 0\noccupied_thresh: 0.65\nfree_thresh: 0.196\nmode: trinary\n";
  write_file(yaml.string(), y);
  return yaml.string();
}

std::string save_map(const mapping::LogOddsGrid& grid, const std::string& path) {
  return save_map(mapping::to_occupancy(grid), path);
}

mapping::OccupancyGrid decode_pgm(const std::string& bytes, const MapMetadata& meta, const std::string& file) {
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) {
    const auto end = bytes.begin() + static_cast<long>(std::min(pos, bytes.size()));
    const long line = 1 + static_cast<long>(std::count(bytes.begin(), end, '\n'));
    throw FormatError(file, line, static_cast<long>(pos), what);
  };
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&](const char* what) {
    skip_space();
    long v = 0;
    const auto start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1'000'000) fail(std::string(what) + " too large");
      ++pos;
    }
    if (pos == start) fail(std::string("expected ") + what);
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') fail("expected binary PGM magic P5");
  pos = 2;
  const long w = number("width");
  const long h = number("height");
  const long maxval = number("maxval");
  if (w < 1 || h < 1) fail("width and height must be positive");
  if (maxval < 1 || maxval > 255) fail("maxval must be in 1..255");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    fail("expected a single whitespace byte after maxval");
  ++pos;
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - pos < need) {
    pos = bytes.size();
    fail("pixel data truncated: need " + std::to_string(need) + " bytes");
  }
  if (bytes.size() - pos > need) {
    pos += need;
    fail("trailing bytes after pixel data");
  }
  mapping::OccupancyGrid grid({meta.resolution, int(w), int(h), {meta.origin[0], meta.origin[1]}},
                              CellState::kUnknown);
  for (long row = 0; row < h; ++row)
    for (long x = 0; x < w; ++x) {
      const auto v = static_cast<unsigned char>(bytes[pos + row * w + x]);
      const double p = meta.negate ? double(v) / maxval : double(maxval - v) / maxval;
      CellState s = CellState::kUnknown;
      if (p > meta.occupied_thresh) s = CellState::kOccupied;
      else if (p < meta.free_thresh) s = CellState::kFree;
      grid.set({int(x), int(h - 1 - row)}, s);
    }
  return grid;
}

MapFile load_map(const std::string& path) {
  const std::string yaml_path = map_yaml_path(path);
  const std::string text = read_file(yaml_path);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw FormatError(yaml_path, e.mark.line + 1, -1, e.msg);
  }
  if (!root.IsMap()) throw FormatError(yaml_path, 1, -1, "expected a mapping");
  MapFile mf;
  auto& m = mf.meta;
  auto need = [&](const char* key) {
    const auto n = root[key];
    if (!n) throw FormatError(yaml_path, -1, -1, std::string("missing key '") + key + "'");
    return n;
  };
  auto as_double = [&](const YAML::Node& n, const char* key) {
    try {
      return n.as<double>();
    } catch (const YAML::Exception&) {
      throw FormatError(yaml_path, n.Mark().line + 1, -1, std::string("'") + key + "' must be a number");
    }
  };
  try {
    m.image = need("image").as<std::string>();
  } catch (const YAML::BadConversion& e) {
    throw FormatError(yaml_path, e.mark.line + 1, -1, "'image' must be a string");
  }
  m.resolution = as_double(need("resolution"), "resolution");
  const auto origin = need("origin");
  if (!origin.IsSequence() || origin.size() != 3)
    throw FormatError(yaml_path, origin.Mark().line + 1, -1, "'origin' must be [x, y, yaw]");
  for (int i = 0; i < 3; ++i) m.origin[i] = as_double(origin[i], "origin");
  if (m.origin[2] != 0.0) throw FormatError(yaml_path, origin.Mark().line + 1, -1, "rotated map origins are not supported");
  if (!(m.resolution > 0.0)) throw FormatError(yaml_path, root["resolution"].Mark().line + 1, -1, "'resolution' must be positive");
  if (root["occupied_thresh"]) m.occupied_thresh = as_double(root["occupied_thresh"], "occupied_thresh");
  if (root["free_thresh"]) m.free_thresh = as_double(root["free_thresh"], "free_thresh");
  if (root["negate"]) {
    const auto n = root["negate"];
    try {
      m.negate = n.as<int>();
    } catch (const YAML::Exception&) {
      throw FormatError(yaml_path, n.Mark().line + 1, -1, "'negate' must be 0 or 1");
    }
    if (m.negate != 0 && m.negate != 1) throw FormatError(yaml_path, n.Mark().line + 1, -1, "'negate' must be 0 or 1");
  }
  if (root["mode"] && root["mode"].as<std::string>() != "trinary")
    throw FormatError(yaml_path, root["mode"].Mark().line + 1, -1, "only trinary mode is supported");
  fs::path img(m.image);
  if (img.is_relative()) img = fs::path(yaml_path).parent_path() / img;
  mf.grid = decode_pgm(read_file(img.string()), m, img.string());
  return mf;
}

}  // namespace dronav::runtime
