#pragma once

#include <array>
#include <string>

#include "dronav/error.hpp"
#include "dronav/mapping/grid.hpp"

namespace dronav::runtime {

class IoError : public Error {
  using Error::Error;
};

/// Malformed map file. line() is 1-based for YAML problems, byte() is the
/// offset into a PGM; the other one is -1.
class FormatError : public Error {
 public:
  FormatError(const std::string& file, long line, long byte, const std::string& what);
  long line() const { return line_; }
  long byte() const { return byte_; }

 private:
  long line_;
  long byte_;
};

struct MapMetadata {
  std::string image;  // as written in the sidecar
  double resolution = 0.05;
  std::array<double, 3> origin{0.0, 0.0, 0.0};  // lower-left corner of cell (0, 0), yaw
  double occupied_thresh = 0.65;
  double free_thresh = 0.196;
  int negate = 0;
};

struct MapFile {
  mapping::OccupancyGrid grid;
  MapMetadata meta;
};

/// Sidecar path for `path`: unchanged when it ends in .yaml, else path + ".yaml".
std::string map_yaml_path(const std::string& path);

/// Writes <stem>.pgm (P5; 255 free, 0 occupied, 205 unknown; first row is
/// the top of the map) and the <stem>.yaml sidecar. Returns the sidecar path.
std::string save_map(const mapping::OccupancyGrid& grid, const std::string& path);
std::string save_map(const mapping::LogOddsGrid& grid, const std::string& path);

/// Trinary load. Throws IoError for unreadable files, FormatError otherwise.
MapFile load_map(const std::string& path);

/// Decodes PGM bytes (P5, maxval <= 255) with the sidecar thresholds.
mapping::OccupancyGrid decode_pgm(const std::string& bytes, const MapMetadata& meta,
                                  const std::string& file = "<memory>");

std::string encode_pgm(const mapping::OccupancyGrid& grid);

}  // namespace dronav::runtime
