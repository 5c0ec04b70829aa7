#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dronav/error.hpp"
#include "dronav/geom/transform.hpp"
#include "dronav/sensing/lidar.hpp"

namespace dronav::sensing {

class ScanLogError : public Error {
 public:
  ScanLogError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

/// One scan together with the truth pose of the sensor when it was taken.
struct ScanRecord {
  double stamp = 0.0;
  geom::Pose2D pose;
  std::vector<double> ranges;
};

/// `stamp x y theta n r_0 ... r_{n-1}`, fixed 4-decimal fields, `inf` for no
/// return. One record per line.
std::string format_scan_record(const ScanRecord& rec);
ScanRecord parse_scan_record(const std::string& line, int line_no = 1);

void write_scan_log(std::ostream& out, const std::vector<ScanRecord>& records);
/// Blank lines and lines starting with '#' are skipped.
std::vector<ScanRecord> read_scan_log(std::istream& in);

/// Rebuild a LaserScan from a record with the given spec.
LaserScan to_scan(const ScanRecord& rec, const LidarSpec& spec);

}  // namespace dronav::sensing
