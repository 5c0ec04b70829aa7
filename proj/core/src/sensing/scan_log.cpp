#include "dronav/sensing/scan_log.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace dronav::sensing {

ScanLogError::ScanLogError(int line, const std::string& what)
    : Error("scan log line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

void append_fixed(std::string& out, double v) {
  if (std::isinf(v) && v > 0) {
    out += "inf";
    return;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  out += buf;
}

double parse_field(std::istringstream& in, int line_no, const char* name) {
  std::string tok;
  if (!(in >> tok)) throw ScanLogError(line_no, std::string("missing ") + name);
  if (tok == "inf") return kNoReturn;
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ScanLogError(line_no, std::string("bad ") + name + " '" + tok + "'");
  }
}

}  // namespace

std::string format_scan_record(const ScanRecord& rec) {
  std::string out;
  out.reserve(16 + rec.ranges.size() * 8);
  append_fixed(out, rec.stamp);
  for (double v : {rec.pose.x, rec.pose.y, rec.pose.theta}) {
    out += ' ';
    append_fixed(out, v);
  }
  out += ' ';
  out += std::to_string(rec.ranges.size());
  for (double r : rec.ranges) {
    out += ' ';
    append_fixed(out, r);
  }
  return out;
}

ScanRecord parse_scan_record(const std::string& line, int line_no) {
  std::istringstream in(line);
  ScanRecord rec;
  rec.stamp = parse_field(in, line_no, "stamp");
  rec.pose.x = parse_field(in, line_no, "x");
  rec.pose.y = parse_field(in, line_no, "y");
  rec.pose.theta = parse_field(in, line_no, "theta");
  long n = -1;
  if (!(in >> n) || n < 0) throw ScanLogError(line_no, "bad beam count");
  rec.ranges.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double r = parse_field(in, line_no, "range");
    if (r < 0) throw ScanLogError(line_no, "negative range");
    rec.ranges.push_back(r);
  }
  std::string extra;
  if (in >> extra) throw ScanLogError(line_no, "trailing field '" + extra + "'");
  return rec;
}

void write_scan_log(std::ostream& out, const std::vector<ScanRecord>& records) {
  for (const auto& r : records) out << format_scan_record(r) << '\n';
}

std::vector<ScanRecord> read_scan_log(std::istream& in) {
  std::vector<ScanRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    out.push_back(parse_scan_record(line, line_no));
  }
  return out;
}

LaserScan to_scan(const ScanRecord& rec, const LidarSpec& spec) {
  if (static_cast<int>(rec.ranges.size()) != spec.num_beams)
    throw Error("scan record has " + std::to_string(rec.ranges.size()) + " beams, spec has " +
                std::to_string(spec.num_beams));
  LaserScan scan;
  scan.stamp = rec.stamp;
  scan.ranges = rec.ranges;
  scan.spec = spec;
  return scan;
}

}  // namespace dronav::sensing
