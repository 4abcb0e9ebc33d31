#include "rotpba/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "rotpba/errors.hpp"

namespace rotpba {

namespace {

static_assert(std::endian::native == std::endian::little, "map I/O assumes a little-endian host");

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

[[noreturn]] void parse_error(const std::string& origin, std::size_t line, const std::string& what) {
  throw Error(ErrorKind::kParse, origin + ":" + std::to_string(line) + ": " + what);
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

// Reads the next whitespace-delimited PGM header token, skipping `#` comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {}
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

std::string temp_path_for(const std::string& path) {
  return path + ".tmp." + std::to_string(::getpid());
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = temp_path_for(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::kIo, "write error in " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::kIo, "cannot move " + tmp + " to " + path);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

KeyValues KeyValues::parse(const std::string& text, const std::string& origin) {
  KeyValues kv;
  kv.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) parse_error(origin, n, "expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) parse_error(origin, n, "empty key");
    kv.values_[key] = value;
  }
  return kv;
}

KeyValues KeyValues::load(const std::string& path) { return parse(read_file(path), path); }

const std::string& KeyValues::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorKind::kConfig, origin_ + ": missing key '" + key + "'");
  return it->second;
}

double KeyValues::get_double(const std::string& key) const {
  const std::string& s = get(key);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::kConfig, origin_ + ": key '" + key + "' is not a number: " + s);
  }
  return v;
}

long long KeyValues::get_int(const std::string& key) const {
  const std::string& s = get(key);
  long long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::kConfig, origin_ + ": key '" + key + "' is not an integer: " + s);
  }
  return v;
}

bool KeyValues::get_bool(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw Error(ErrorKind::kConfig, origin_ + ": key '" + key + "' is not a boolean: " + s);
}

void KeyValues::set(const std::string& key, double value) { values_[key] = format_double(value); }

std::string KeyValues::format() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

StampedTrajectory load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "trajectory: cannot open " + path);
  std::vector<double> times;
  std::vector<Rotation> rotations;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::istringstream fields(strip_comment(line));
    double v[5];
    int count = 0;
    while (count < 5 && fields >> v[count]) ++count;
    if (count == 0 && fields.eof()) continue;
    std::string extra;
    if (count != 5 || (fields >> extra)) parse_error(path, n, "expected 't qx qy qz qw'");
    const Eigen::Quaterniond q(v[4], v[1], v[2], v[3]);
    if (!std::isfinite(q.norm()) || std::abs(q.norm() - 1.0) > 1e-6) {
      parse_error(path, n, "quaternion norm deviates from 1 by more than 1e-6");
    }
    times.push_back(v[0]);
    rotations.push_back(from_quaternion(q));
  }
  try {
    return StampedTrajectory(std::move(times), std::move(rotations));
  } catch (const Error& e) {
    throw Error(ErrorKind::kParse, path + ": " + e.what());
  }
}

void save_trajectory(const StampedTrajectory& traj, const std::string& path) {
  std::ostringstream os;
  os << "# t qx qy qz qw\n";
  char buf[160];
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Eigen::Quaterniond q = to_quaternion(traj.rotation(i));
    std::snprintf(buf, sizeof(buf), "%.9f %.17g %.17g %.17g %.17g\n", traj.time(i), q.x(), q.y(), q.z(), q.w());
    os << buf;
  }
  write_file_atomic(path, os.str());
}

CameraModel load_calibration(const std::string& path) {
  const KeyValues kv = KeyValues::load(path);
  CameraModel cam;
  cam.width = static_cast<int>(kv.get_int("width"));
  cam.height = static_cast<int>(kv.get_int("height"));
  cam.fx = kv.get_double("fx");
  cam.fy = kv.get_double("fy");
  cam.cx = kv.get_double("cx");
  cam.cy = kv.get_double("cy");
  cam.validate();
  return cam;
}

void save_calibration(const CameraModel& cam, const std::string& path) {
  KeyValues kv;
  kv.set("width", std::to_string(cam.width));
  kv.set("height", std::to_string(cam.height));
  kv.set("fx", cam.fx);
  kv.set("fy", cam.fy);
  kv.set("cx", cam.cx);
  kv.set("cy", cam.cy);
  write_file_atomic(path, kv.format());
}

DenseMap load_map_raw(const std::string& path) {
  const std::string data = read_file(path);
  if (data.size() < 16) throw Error(ErrorKind::kParse, path + ": truncated map header");
  std::uint64_t w = 0, h = 0;
  std::memcpy(&w, data.data(), 8);
  std::memcpy(&h, data.data() + 8, 8);
  if (w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20)) {
    throw Error(ErrorKind::kParse, path + ": implausible map size");
  }
  const PanoramaGeometry geom{static_cast<int>(w), static_cast<int>(h)};
  geom.validate();
  if (data.size() != 16 + 4 * geom.pixel_count()) {
    throw Error(ErrorKind::kParse, path + ": payload size does not match the header");
  }
  std::vector<double> values(geom.pixel_count());
  for (std::size_t i = 0; i < values.size(); ++i) {
    float f;
    std::memcpy(&f, data.data() + 16 + 4 * i, 4);
    values[i] = f;
  }
  return DenseMap(geom, std::move(values));
}

void save_map_raw(const DenseMap& map, const std::string& path) {
  std::string data(16 + 4 * map.size(), '\0');
  const std::uint64_t w = static_cast<std::uint64_t>(map.width());
  const std::uint64_t h = static_cast<std::uint64_t>(map.height());
  std::memcpy(data.data(), &w, 8);
  std::memcpy(data.data() + 8, &h, 8);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const float f = static_cast<float>(map[i]);
    std::memcpy(data.data() + 16 + 4 * i, &f, 4);
  }
  write_file_atomic(path, data);
}

void save_map_pgm(const DenseMap& map, const std::string& path, const ValidMask* mask) {
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    lo = std::min(lo, map[i]);
    hi = std::max(hi, map[i]);
  }
  if (!(lo <= hi)) lo = hi = 0.0;
  const double scale = hi > lo ? 65535.0 / (hi - lo) : 0.0;

  std::string data = "P5\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n65535\n";
  const std::size_t header = data.size();
  data.resize(header + 2 * map.size());
  for (std::size_t i = 0; i < map.size(); ++i) {
    std::uint16_t v = 0;
    if (!mask || (*mask)[i]) v = static_cast<std::uint16_t>(std::lround(std::clamp((map[i] - lo) * scale, 0.0, 65535.0)));
    data[header + 2 * i] = static_cast<char>(v >> 8);  // PGM samples are big-endian
    data[header + 2 * i + 1] = static_cast<char>(v & 0xff);
  }
  write_file_atomic(path, data);

  KeyValues tone;
  tone.set("min", lo);
  tone.set("max", hi);
  write_file_atomic(path + ".tonemap", tone.format());
}

void save_mask_pgm(const ValidMask& mask, const PanoramaGeometry& geom, const std::string& path) {
  if (mask.size() != geom.pixel_count()) throw Error(ErrorKind::kState, "mask size does not match geometry");
  std::string data = "P5\n" + std::to_string(geom.width) + " " + std::to_string(geom.height) + "\n255\n";
  for (std::uint8_t m : mask) data.push_back(static_cast<char>(m ? 255 : 0));
  write_file_atomic(path, data);
}

ValidMask load_mask_pgm(const std::string& path, PanoramaGeometry* geom) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  if (pgm_token(in) != "P5") throw Error(ErrorKind::kParse, path + ": not a binary PGM");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(pgm_token(in));
    h = std::stoi(pgm_token(in));
    maxval = std::stoi(pgm_token(in));
  } catch (const std::exception&) {
    throw Error(ErrorKind::kParse, path + ": malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) throw Error(ErrorKind::kParse, path + ": expected an 8-bit PGM");
  ValidMask mask(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(mask.data()), static_cast<std::streamsize>(mask.size()));
  if (in.gcount() != static_cast<std::streamsize>(mask.size())) throw Error(ErrorKind::kParse, path + ": truncated PGM");
  for (auto& m : mask) m = m != 0 ? 1 : 0;
  if (geom) *geom = PanoramaGeometry{w, h};
  return mask;
}

}  // namespace rotpba
