#pragma once

#include <map>
#include <string>

#include "rotpba/camera.hpp"
#include "rotpba/pano_map.hpp"
#include "rotpba/scene.hpp"
#include "rotpba/trajectory.hpp"

namespace rotpba {

/// Sibling temporary path used for atomic writes.
std::string temp_path_for(const std::string& path);

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

/// Flat `key = value` text with `#` comments. Keys are unique; the last occurrence wins.
class KeyValues {
 public:
  static KeyValues parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValues load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void set(const std::string& key, double value);
  const std::map<std::string, std::string>& entries() const { return values_; }

  std::string format() const;

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

/// `t qx qy qz qw` per line (Hamilton quaternion). Quaternions whose norm deviates from 1 by
/// more than 1e-6 are rejected with Error(kParse).
StampedTrajectory load_trajectory(const std::string& path);
void save_trajectory(const StampedTrajectory& traj, const std::string& path);

/// Calibration keys: width, height, fx, fy, cx, cy.
CameraModel load_calibration(const std::string& path);
void save_calibration(const CameraModel& cam, const std::string& path);

/// Raw float32 little-endian, row-major, after a 16-byte header of two little-endian uint64
/// (width, height).
DenseMap load_map_raw(const std::string& path);
void save_map_raw(const DenseMap& map, const std::string& path);

/// 16-bit binary PGM with the affine tonemap min -> 0, max -> 65535. If `mask` is given, min and
/// max are taken over valid pixels and invalid pixels are written as 0. The tonemap is recorded
/// in `<path>.tonemap` as `min = ..`, `max = ..`.
void save_map_pgm(const DenseMap& map, const std::string& path, const ValidMask* mask = nullptr);

/// 8-bit PGM with 0 / 255.
void save_mask_pgm(const ValidMask& mask, const PanoramaGeometry& geom, const std::string& path);
ValidMask load_mask_pgm(const std::string& path, PanoramaGeometry* geom = nullptr);

}  // namespace rotpba
