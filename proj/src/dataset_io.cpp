#include "forestvo/dataset_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace forestvo {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> parse_fields(const std::string& line, int line_no) {
  std::istringstream iss(line);
  std::vector<double> fields;
  std::string tok;
  while (iss >> tok) {
    try {
      std::size_t consumed = 0;
      const double v = std::stod(tok, &consumed);
      if (consumed != tok.size()) {
        throw ParseError("trailing characters in field '" + tok + "'", line_no);
      }
      if (!std::isfinite(v)) {
        throw ParseError("non-finite field '" + tok + "'", line_no);
      }
      fields.push_back(v);
    } catch (const std::invalid_argument&) {
      throw ParseError("unparseable field '" + tok + "'", line_no);
    } catch (const std::out_of_range&) {
      throw ParseError("out-of-range field '" + tok + "'", line_no);
    }
  }
  return fields;
}

Pose pose_from_fields(const double* f, int line_no) {
  const Quaternion q{f[3], f[4], f[5], f[6]};
  const double norm = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z + q.w * q.w);
  if (std::abs(norm - 1.0) > 1e-3) {
    throw ParseError("BadQuaternion: norm deviates from 1 by more than 1e-3",
                     line_no);
  }
  Pose pose;
  pose.translation = Eigen::Vector3d(f[0], f[1], f[2]);
  pose.rotation = quat_to_rotmat(q);
  return pose;
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

Eigen::Vector3d random_unit_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Vector3d v(gauss(rng), gauss(rng), gauss(rng));
  while (v.norm() < 1e-9) v = {gauss(rng), gauss(rng), gauss(rng)};
  return v.normalized();
}

Pose random_motion(std::mt19937_64& rng, double rotation_magnitude_deg,
                   double translation_magnitude_m) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Pose motion;
  const Eigen::Vector3d axis = random_unit_vector(rng);
  const double angle = rotation_magnitude_deg * uni(rng) * kPi / 180.0;
  motion.rotation = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  const Eigen::Vector3d dir = random_unit_vector(rng);
  // Keep the baseline in the upper half of the range so the translation
  // direction stays observable under pixel noise.
  motion.translation = dir * translation_magnitude_m * (0.5 + 0.5 * uni(rng));
  return motion;
}

// Shared projection machinery for synthetic pairs: points sampled in the
// frame-0 frustum, transformed by cam_transform (X1 = R X0 + t).
SyntheticPair synthesize_pair(const SyntheticSceneConfig& config,
                              const Pose& cam_transform,
                              std::mt19937_64& rng) {
  const CameraIntrinsics& k = config.intrinsics;
  std::uniform_real_distribution<double> ux(0.0, k.width);
  std::uniform_real_distribution<double> uy(0.0, k.height);
  std::uniform_real_distribution<double> ud(config.depth_min_m,
                                            config.depth_max_m);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  SyntheticPair out;
  out.gt_camera_transform = cam_transform;
  for (int i = 0; i < config.num_points; ++i) {
    const Eigen::Vector2d px0(ux(rng), uy(rng));
    const double depth = ud(rng);
    const Eigen::Vector2d n0 = k.normalize(px0);
    const Eigen::Vector3d x0(n0.x() * depth, n0.y() * depth, depth);
    const Eigen::Vector3d x1 = cam_transform.apply(x0);
    if (x1.z() <= 1e-9) continue;
    const Eigen::Vector2d px1 = k.project(x1);
    if (!k.in_bounds(px1)) continue;
    out.matches.kpts0.push_back(px0);
    out.matches.kpts1.push_back(px1);
  }
  const int kept = static_cast<int>(out.matches.size());
  if (kept < 8) {
    throw EstimationError("FrustumEmpty: fewer than 8 visible points");
  }

  if (config.pixel_noise_sigma > 0.0) {
    for (int i = 0; i < kept; ++i) {
      out.matches.kpts0[i] += config.pixel_noise_sigma *
                              Eigen::Vector2d(noise(rng), noise(rng));
      out.matches.kpts1[i] += config.pixel_noise_sigma *
                              Eigen::Vector2d(noise(rng), noise(rng));
    }
  }

  out.is_outlier.assign(kept, false);
  const int num_outliers =
      static_cast<int>(std::floor(config.outlier_fraction * kept));
  if (num_outliers > 0) {
    std::vector<int> idx(kept);
    for (int i = 0; i < kept; ++i) idx[i] = i;
    for (int i = 0; i < num_outliers; ++i) {
      std::uniform_int_distribution<int> pick(i, kept - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    for (int i = 0; i < num_outliers; ++i) {
      out.is_outlier[idx[i]] = true;
      out.matches.kpts1[idx[i]] = Eigen::Vector2d(ux(rng), uy(rng));
    }
  }

  out.matches.confidence.resize(kept);
  for (int i = 0; i < kept; ++i) {
    out.matches.confidence[i] = out.is_outlier[i]
                                    ? 0.1 + 0.8 * uni(rng)
                                    : 0.7 + 0.3 * uni(rng);
  }
  return out;
}

}  // namespace

Pose parse_pose_line(const std::string& line) {
  const auto fields = parse_fields(line, 1);
  if (fields.size() != 7) {
    throw ParseError("pose line needs 7 fields", 1);
  }
  return pose_from_fields(fields.data(), 1);
}

std::string format_pose_line(const Pose& pose) {
  const Quaternion q = rotmat_to_quat(pose.rotation);
  std::ostringstream oss;
  oss << fmt17(pose.translation.x()) << ' ' << fmt17(pose.translation.y())
      << ' ' << fmt17(pose.translation.z()) << ' ' << fmt17(q.x) << ' '
      << fmt17(q.y) << ' ' << fmt17(q.z) << ' ' << fmt17(q.w);
  return oss.str();
}

Trajectory load_trajectory(const std::string& path,
                           TrajectoryFileFormat format) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("load_trajectory: cannot open " + path);
  }
  const std::size_t expected = format == TrajectoryFileFormat::kTum ? 8 : 7;
  Trajectory traj;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = parse_fields(line, line_no);
    if (fields.empty()) continue;
    if (fields.size() != expected) {
      throw ParseError("expected " + std::to_string(expected) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    const double* pose_fields = fields.data();
    if (format == TrajectoryFileFormat::kTum) {
      traj.timestamps.push_back(fields[0]);
      pose_fields = fields.data() + 1;
    }
    traj.poses.push_back(pose_from_fields(pose_fields, line_no));
  }
  traj.validate();
  return traj;
}

void save_trajectory(const Trajectory& traj, const std::string& path,
                     TrajectoryFileFormat format) {
  traj.validate();
  if (format == TrajectoryFileFormat::kTum &&
      traj.timestamps.size() != traj.poses.size()) {
    throw InvalidInput("save_trajectory: TUM output needs timestamps");
  }
  std::ofstream out(path);
  if (!out) {
    throw IoError("save_trajectory: cannot open " + path);
  }
  for (std::size_t i = 0; i < traj.poses.size(); ++i) {
    if (format == TrajectoryFileFormat::kTum) {
      out << fmt17(traj.timestamps[i]) << ' ';
    }
    out << format_pose_line(traj.poses[i]) << '\n';
  }
  if (!out) {
    throw IoError("save_trajectory: write failed for " + path);
  }
}

std::vector<MatchSet> load_matches(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("load_matches: cannot open " + path);
  }
  std::vector<MatchSet> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad JSON: ") + e.what(), line_no);
    }
    MatchSet m;
    if (!j.contains("pair_id") || !j["pair_id"].is_string()) {
      throw SchemaError("load_matches: line " + std::to_string(line_no) +
                        ": missing pair_id");
    }
    m.pair_id = j["pair_id"].get<std::string>();
    try {
      for (const auto& p : j.at("kpts0")) {
        m.kpts0.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
      }
      for (const auto& p : j.at("kpts1")) {
        m.kpts1.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
      }
      for (const auto& c : j.at("conf")) {
        m.confidence.push_back(c.get<double>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("load_matches: pair " + m.pair_id + ": " + e.what());
    }
    m.validate();
    out.push_back(std::move(m));
  }
  return out;
}

void save_matches(const std::vector<MatchSet>& matches,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("save_matches: cannot open " + path);
  }
  for (const MatchSet& m : matches) {
    nlohmann::json j;
    j["pair_id"] = m.pair_id;
    j["kpts0"] = nlohmann::json::array();
    j["kpts1"] = nlohmann::json::array();
    for (const auto& p : m.kpts0) j["kpts0"].push_back({p.x(), p.y()});
    for (const auto& p : m.kpts1) j["kpts1"].push_back({p.x(), p.y()});
    j["conf"] = m.confidence;
    out << j.dump() << '\n';
  }
  if (!out) {
    throw IoError("save_matches: write failed for " + path);
  }
}

void save_assignment(const Assignment& assignment, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("save_assignment: cannot open " + path);
  }
  nlohmann::json j;
  j["matches0"] = assignment.matches0;
  j["matches1"] = assignment.matches1;
  out << j.dump() << '\n';
}

Assignment load_assignment(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("load_assignment: cannot open " + path);
  }
  nlohmann::json j;
  try {
    in >> j;
    Assignment a;
    a.matches0 = j.at("matches0").get<std::vector<int>>();
    a.matches1 = j.at("matches1").get<std::vector<int>>();
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("load_assignment: ") + e.what());
  }
}

DepthMap load_depth_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("load_depth_pfm: cannot open " + path);
  }
  std::string magic;
  in >> magic;
  if (magic == "PF") {
    throw IoError("UnsupportedFormat: color PFM not supported");
  }
  if (magic != "Pf") {
    throw ParseError("not a PFM file (magic '" + magic + "')", 1);
  }
  int width = 0, height = 0;
  double scale = 0.0;
  if (!(in >> width >> height >> scale) || width <= 0 || height <= 0 ||
      scale == 0.0) {
    throw ParseError("bad PFM header", 2);
  }
  in.get();  // single whitespace separating header from data

  const bool little_endian = scale < 0.0;
  std::vector<float> raw(static_cast<std::size_t>(width) * height);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!in) {
    throw ParseError("truncated PFM data", 3);
  }
  if (!little_endian) {
    for (float& f : raw) {
      char* b = reinterpret_cast<char*>(&f);
      std::swap(b[0], b[3]);
      std::swap(b[1], b[2]);
    }
  }

  DepthMap depth;
  depth.width = width;
  depth.height = height;
  depth.values.resize(raw.size());
  // PFM rows are bottom-up; flip to top-down.
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      depth.values[static_cast<std::size_t>(y) * width + x] =
          raw[static_cast<std::size_t>(height - 1 - y) * width + x];
    }
  }
  return depth;
}

void save_depth_pfm(const DepthMap& depth, const std::string& path) {
  if (depth.width <= 0 || depth.height <= 0 ||
      depth.values.size() !=
          static_cast<std::size_t>(depth.width) * depth.height) {
    throw InvalidInput("save_depth_pfm: inconsistent DepthMap");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("save_depth_pfm: cannot open " + path);
  }
  out << "Pf\n" << depth.width << " " << depth.height << "\n-1.0\n";
  for (int y = depth.height - 1; y >= 0; --y) {
    for (int x = 0; x < depth.width; ++x) {
      const float f = static_cast<float>(depth.at(x, y));
      out.write(reinterpret_cast<const char*>(&f), sizeof(float));
    }
  }
}

CameraIntrinsics load_intrinsics(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("load_intrinsics: cannot open " + path);
  }
  try {
    nlohmann::json j;
    in >> j;
    CameraIntrinsics k;
    k.fx = j.at("fx");
    k.fy = j.at("fy");
    k.cx = j.at("cx");
    k.cy = j.at("cy");
    k.width = j.at("width");
    k.height = j.at("height");
    k.validate();
    return k;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("load_intrinsics: ") + e.what());
  }
}

void save_intrinsics(const CameraIntrinsics& k, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("save_intrinsics: cannot open " + path);
  }
  nlohmann::json j = {{"fx", k.fx},       {"fy", k.fy},
                      {"cx", k.cx},       {"cy", k.cy},
                      {"width", k.width}, {"height", k.height}};
  out << j.dump(2) << '\n';
}

SyntheticPair generate_synthetic_pair(const SyntheticSceneConfig& config) {
  config.validate();
  auto rng = make_rng(config.seed);
  const Pose motion = random_motion(rng, config.rotation_magnitude_deg,
                                    config.translation_magnitude_m);
  return synthesize_pair(config, motion, rng);
}

SyntheticTrajectory generate_synthetic_trajectory(
    const SyntheticSceneConfig& config, int num_frames) {
  config.validate();
  if (num_frames < 2) {
    throw InvalidInput("generate_synthetic_trajectory: needs >= 2 frames");
  }
  SyntheticTrajectory out;
  out.trajectory.poses.push_back(Pose::Identity());
  for (int k = 0; k + 1 < num_frames; ++k) {
    auto rng = make_rng(config.seed + 0x9e37u * (k + 1));
    const Pose rel = random_motion(rng, config.rotation_magnitude_deg,
                                   config.translation_magnitude_m);
    // Camera transform mapping frame-k points into frame-(k+1) points.
    SyntheticPair pair = synthesize_pair(config, rel.inverse(), rng);
    pair.matches.pair_id = std::to_string(k) + "-" + std::to_string(k + 1);
    out.pair_matches.push_back(std::move(pair.matches));
    out.gt_relative_poses.push_back(rel);
    out.trajectory.poses.push_back(out.trajectory.poses.back() * rel);
  }
  return out;
}

}  // namespace forestvo
