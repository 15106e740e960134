#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "forestvo/camera.hpp"
#include "forestvo/correspondence.hpp"
#include "forestvo/geometry.hpp"
#include "forestvo/trajectory.hpp"

namespace forestvo {

// tartanair: "tx ty tz qx qy qz qw" per line.
// tum:       "timestamp tx ty tz qx qy qz qw" per line.
// '#' comment lines ignored in both.
enum class TrajectoryFileFormat { kTartanAir, kTum };

Trajectory load_trajectory(const std::string& path, TrajectoryFileFormat format);
void save_trajectory(const Trajectory& traj, const std::string& path,
                     TrajectoryFileFormat format);

// Parses a single "tx ty tz qx qy qz qw" pose line.
Pose parse_pose_line(const std::string& line);
std::string format_pose_line(const Pose& pose);

// JSON-lines match file, one image pair per line:
//   {"kpts0": [[x,y],...], "kpts1": [[x,y],...], "conf": [c,...], "pair_id": "..."}
std::vector<MatchSet> load_matches(const std::string& path);
void save_matches(const std::vector<MatchSet>& matches,
                  const std::string& path);

// Assignment as JSON: {"matches0": [...], "matches1": [...]}, -1 marking
// unmatched keypoints.
void save_assignment(const Assignment& assignment, const std::string& path);
Assignment load_assignment(const std::string& path);

// Grayscale PFM ("Pf"); the scale line's sign encodes endianness and rows
// are stored bottom-up per the format, flipped to top-down on load.
DepthMap load_depth_pfm(const std::string& path);
void save_depth_pfm(const DepthMap& depth, const std::string& path);

// Intrinsics as JSON: {"fx","fy","cx","cy","width","height"}.
CameraIntrinsics load_intrinsics(const std::string& path);
void save_intrinsics(const CameraIntrinsics& k, const std::string& path);

// Desk-scale stand-in for dataset imagery: random 3D points in the first
// camera's frustum, a random relative motion, projections into both
// views with optional pixel noise and uniform outliers.
struct SyntheticSceneConfig {
  int num_points = 200;
  double depth_min_m = 4.0;
  double depth_max_m = 12.0;
  double rotation_magnitude_deg = 5.0;
  double translation_magnitude_m = 0.5;
  double pixel_noise_sigma = 0.0;
  double outlier_fraction = 0.0;
  CameraIntrinsics intrinsics{320.0, 320.0, 320.0, 240.0, 640, 480};
  std::uint64_t seed = 0;

  void validate() const {
    if (num_points <= 0 || depth_min_m <= 0.0 || depth_max_m < depth_min_m ||
        rotation_magnitude_deg < 0.0 || translation_magnitude_m < 0.0 ||
        pixel_noise_sigma < 0.0 || outlier_fraction < 0.0 ||
        outlier_fraction >= 1.0) {
      throw InvalidInput("SyntheticSceneConfig: invalid field");
    }
    intrinsics.validate();
  }
};

struct SyntheticPair {
  MatchSet matches;
  // Camera-frame transform of the pair: X1 = R * X0 + t. Feeds
  // essential_from_pose and LO-RANSAC ground truth directly.
  Pose gt_camera_transform;
  std::vector<bool> is_outlier;
};

// Throws EstimationError (FrustumEmpty) if visibility filtering leaves
// fewer than 8 points. Deterministic per config.seed.
SyntheticPair generate_synthetic_pair(const SyntheticSceneConfig& config);

struct SyntheticTrajectory {
  Trajectory trajectory;  // absolute world-frame poses
  std::vector<MatchSet> pair_matches;  // one per consecutive frame pair
  std::vector<Pose> gt_relative_poses;  // relative_pose(T_k, T_{k+1})
};

// Smooth random-walk trajectory with a geometrically consistent match
// set per consecutive pair.
SyntheticTrajectory generate_synthetic_trajectory(
    const SyntheticSceneConfig& config, int num_frames);

}  // namespace forestvo
