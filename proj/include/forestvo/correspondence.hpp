#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "forestvo/camera.hpp"
#include "forestvo/geometry.hpp"

namespace forestvo {

// Plane-projective warp, normalized so H(2,2) = 1.
using Homography = Eigen::Matrix3d;

struct HomographyParams {
  double difficulty = 0.5;             // in [0, 1], linearly scales all magnitudes
  double max_rotation_deg = 10.0;
  double max_translation_frac = 0.25;  // fraction of image extent
  double max_scale_delta = 0.25;
  double max_perspective = 0.001;
  std::uint64_t seed = 0;

  void validate() const {
    if (difficulty < 0.0 || difficulty > 1.0) {
      throw InvalidInput("HomographyParams: difficulty must be in [0,1]");
    }
    if (max_rotation_deg < 0.0 || max_translation_frac < 0.0 ||
        max_scale_delta < 0.0 || max_perspective < 0.0) {
      throw InvalidInput("HomographyParams: maxima must be non-negative");
    }
  }
};

// Ground-truth correspondence labeling. matches0[i] is the index of
// keypoint i's partner in image 1, or kUnmatched; matches1 is the
// reciprocal map. Bijective on the matched subset by construction.
struct Assignment {
  static constexpr int kUnmatched = -1;

  std::vector<int> matches0;
  std::vector<int> matches1;

  int num_matches() const {
    int n = 0;
    for (int j : matches0) n += (j != kUnmatched);
    return n;
  }
};

// Row-major depth image, meters along camera +z. Depths <= 0 or
// non-finite mark invalid pixels.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }

  // Nearest-pixel lookup; nullopt outside bounds or at invalid depths.
  std::optional<double> sample(const Eigen::Vector2d& px) const;
};

using Descriptor = Eigen::VectorXd;

struct RatioMatchParams {
  // Second-to-first nearest-neighbour distance ratio required to accept,
  // i.e. accept iff d_nn < d_nn2 / ratio_threshold. Must be > 1.
  double ratio_threshold = 1.25;
  bool mutual_check = false;
};

// Samples a homography as center -> rotate -> scale -> perspective ->
// translate -> uncenter, each component drawn uniformly from
// +-(difficulty * max). Deterministic per seed; difficulty 0 yields
// exact identity.
Homography sample_homography(const HomographyParams& params, int image_width,
                             int image_height);

struct WarpedPoint {
  Eigen::Vector2d point = Eigen::Vector2d::Zero();
  bool at_infinity = false;  // homogeneous depth magnitude < 1e-12
};

std::vector<WarpedPoint> warp_points(const Homography& h,
                                     const std::vector<Eigen::Vector2d>& pts);

// Warps kpts0 by h and assigns mutual nearest pairs within radius pixels.
Assignment gt_matches_homography(const std::vector<Eigen::Vector2d>& kpts0,
                                 const std::vector<Eigen::Vector2d>& kpts1,
                                 const Homography& h, double radius = 3.0);

struct ProjectedPoint {
  Eigen::Vector2d point = Eigen::Vector2d::Zero();
  bool valid = false;
};

// Back-projects kpts0 with nearest-pixel depth, applies t_rel
// (X1 = R * X0 + t, frame-0 camera points into frame-1), and projects
// with k1. Invalid where depth is missing, the point lands behind the
// camera, or outside image 1.
std::vector<ProjectedPoint> project_depth(
    const std::vector<Eigen::Vector2d>& kpts0, const DepthMap& depth0,
    const CameraIntrinsics& k0, const CameraIntrinsics& k1, const Pose& t_rel);

using Rgb = std::array<double, 3>;

// Depth-based ground truth: project, mutual-nearest within radius, then
// drop pairs whose RGB Euclidean distance exceeds color_threshold when
// per-keypoint colors are supplied.
Assignment gt_matches_depth(const std::vector<Eigen::Vector2d>& kpts0,
                            const std::vector<Eigen::Vector2d>& kpts1,
                            const DepthMap& depth0, const CameraIntrinsics& k0,
                            const CameraIntrinsics& k1, const Pose& t_rel,
                            double radius = 3.0,
                            const std::vector<Rgb>* colors0 = nullptr,
                            const std::vector<Rgb>* colors1 = nullptr,
                            double color_threshold = 10.0);

// Lowe ratio-test matcher over L2 descriptor distances. Confidence of an
// accepted match is 1 - d_nn / d_nn2.
MatchSet nn_ratio_match(const std::vector<Descriptor>& desc0,
                        const std::vector<Descriptor>& desc1,
                        const std::vector<Eigen::Vector2d>& kpts0,
                        const std::vector<Eigen::Vector2d>& kpts1,
                        const RatioMatchParams& params);

}  // namespace forestvo
