#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "forestvo/camera.hpp"
#include "forestvo/epipolar.hpp"
#include "forestvo/geometry.hpp"

namespace forestvo {

struct RansacParams {
  int max_iterations = 2000;
  double inlier_threshold = 1e-3;  // normalized-coordinate Sampson distance
  double confidence = 0.9999;
  int lo_iterations = 3;  // local-optimization refits on a new best model
  std::uint64_t seed = 0;

  void validate() const {
    if (max_iterations <= 0 || inlier_threshold <= 0.0 || lo_iterations < 0 ||
        confidence <= 0.0 || confidence >= 1.0) {
      throw InvalidInput("RansacParams: invalid field");
    }
  }
};

// Relative pose up to translation scale, with the supporting inlier set.
struct PoseEstimate {
  RotationMatrix rotation = RotationMatrix::Identity();
  Eigen::Vector3d translation_direction = Eigen::Vector3d::UnitX();
  std::vector<bool> inlier_mask;
  int num_inliers = 0;
};

// Hartley-normalized eight-point solve on normalized image coordinates,
// projected to the essential manifold (singular values (s, s, 0) with s
// the mean of the top two) and scaled to unit Frobenius norm. Throws
// EstimationError (DegenerateConfiguration) when the design matrix
// conditioning exceeds 1e12.
EssentialMatrix estimate_essential_8pt(const std::vector<Eigen::Vector2d>& x0,
                                       const std::vector<Eigen::Vector2d>& x1);

// Picks among the four (R, +-t) decompositions by cheirality voting:
// the candidate placing the most triangulated points in front of both
// cameras wins; a tie throws EstimationError (CheiralityTie).
std::pair<RotationMatrix, Eigen::Vector3d> decompose_essential(
    const EssentialMatrix& e, const std::vector<Eigen::Vector2d>& x0,
    const std::vector<Eigen::Vector2d>& x1);

// LO-RANSAC over eight-point essential hypotheses scored by Sampson
// inliers in normalized coordinates; each new best model is refined by
// lo_iterations full-inlier-set refits. Deterministic per params.seed.
PoseEstimate lo_ransac_pose(const MatchSet& matches,
                            const CameraIntrinsics& k0,
                            const CameraIntrinsics& k1,
                            const RansacParams& params);

// max(rotation angle, translation-direction angle folded to [0,90]), in
// degrees. Rotation-only when the ground-truth translation is near zero.
double pose_error(const PoseEstimate& est, const Pose& gt);

// Area under the cumulative recall curve of pose errors up to each
// threshold, trapezoidal with an appended point at the threshold.
std::vector<double> pose_auc(const std::vector<double>& errors_deg,
                             const std::vector<double>& thresholds_deg);

// Fraction of matches with epipolar error <= each threshold.
std::vector<double> match_precision(const std::vector<double>& errors,
                                    const std::vector<double>& thresholds);

double inlier_percentage(const PoseEstimate& est);

}  // namespace forestvo
