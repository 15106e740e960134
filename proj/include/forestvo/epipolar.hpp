#pragma once

#include <Eigen/Core>
#include <vector>

#include "forestvo/camera.hpp"
#include "forestvo/geometry.hpp"

namespace forestvo {

using EssentialMatrix = Eigen::Matrix3d;

// E = [t]x R for X1 = R * X0 + t, returned with unit Frobenius norm.
// Throws EstimationError (DegenerateTranslation) for |t| <= 1e-12: a pure
// rotation has no essential matrix.
EssentialMatrix essential_from_pose(const Pose& t_rel);

// F = K1^-T E K0^-1, unit Frobenius norm; operates on pixel coordinates.
Eigen::Matrix3d fundamental_from_essential(const EssentialMatrix& e,
                                           const CameraIntrinsics& k0,
                                           const CameraIntrinsics& k1);

// Per-match Sampson distance for m in {E, F}:
//   d = (x1' m x0)^2 / ((m x0)_1^2 + (m x0)_2^2 + (m' x1)_1^2 + (m' x1)_2^2)
// Points must be in the frame matching m (normalized for E, pixels for F).
// A match with zero numerator is 0; a nonzero numerator over a degenerate
// denominator (< 1e-15) yields +inf.
std::vector<double> sampson_error(const Eigen::Matrix3d& m,
                                  const std::vector<Eigen::Vector2d>& x0,
                                  const std::vector<Eigen::Vector2d>& x1);

// Per-image epipolar errors and match confidences feeding the
// confidence-weighted hinge term added to a base matcher loss.
struct HingeLossInput {
  std::vector<std::vector<double>> errors;       // E_ij per image
  std::vector<std::vector<double>> confidences;  // C_ij, finite and >= 0
  double base_loss = 0.0;
  double alpha = 0.2;
  // When true, the log(1+C) normalization max is taken over the whole
  // batch instead of per image.
  bool batch_normalization = false;
};

struct HingeLossResult {
  double total_loss = 0.0;
  std::vector<double> per_image_hinge;
  // Images whose confidences were all zero while some error was nonzero;
  // they contribute 0 with this flag raised.
  std::vector<bool> zero_confidence_warning;
};

// Per image i: w_ij = log(1+C_ij) / max_j log(1+C_ij);
// hinge_i = min(mean_j(E_ij * w_ij), alpha * base_loss);
// total = base_loss + sum_i hinge_i.
HingeLossResult hinge_loss(const HingeLossInput& input);

}  // namespace forestvo
