#pragma once

#include <Eigen/Core>
#include <vector>

#include "forestvo/errors.hpp"

namespace forestvo {

// Pinhole intrinsics in pixels.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const {
    if (fx <= 0.0 || fy <= 0.0 || width <= 0 || height <= 0) {
      throw InvalidInput("CameraIntrinsics: focal lengths and size must be positive");
    }
  }

  // Pixel -> normalized image coordinates.
  Eigen::Vector2d normalize(const Eigen::Vector2d& px) const {
    return {(px.x() - cx) / fx, (px.y() - cy) / fy};
  }

  // Projects a camera-frame point (z > 0) to pixels.
  Eigen::Vector2d project(const Eigen::Vector3d& p) const {
    return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
  }

  bool in_bounds(const Eigen::Vector2d& px) const {
    return px.x() >= 0.0 && px.x() < width && px.y() >= 0.0 && px.y() < height;
  }
};

// Paired 2D keypoint coordinates with per-match confidence. The
// interchange object between matchers and everything downstream.
struct MatchSet {
  std::vector<Eigen::Vector2d> kpts0;
  std::vector<Eigen::Vector2d> kpts1;
  std::vector<double> confidence;
  std::string pair_id;

  std::size_t size() const { return kpts0.size(); }

  void validate() const {
    if (kpts0.size() != kpts1.size() || kpts0.size() != confidence.size()) {
      throw SchemaError("MatchSet: kpts0/kpts1/conf lengths differ (pair " +
                        pair_id + ")");
    }
    for (std::size_t i = 0; i < kpts0.size(); ++i) {
      if (!kpts0[i].allFinite() || !kpts1[i].allFinite() ||
          !std::isfinite(confidence[i])) {
        throw SchemaError("MatchSet: non-finite entry (pair " + pair_id + ")");
      }
      if (confidence[i] < 0.0 || confidence[i] > 1.0) {
        throw SchemaError("MatchSet: confidence outside [0,1] (pair " +
                          pair_id + ")");
      }
    }
  }
};

}  // namespace forestvo
