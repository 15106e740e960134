#include "forestvo/epipolar.hpp"

#include <cmath>
#include <limits>

namespace forestvo {

namespace {

Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& t) {
  Eigen::Matrix3d m;
  m << 0.0, -t.z(), t.y(),
       t.z(), 0.0, -t.x(),
      -t.y(), t.x(), 0.0;
  return m;
}

}  // namespace

EssentialMatrix essential_from_pose(const Pose& t_rel) {
  if (t_rel.translation.norm() <= 1e-12) {
    throw EstimationError("DegenerateTranslation: |t| below 1e-12");
  }
  EssentialMatrix e = cross_matrix(t_rel.translation) * t_rel.rotation;
  return e / e.norm();
}

Eigen::Matrix3d fundamental_from_essential(const EssentialMatrix& e,
                                           const CameraIntrinsics& k0,
                                           const CameraIntrinsics& k1) {
  k0.validate();
  k1.validate();
  Eigen::Matrix3d k0m, k1m;
  k0m << k0.fx, 0.0, k0.cx, 0.0, k0.fy, k0.cy, 0.0, 0.0, 1.0;
  k1m << k1.fx, 0.0, k1.cx, 0.0, k1.fy, k1.cy, 0.0, 0.0, 1.0;
  Eigen::Matrix3d f =
      k1m.inverse().transpose() * e * k0m.inverse();
  return f / f.norm();
}

std::vector<double> sampson_error(const Eigen::Matrix3d& m,
                                  const std::vector<Eigen::Vector2d>& x0,
                                  const std::vector<Eigen::Vector2d>& x1) {
  if (x0.size() != x1.size()) {
    throw InvalidInput("sampson_error: point lists differ in length");
  }
  std::vector<double> out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const Eigen::Vector3d p0 = x0[i].homogeneous();
    const Eigen::Vector3d p1 = x1[i].homogeneous();
    const Eigen::Vector3d l0 = m * p0;
    const Eigen::Vector3d l1 = m.transpose() * p1;
    const double num = p1.dot(l0);
    if (num == 0.0) {
      out[i] = 0.0;
      continue;
    }
    const double denom =
        l0.x() * l0.x() + l0.y() * l0.y() + l1.x() * l1.x() + l1.y() * l1.y();
    out[i] = denom < 1e-15 ? std::numeric_limits<double>::infinity()
                           : num * num / denom;
  }
  return out;
}

HingeLossResult hinge_loss(const HingeLossInput& input) {
  if (input.errors.size() != input.confidences.size()) {
    throw InvalidInput("hinge_loss: errors/confidences image counts differ");
  }
  if (input.alpha <= 0.0) {
    throw InvalidInput("hinge_loss: alpha must be positive");
  }
  for (std::size_t i = 0; i < input.errors.size(); ++i) {
    if (input.errors[i].size() != input.confidences[i].size()) {
      throw InvalidInput("hinge_loss: per-image list lengths differ");
    }
    for (double c : input.confidences[i]) {
      if (!(c >= 0.0) || !std::isfinite(c)) {
        throw InvalidInput("hinge_loss: confidence must be finite and >= 0");
      }
    }
  }

  double batch_max_logc = 0.0;
  if (input.batch_normalization) {
    for (const auto& confs : input.confidences) {
      for (double c : confs) {
        batch_max_logc = std::max(batch_max_logc, std::log1p(c));
      }
    }
  }

  HingeLossResult result;
  result.total_loss = input.base_loss;
  for (std::size_t i = 0; i < input.errors.size(); ++i) {
    const auto& errs = input.errors[i];
    const auto& confs = input.confidences[i];
    if (errs.empty()) {
      result.per_image_hinge.push_back(0.0);
      result.zero_confidence_warning.push_back(false);
      continue;
    }
    double max_logc = batch_max_logc;
    if (!input.batch_normalization) {
      max_logc = 0.0;
      for (double c : confs) max_logc = std::max(max_logc, std::log1p(c));
    }
    if (max_logc == 0.0) {
      bool any_error = false;
      for (double e : errs) any_error = any_error || e > 0.0;
      result.per_image_hinge.push_back(0.0);
      result.zero_confidence_warning.push_back(any_error);
      continue;
    }
    double weighted = 0.0;
    for (std::size_t j = 0; j < errs.size(); ++j) {
      weighted += errs[j] * std::log1p(confs[j]) / max_logc;
    }
    weighted /= static_cast<double>(errs.size());
    const double hinge = std::min(weighted, input.alpha * input.base_loss);
    result.per_image_hinge.push_back(hinge);
    result.zero_confidence_warning.push_back(false);
    result.total_loss += hinge;
  }
  return result;
}

}  // namespace forestvo
