#include "forestvo/robust_pose.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace forestvo {

namespace {

// Hartley conditioning transform: centroid to origin, mean distance sqrt(2).
Eigen::Matrix3d conditioning_transform(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  const double scale = mean_dist > 1e-15 ? std::sqrt(2.0) / mean_dist : 1.0;
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(0, 0) = scale;
  t(1, 1) = scale;
  t(0, 2) = -scale * centroid.x();
  t(1, 2) = -scale * centroid.y();
  return t;
}

// Linear (DLT) triangulation with P0 = [I|0], P1 = [R|t]; returns the
// point in camera-0 coordinates.
Eigen::Vector3d triangulate(const Eigen::Vector2d& x0,
                            const Eigen::Vector2d& x1,
                            const RotationMatrix& r,
                            const Eigen::Vector3d& t) {
  Eigen::Matrix<double, 3, 4> p0 = Eigen::Matrix<double, 3, 4>::Zero();
  p0.leftCols<3>().setIdentity();
  Eigen::Matrix<double, 3, 4> p1;
  p1.leftCols<3>() = r;
  p1.col(3) = t;
  Eigen::Matrix4d a;
  a.row(0) = x0.x() * p0.row(2) - p0.row(0);
  a.row(1) = x0.y() * p0.row(2) - p0.row(1);
  a.row(2) = x1.x() * p1.row(2) - p1.row(0);
  a.row(3) = x1.y() * p1.row(2) - p1.row(1);
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(a, Eigen::ComputeFullV);
  Eigen::Vector4d h = svd.matrixV().col(3);
  if (std::abs(h(3)) < 1e-15) {
    return Eigen::Vector3d(std::numeric_limits<double>::infinity(), 0, 0);
  }
  return h.head<3>() / h(3);
}

std::vector<Eigen::Vector2d> subset(const std::vector<Eigen::Vector2d>& pts,
                                    const std::vector<int>& idx) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(pts[i]);
  return out;
}

}  // namespace

EssentialMatrix estimate_essential_8pt(const std::vector<Eigen::Vector2d>& x0,
                                       const std::vector<Eigen::Vector2d>& x1) {
  if (x0.size() != x1.size()) {
    throw InvalidInput("estimate_essential_8pt: list lengths differ");
  }
  const int n = static_cast<int>(x0.size());
  if (n < 8) {
    throw EstimationError("estimate_essential_8pt: needs >= 8 points");
  }
  const Eigen::Matrix3d t0 = conditioning_transform(x0);
  const Eigen::Matrix3d t1 = conditioning_transform(x1);

  Eigen::MatrixXd a(n, 9);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d p0 = t0 * x0[i].homogeneous();
    const Eigen::Vector3d p1 = t1 * x1[i].homogeneous();
    a.row(i) << p1.x() * p0.x(), p1.x() * p0.y(), p1.x() * p0.z(),
        p1.y() * p0.x(), p1.y() * p0.y(), p1.y() * p0.z(),
        p1.z() * p0.x(), p1.z() * p0.y(), p1.z() * p0.z();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // The constraint matrix must have rank 8 for a unique null space.
  if (sv(7) <= 0.0 || sv(0) / sv(7) > 1e12) {
    throw EstimationError("DegenerateConfiguration: design matrix rank-deficient");
  }
  const Eigen::VectorXd e_vec = svd.matrixV().col(8);
  Eigen::Matrix3d e_hat;
  e_hat << e_vec(0), e_vec(1), e_vec(2), e_vec(3), e_vec(4), e_vec(5),
      e_vec(6), e_vec(7), e_vec(8);
  Eigen::Matrix3d e = t1.transpose() * e_hat * t0;

  // Project onto the essential manifold: singular values (s, s, 0).
  Eigen::JacobiSVD<Eigen::Matrix3d> esvd(
      e, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double s = (esvd.singularValues()(0) + esvd.singularValues()(1)) / 2.0;
  e = esvd.matrixU() * Eigen::Vector3d(s, s, 0.0).asDiagonal() *
      esvd.matrixV().transpose();
  return e / e.norm();
}

std::pair<RotationMatrix, Eigen::Vector3d> decompose_essential(
    const EssentialMatrix& e, const std::vector<Eigen::Vector2d>& x0,
    const std::vector<Eigen::Vector2d>& x1) {
  if (x0.empty() || x0.size() != x1.size()) {
    throw InvalidInput("decompose_essential: needs matched points");
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      e, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  if (u.determinant() < 0.0) u = -u;
  if (v.determinant() < 0.0) v = -v;
  Eigen::Matrix3d w;
  w << 0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  const RotationMatrix r1 = u * w * v.transpose();
  const RotationMatrix r2 = u * w.transpose() * v.transpose();
  const Eigen::Vector3d t = u.col(2);

  const std::array<std::pair<RotationMatrix, Eigen::Vector3d>, 4> candidates = {
      {{r1, t}, {r1, -t}, {r2, t}, {r2, -t}}};

  std::array<int, 4> votes{0, 0, 0, 0};
  for (int c = 0; c < 4; ++c) {
    const auto& [r, tc] = candidates[c];
    for (std::size_t i = 0; i < x0.size(); ++i) {
      const Eigen::Vector3d p = triangulate(x0[i], x1[i], r, tc);
      if (!p.allFinite()) continue;
      const double z0 = p.z();
      const double z1 = (r * p + tc).z();
      if (z0 > 0.0 && z1 > 0.0) ++votes[c];
    }
  }
  int best = 0;
  for (int c = 1; c < 4; ++c) {
    if (votes[c] > votes[best]) best = c;
  }
  for (int c = 0; c < 4; ++c) {
    if (c != best && votes[c] == votes[best]) {
      throw EstimationError("CheiralityTie: no candidate has a strict majority");
    }
  }
  return candidates[best];
}

PoseEstimate lo_ransac_pose(const MatchSet& matches, const CameraIntrinsics& k0,
                            const CameraIntrinsics& k1,
                            const RansacParams& params) {
  params.validate();
  matches.validate();
  const int n = static_cast<int>(matches.size());
  if (n < 8) {
    throw EstimationError("InsufficientMatches: LO-RANSAC needs >= 8 matches");
  }
  std::vector<Eigen::Vector2d> x0(n), x1(n);
  for (int i = 0; i < n; ++i) {
    x0[i] = k0.normalize(matches.kpts0[i]);
    x1[i] = k1.normalize(matches.kpts1[i]);
  }

  auto score = [&](const EssentialMatrix& e, std::vector<bool>* mask) {
    const auto errs = sampson_error(e, x0, x1);
    int count = 0;
    if (mask != nullptr) mask->assign(n, false);
    for (int i = 0; i < n; ++i) {
      if (errs[i] <= params.inlier_threshold) {
        ++count;
        if (mask != nullptr) (*mask)[i] = true;
      }
    }
    return count;
  };

  auto mask_indices = [](const std::vector<bool>& mask) {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(mask.size()); ++i) {
      if (mask[i]) idx.push_back(i);
    }
    return idx;
  };

  std::mt19937_64 rng(params.seed);
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;

  EssentialMatrix best_e = EssentialMatrix::Zero();
  std::vector<bool> best_mask;
  int best_count = 0;
  bool found = false;
  int iteration_cap = params.max_iterations;

  for (int it = 0; it < iteration_cap; ++it) {
    // Partial Fisher-Yates draw of a minimal sample.
    std::vector<int> sample = all;
    for (int k = 0; k < 8; ++k) {
      std::uniform_int_distribution<int> dist(k, n - 1);
      std::swap(sample[k], sample[dist(rng)]);
    }
    sample.resize(8);

    EssentialMatrix e;
    try {
      e = estimate_essential_8pt(subset(x0, sample), subset(x1, sample));
    } catch (const EstimationError&) {
      continue;
    }
    std::vector<bool> mask;
    int count = score(e, &mask);
    if (count <= best_count && found) continue;

    // Local optimization: iterated full-inlier-set refits, keeping only
    // non-degrading steps.
    for (int lo = 0; lo < params.lo_iterations; ++lo) {
      const auto idx = mask_indices(mask);
      if (static_cast<int>(idx.size()) < 8) break;
      EssentialMatrix refined;
      try {
        refined = estimate_essential_8pt(subset(x0, idx), subset(x1, idx));
      } catch (const EstimationError&) {
        break;
      }
      std::vector<bool> refined_mask;
      const int refined_count = score(refined, &refined_mask);
      if (refined_count < count) break;
      e = refined;
      mask = std::move(refined_mask);
      count = refined_count;
    }

    if (!found || count > best_count) {
      found = true;
      best_e = e;
      best_mask = mask;
      best_count = count;
      // Adaptive stopping from the current inlier ratio.
      const double w = static_cast<double>(best_count) / n;
      const double p_good = std::pow(w, 8);
      if (p_good >= 1.0 - 1e-12) {
        iteration_cap = it + 1;
      } else if (p_good > 0.0) {
        // log1p keeps the denominator nonzero when p_good underflows 1-p.
        const double needed =
            std::log(1.0 - params.confidence) / std::log1p(-p_good);
        if (needed >= 1.0 && needed < params.max_iterations) {
          iteration_cap = static_cast<int>(std::ceil(needed));
        }
      }
    }
  }

  if (!found || best_count < 1) {
    throw EstimationError("NoModelFound: every hypothesis was degenerate");
  }

  const auto idx = mask_indices(best_mask);
  const auto [r, t] = decompose_essential(best_e, subset(x0, idx),
                                          subset(x1, idx));
  PoseEstimate est;
  est.rotation = r;
  est.translation_direction = t.normalized();
  est.inlier_mask = best_mask;
  est.num_inliers = best_count;
  return est;
}

double pose_error(const PoseEstimate& est, const Pose& gt) {
  const double rot_err = rotation_angle_deg(est.rotation, gt.rotation);
  if (gt.translation.norm() <= 1e-12) {
    return rot_err;
  }
  const double trans_err =
      direction_angle_folded_deg(est.translation_direction, gt.translation);
  return std::max(rot_err, trans_err);
}

std::vector<double> pose_auc(const std::vector<double>& errors_deg,
                             const std::vector<double>& thresholds_deg) {
  if (errors_deg.empty()) {
    throw InvalidInput("EmptyErrors: pose_auc needs at least one error");
  }
  for (double e : errors_deg) {
    if (e < 0.0 || std::isnan(e)) {
      throw InvalidInput("pose_auc: errors must be non-negative");
    }
  }
  std::vector<double> sorted = errors_deg;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());

  std::vector<double> aucs;
  for (double tau : thresholds_deg) {
    if (tau <= 0.0) {
      throw InvalidInput("pose_auc: thresholds must be positive");
    }
    // Piecewise-linear cumulative recall through (0,0), (e_i, i/n), (tau, r).
    double area = 0.0;
    double prev_e = 0.0;
    double prev_r = 0.0;
    std::size_t i = 0;
    for (; i < sorted.size() && sorted[i] <= tau; ++i) {
      const double r = static_cast<double>(i + 1) / n;
      area += 0.5 * (sorted[i] - prev_e) * (prev_r + r);
      prev_e = sorted[i];
      prev_r = r;
    }
    area += 0.5 * (tau - prev_e) * (prev_r + prev_r);
    aucs.push_back(area / tau);
  }
  return aucs;
}

std::vector<double> match_precision(const std::vector<double>& errors,
                                    const std::vector<double>& thresholds) {
  if (errors.empty()) {
    throw InvalidInput("EmptyErrors: match_precision needs at least one error");
  }
  std::vector<double> out;
  for (double tau : thresholds) {
    int count = 0;
    for (double e : errors) count += (e <= tau);
    out.push_back(static_cast<double>(count) / errors.size());
  }
  return out;
}

double inlier_percentage(const PoseEstimate& est) {
  if (est.inlier_mask.empty()) {
    throw InvalidInput("EmptyMatchSet: inlier_percentage needs matches");
  }
  return 100.0 * est.num_inliers / static_cast<double>(est.inlier_mask.size());
}

}  // namespace forestvo
