#include "forestvo/trajectory.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>

namespace forestvo {

Trajectory accumulate(const std::vector<Pose>& rel_poses, const Pose& start) {
  if (rel_poses.empty()) {
    throw InvalidInput("accumulate: relative pose list is empty");
  }
  Trajectory traj;
  traj.poses.reserve(rel_poses.size() + 1);
  traj.poses.push_back(start);
  for (const Pose& rel : rel_poses) {
    traj.poses.push_back(traj.poses.back() * rel);
  }
  return traj;
}

std::vector<Pose> extract_relatives(const Trajectory& traj) {
  if (traj.size() < 2) {
    throw InvalidInput("extract_relatives: trajectory needs >= 2 poses");
  }
  std::vector<Pose> rels;
  rels.reserve(traj.size() - 1);
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    rels.push_back(relative_pose(traj.poses[k], traj.poses[k + 1]));
  }
  return rels;
}

double ate(const Trajectory& est, const Trajectory& gt, AlignmentMode mode) {
  if (est.size() != gt.size()) {
    throw InvalidInput("LengthMismatch: trajectories differ in length");
  }
  if (est.size() < 2) {
    throw InvalidInput("ate: trajectories need >= 2 poses");
  }
  const int n = static_cast<int>(est.size());
  Eigen::Matrix3Xd src(3, n), dst(3, n);
  for (int i = 0; i < n; ++i) {
    src.col(i) = est.poses[i].translation;
    dst.col(i) = gt.poses[i].translation;
  }

  Eigen::Matrix3Xd aligned = src;
  if (mode != AlignmentMode::kNone) {
    const Eigen::Vector3d mean = src.rowwise().mean();
    if ((src.colwise() - mean).squaredNorm() < 1e-24) {
      throw EstimationError(
          "DegenerateAlignment: estimated positions are rank-deficient");
    }
    const Eigen::Matrix4d t =
        Eigen::umeyama(src, dst, mode == AlignmentMode::kSimilarity);
    aligned = (t.topLeftCorner<3, 3>() * src).colwise() + t.topRightCorner<3, 1>();
  }

  const double sse = (aligned - dst).squaredNorm();
  return std::sqrt(sse / n);
}

RpeResult rpe_score(const Trajectory& est, const Trajectory& gt,
                    bool rmse_aggregation) {
  if (est.size() != gt.size()) {
    throw InvalidInput("LengthMismatch: trajectories differ in length");
  }
  if (est.size() < 2) {
    throw InvalidInput("rpe_score: trajectories need >= 2 poses");
  }
  double sum_t = 0.0, sum_r = 0.0;
  const std::size_t m = est.size() - 1;
  for (std::size_t k = 0; k < m; ++k) {
    const Pose rel_gt = relative_pose(gt.poses[k], gt.poses[k + 1]);
    const Pose rel_est = relative_pose(est.poses[k], est.poses[k + 1]);
    const Pose err = rel_gt.inverse() * rel_est;
    const double dt = err.translation.norm();
    const double dr =
        rotation_angle_deg(RotationMatrix::Identity(), err.rotation);
    if (rmse_aggregation) {
      sum_t += dt * dt;
      sum_r += dr * dr;
    } else {
      sum_t += dt;
      sum_r += dr;
    }
  }
  RpeResult out;
  if (rmse_aggregation) {
    out.mean_translation_m = std::sqrt(sum_t / m);
    out.mean_rotation_deg = std::sqrt(sum_r / m);
  } else {
    out.mean_translation_m = sum_t / m;
    out.mean_rotation_deg = sum_r / m;
  }
  return out;
}

KittiResult kitti_score(const Trajectory& est, const Trajectory& gt,
                        const std::vector<double>& lengths_m) {
  if (est.size() != gt.size()) {
    throw InvalidInput("LengthMismatch: trajectories differ in length");
  }
  if (est.size() < 2 || lengths_m.empty()) {
    throw InvalidInput("kitti_score: need >= 2 poses and >= 1 length");
  }
  const std::size_t n = gt.size();
  std::vector<double> cum(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    cum[i] = cum[i - 1] +
             (gt.poses[i].translation - gt.poses[i - 1].translation).norm();
  }

  double sum_t = 0.0, sum_r = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (double len : lengths_m) {
      // First frame at least len meters of gt path beyond the start.
      std::size_t j = i + 1;
      while (j < n && cum[j] - cum[i] < len) ++j;
      if (j >= n) continue;
      const double dist = cum[j] - cum[i];
      const Pose rel_gt = relative_pose(gt.poses[i], gt.poses[j]);
      const Pose rel_est = relative_pose(est.poses[i], est.poses[j]);
      const Pose err = rel_gt.inverse() * rel_est;
      sum_t += err.translation.norm() / dist * 100.0;
      sum_r += rotation_angle_deg(RotationMatrix::Identity(), err.rotation) /
               dist;
      ++count;
    }
  }
  if (count == 0) {
    throw EstimationError("TrajectoryTooShort: no subsequence fits any length");
  }
  KittiResult out;
  out.translation_pct = sum_t / count;
  out.rotation_deg_per_m = sum_r / count;
  out.num_subsequences = count;
  return out;
}

std::vector<double> kitti_standard_lengths() {
  return {100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0};
}

std::vector<double> kitti_desk_lengths() { return {5.0, 10.0, 15.0, 20.0}; }

}  // namespace forestvo
