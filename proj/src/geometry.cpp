#include "forestvo/geometry.hpp"

#include <cmath>

namespace forestvo {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

bool is_rotation(const RotationMatrix& r, double tol) {
  const double ortho = (r.transpose() * r - RotationMatrix::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

RotationMatrix quat_to_rotmat(const Quaternion& q) {
  const double norm = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z + q.w * q.w);
  if (norm <= 1e-12) {
    throw InvalidInput("ZeroQuaternion: quaternion norm below 1e-12");
  }
  const Eigen::Quaterniond eq(q.w / norm, q.x / norm, q.y / norm, q.z / norm);
  return eq.toRotationMatrix();
}

Quaternion rotmat_to_quat(const RotationMatrix& r) {
  if (!is_rotation(r)) {
    throw InvalidInput("NotARotation: matrix violates orthonormality");
  }
  Eigen::Quaterniond eq(r);
  eq.normalize();
  if (eq.w() < 0.0) {
    eq.coeffs() = -eq.coeffs();
  }
  return Quaternion{eq.x(), eq.y(), eq.z(), eq.w()};
}

Rotation6d rotmat_to_6d(const RotationMatrix& r) {
  Rotation6d r6;
  r6 << r.col(0), r.col(1);
  return r6;
}

RotationMatrix r6_to_rotmat(const Rotation6d& r6) {
  const Eigen::Vector3d a1 = r6.head<3>();
  const Eigen::Vector3d a2 = r6.tail<3>();
  if (a1.norm() <= 1e-9) {
    throw InvalidInput("DegenerateInput: first 6D column is near zero");
  }
  const Eigen::Vector3d b1 = a1.normalized();
  const Eigen::Vector3d residual = a2 - b1.dot(a2) * b1;
  if (residual.norm() <= 1e-9) {
    throw InvalidInput("DegenerateInput: 6D columns are near parallel");
  }
  const Eigen::Vector3d b2 = residual.normalized();
  const Eigen::Vector3d b3 = b1.cross(b2);
  RotationMatrix r;
  r.col(0) = b1;
  r.col(1) = b2;
  r.col(2) = b3;
  return r;
}

Pose relative_pose(const Pose& pose_a, const Pose& pose_b) {
  return pose_a.inverse() * pose_b;
}

double rotation_angle_deg(const RotationMatrix& r_a,
                          const RotationMatrix& r_b) {
  const RotationMatrix d = r_a.transpose() * r_b;
  const double c = std::clamp((d.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / kPi;
}

double direction_angle_folded_deg(const Eigen::Vector3d& a,
                                  const Eigen::Vector3d& b) {
  const double denom = a.norm() * b.norm();
  if (denom <= 1e-15) {
    return 0.0;
  }
  const double c = std::clamp(std::abs(a.dot(b)) / denom, 0.0, 1.0);
  return std::acos(c) * 180.0 / kPi;
}

}  // namespace forestvo
