#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "forestvo/errors.hpp"

namespace forestvo {

// Unit quaternion, scalar-last ordering (x, y, z, w) matching TartanAir
// pose files.
struct Quaternion {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double w = 1.0;
};

using RotationMatrix = Eigen::Matrix3d;

// First two columns of a rotation matrix, column-major concatenation
// (c1x, c1y, c1z, c2x, c2y, c2z).
using Rotation6d = Eigen::Matrix<double, 6, 1>;

// Rigid transform mapping points in this pose's local frame to the
// reference (world) frame: X_world = R * X_local + t.
struct Pose {
  RotationMatrix rotation = RotationMatrix::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose Identity() { return Pose{}; }

  Pose inverse() const {
    return Pose{rotation.transpose(), -(rotation.transpose() * translation)};
  }

  // Composition: (*this) followed by other in this pose's frame.
  Pose operator*(const Pose& other) const {
    return Pose{rotation * other.rotation,
                rotation * other.translation + translation};
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }
};

// True if R is orthonormal with determinant +1 within tol.
bool is_rotation(const RotationMatrix& r, double tol = 1e-6);

// Throws ZeroQuaternion (InvalidInput) if |q| <= 1e-12; renormalizes
// otherwise.
RotationMatrix quat_to_rotmat(const Quaternion& q);

// Unit quaternion with w >= 0. Throws InvalidInput if R is not a
// rotation within 1e-6.
Quaternion rotmat_to_quat(const RotationMatrix& r);

Rotation6d rotmat_to_6d(const RotationMatrix& r);

// Gram-Schmidt recovery: b1 = normalize(a1), b2 = normalize(a2 - (b1.a2)b1),
// b3 = b1 x b2. Throws InvalidInput on degenerate input (zero first vector
// or parallel columns), which signals a collapsed regressor output.
RotationMatrix r6_to_rotmat(const Rotation6d& r6);

// T_rel = pose_a^-1 * pose_b, so pose_a * T_rel = pose_b.
Pose relative_pose(const Pose& pose_a, const Pose& pose_b);

// Angle of R_a^T R_b in degrees, range [0, 180]. The arccos argument is
// clamped to [-1, 1] against trace roundoff near 0 and 180 degrees.
double rotation_angle_deg(const RotationMatrix& r_a, const RotationMatrix& r_b);

// Angle in degrees between two directions, folded to [0, 90] by taking
// min(theta, 180 - theta). Used for sign-ambiguous translation directions.
double direction_angle_folded_deg(const Eigen::Vector3d& a,
                                  const Eigen::Vector3d& b);

}  // namespace forestvo
