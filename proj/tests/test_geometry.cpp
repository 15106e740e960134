#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Geometry>
#include <random>

#include "forestvo/geometry.hpp"

using namespace forestvo;

namespace {

constexpr double kPi = 3.14159265358979323846;

Quaternion random_unit_quaternion(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Vector4d v(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
  while (v.norm() < 1e-6) v = {gauss(rng), gauss(rng), gauss(rng), gauss(rng)};
  v.normalize();
  return Quaternion{v(0), v(1), v(2), v(3)};
}

RotationMatrix random_rotation(std::mt19937_64& rng) {
  return quat_to_rotmat(random_unit_quaternion(rng));
}

Pose random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-5.0, 5.0);
  Pose p;
  p.rotation = random_rotation(rng);
  p.translation = {uni(rng), uni(rng), uni(rng)};
  return p;
}

RotationMatrix quarter_turn_z() {
  RotationMatrix r;
  r << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  return r;
}

}  // namespace

TEST_CASE("quat_to_rotmat identity and quarter turn") {
  CHECK((quat_to_rotmat({0, 0, 0, 1}) - RotationMatrix::Identity())
            .cwiseAbs()
            .maxCoeff() == doctest::Approx(0.0).epsilon(1e-12));
  const double h = std::sqrt(2.0) / 2.0;
  CHECK((quat_to_rotmat({0, 0, h, h}) - quarter_turn_z()).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("quat_to_rotmat rejects zero quaternion") {
  CHECK_THROWS_AS(quat_to_rotmat({0, 0, 0, 0}), InvalidInput);
}

TEST_CASE("rotmat_to_quat identity, quarter turn, sign canonicalization") {
  const Quaternion qi = rotmat_to_quat(RotationMatrix::Identity());
  CHECK(qi.x == doctest::Approx(0.0));
  CHECK(qi.w == doctest::Approx(1.0));
  const Quaternion qz = rotmat_to_quat(quarter_turn_z());
  CHECK(qz.z == doctest::Approx(std::sqrt(2.0) / 2.0));
  CHECK(qz.w == doctest::Approx(std::sqrt(2.0) / 2.0));
  CHECK(qz.w >= 0.0);
}

TEST_CASE("rotmat_to_quat rejects non-rotations") {
  RotationMatrix bad = RotationMatrix::Identity() * 2.0;
  CHECK_THROWS_AS(rotmat_to_quat(bad), InvalidInput);
  RotationMatrix reflect = RotationMatrix::Identity();
  reflect(2, 2) = -1.0;
  CHECK_THROWS_AS(rotmat_to_quat(reflect), InvalidInput);
}

// Round-trip oracle over 1000 seeded random quaternions: q and -q map to
// the same matrix, and the codecs invert each other within 1e-9.
TEST_CASE("quaternion round trips") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Quaternion q = random_unit_quaternion(rng);
    const RotationMatrix r = quat_to_rotmat(q);
    CHECK(is_rotation(r, 1e-9));
    const Quaternion back = rotmat_to_quat(r);
    const double sign = (back.w * q.w + back.x * q.x + back.y * q.y +
                         back.z * q.z) >= 0.0
                            ? 1.0
                            : -1.0;
    CHECK(std::abs(back.x - sign * q.x) < 1e-9);
    CHECK(std::abs(back.y - sign * q.y) < 1e-9);
    CHECK(std::abs(back.z - sign * q.z) < 1e-9);
    CHECK(std::abs(back.w - sign * q.w) < 1e-9);
    CHECK((quat_to_rotmat(back) - r).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("rotmat_to_6d reads off columns") {
  const Rotation6d id6 = rotmat_to_6d(RotationMatrix::Identity());
  Rotation6d expect;
  expect << 1, 0, 0, 0, 1, 0;
  CHECK((id6 - expect).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  const Rotation6d qz = rotmat_to_6d(quarter_turn_z());
  expect << 0, 1, 0, -1, 0, 0;
  CHECK((qz - expect).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("r6_to_rotmat identity and hand Gram-Schmidt case") {
  Rotation6d r6;
  r6 << 1, 0, 0, 0, 1, 0;
  CHECK((r6_to_rotmat(r6) - RotationMatrix::Identity()).cwiseAbs().maxCoeff() <
        1e-12);
  // (2,0,0, 0.5,0.5,0): b1=(1,0,0), residual (0,0.5,0) -> (0,1,0),
  // cross -> (0,0,1).
  r6 << 2, 0, 0, 0.5, 0.5, 0;
  CHECK((r6_to_rotmat(r6) - RotationMatrix::Identity()).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("r6_to_rotmat degenerate inputs") {
  Rotation6d zero = Rotation6d::Zero();
  CHECK_THROWS_AS(r6_to_rotmat(zero), InvalidInput);
  Rotation6d parallel;
  parallel << 1, 0, 0, 2, 0, 0;
  CHECK_THROWS_AS(r6_to_rotmat(parallel), InvalidInput);
}

TEST_CASE("6d round trips and projection property") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const RotationMatrix r = random_rotation(rng);
    CHECK((r6_to_rotmat(rotmat_to_6d(r)) - r).cwiseAbs().maxCoeff() < 1e-9);
  }
  // Scaled/sheared first two columns still decode to a proper rotation.
  std::uniform_real_distribution<double> uni(0.1, 3.0);
  for (int i = 0; i < 200; ++i) {
    const RotationMatrix r = random_rotation(rng);
    Rotation6d r6 = rotmat_to_6d(r);
    r6.head<3>() *= uni(rng);
    r6.tail<3>() = uni(rng) * r6.tail<3>() + 0.3 * r6.head<3>().normalized();
    const RotationMatrix decoded = r6_to_rotmat(r6);
    CHECK(is_rotation(decoded, 1e-9));
  }
}

TEST_CASE("relative_pose basics") {
  Pose trans;
  trans.translation = {1, 0, 0};
  const Pose rel = relative_pose(Pose::Identity(), trans);
  CHECK((rel.translation - Eigen::Vector3d(1, 0, 0)).norm() < 1e-12);

  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    const Pose self = relative_pose(a, a);
    CHECK((self.rotation - RotationMatrix::Identity()).cwiseAbs().maxCoeff() <
          1e-9);
    CHECK(self.translation.norm() < 1e-9);
    // Composition oracle: a * rel(a, b) = b.
    const Pose recomposed = a * relative_pose(a, b);
    CHECK((recomposed.rotation - b.rotation).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((recomposed.translation - b.translation).norm() < 1e-9);
    // Inverse property.
    const Pose id = a.inverse() * a;
    CHECK((id.rotation - RotationMatrix::Identity()).cwiseAbs().maxCoeff() <
          1e-9);
    CHECK(id.translation.norm() < 1e-9);
  }
}

TEST_CASE("rotation_angle_deg against axis-angle construction") {
  CHECK(rotation_angle_deg(RotationMatrix::Identity(),
                           RotationMatrix::Identity()) ==
        doctest::Approx(0.0));
  CHECK(rotation_angle_deg(RotationMatrix::Identity(), quarter_turn_z()) ==
        doctest::Approx(90.0));

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> angle_deg(0.01, 179.9);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const RotationMatrix base = random_rotation(rng);
    Eigen::Vector3d axis(gauss(rng), gauss(rng), gauss(rng));
    axis.normalize();
    const double theta = angle_deg(rng);
    const RotationMatrix perturbed =
        base * Eigen::AngleAxisd(theta * kPi / 180.0, axis).toRotationMatrix();
    const double measured = rotation_angle_deg(base, perturbed);
    CHECK(std::abs(measured - theta) < 1e-6);
    // Symmetry.
    CHECK(rotation_angle_deg(perturbed, base) == doctest::Approx(measured));
  }
}
