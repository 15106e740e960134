#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Geometry>
#include <random>

#include "forestvo/epipolar.hpp"

using namespace forestvo;

namespace {

Pose random_relative_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.05, 0.3);
  Eigen::Vector3d axis(gauss(rng), gauss(rng), gauss(rng));
  axis.normalize();
  Pose p;
  p.rotation = Eigen::AngleAxisd(uni(rng), axis).toRotationMatrix();
  Eigen::Vector3d dir(gauss(rng), gauss(rng), gauss(rng));
  p.translation = dir.normalized() * uni(rng);
  return p;
}

// Synthetic scene: 3D points in front of both cameras, projected to
// normalized coordinates of each view.
void synthetic_correspondences(const Pose& t_rel, std::mt19937_64& rng, int n,
                               std::vector<Eigen::Vector2d>* x0,
                               std::vector<Eigen::Vector2d>* x1) {
  std::uniform_real_distribution<double> ux(-0.5, 0.5), ud(4.0, 10.0);
  while (static_cast<int>(x0->size()) < n) {
    const double z = ud(rng);
    const Eigen::Vector3d p0(ux(rng) * z, ux(rng) * z, z);
    const Eigen::Vector3d p1 = t_rel.apply(p0);
    if (p1.z() <= 0.1) continue;
    x0->push_back(p0.hnormalized());
    x1->push_back(p1.hnormalized());
  }
}

}  // namespace

TEST_CASE("essential_from_pose pure x-translation") {
  Pose p;
  p.translation = {1, 0, 0};
  const EssentialMatrix e = essential_from_pose(p);
  Eigen::Matrix3d expect;
  expect << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  expect /= expect.norm();
  const double diff_plus = (e - expect).cwiseAbs().maxCoeff();
  const double diff_minus = (e + expect).cwiseAbs().maxCoeff();
  CHECK(std::min(diff_plus, diff_minus) < 1e-12);
}

TEST_CASE("essential_from_pose rejects pure rotation") {
  Pose p;
  p.rotation = Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitZ().eval())
                   .toRotationMatrix();
  CHECK_THROWS_AS(essential_from_pose(p), EstimationError);
}

TEST_CASE("essential_from_pose epipolar constraint on synthetic scenes") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Pose t_rel = random_relative_pose(rng);
    const EssentialMatrix e = essential_from_pose(t_rel);
    std::vector<Eigen::Vector2d> x0, x1;
    synthetic_correspondences(t_rel, rng, 50, &x0, &x1);
    for (std::size_t i = 0; i < x0.size(); ++i) {
      const double residual =
          x1[i].homogeneous().dot(e * x0[i].homogeneous());
      CHECK(std::abs(residual) < 1e-12);
    }
  }
}

TEST_CASE("essential_from_pose scale invariance of translation") {
  std::mt19937_64 rng(7);
  const Pose p = random_relative_pose(rng);
  Pose scaled = p;
  scaled.translation *= 5.0;
  const EssentialMatrix e1 = essential_from_pose(p);
  const EssentialMatrix e2 = essential_from_pose(scaled);
  CHECK((e1 - e2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("essential matrix rank-2 invariant") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const EssentialMatrix e = essential_from_pose(random_relative_pose(rng));
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(e);
    const auto& sv = svd.singularValues();
    CHECK(sv(2) < 1e-9 * sv(0));
    CHECK(std::abs(sv(0) - sv(1)) < 1e-6 * sv(0));
  }
}

TEST_CASE("fundamental_from_essential identity intrinsics yields E") {
  std::mt19937_64 rng(11);
  const EssentialMatrix e = essential_from_pose(random_relative_pose(rng));
  CameraIntrinsics ident{1.0, 1.0, 0.0, 0.0, 1, 1};
  const Eigen::Matrix3d f = fundamental_from_essential(e, ident, ident);
  const double diff_plus = (f - e).cwiseAbs().maxCoeff();
  const double diff_minus = (f + e).cwiseAbs().maxCoeff();
  CHECK(std::min(diff_plus, diff_minus) < 1e-12);
}

TEST_CASE("fundamental_from_essential pixel constraint and rank") {
  std::mt19937_64 rng(13);
  CameraIntrinsics k0{400.0, 420.0, 310.0, 230.0, 640, 480};
  CameraIntrinsics k1{380.0, 390.0, 330.0, 250.0, 640, 480};
  for (int trial = 0; trial < 10; ++trial) {
    const Pose t_rel = random_relative_pose(rng);
    const EssentialMatrix e = essential_from_pose(t_rel);
    const Eigen::Matrix3d f = fundamental_from_essential(e, k0, k1);
    std::vector<Eigen::Vector2d> x0, x1;
    synthetic_correspondences(t_rel, rng, 30, &x0, &x1);
    for (std::size_t i = 0; i < x0.size(); ++i) {
      const Eigen::Vector3d px0(k0.fx * x0[i].x() + k0.cx,
                                k0.fy * x0[i].y() + k0.cy, 1.0);
      const Eigen::Vector3d px1(k1.fx * x1[i].x() + k1.cx,
                                k1.fy * x1[i].y() + k1.cy, 1.0);
      CHECK(std::abs(px1.dot(f * px0)) < 1e-9);
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(f);
    CHECK(svd.singularValues()(2) < 1e-9);
  }
}

TEST_CASE("sampson_error zero on exact correspondences") {
  std::mt19937_64 rng(17);
  const Pose t_rel = random_relative_pose(rng);
  const EssentialMatrix e = essential_from_pose(t_rel);
  std::vector<Eigen::Vector2d> x0, x1;
  synthetic_correspondences(t_rel, rng, 30, &x0, &x1);
  for (double err : sampson_error(e, x0, x1)) {
    CHECK(err < 1e-20);
  }
}

TEST_CASE("sampson_error edge cases") {
  // E for t=(1,0,0), R=I constrains matched points to equal rows; a pair
  // with y0 == y1 sits exactly on the constraint, so the error is 0.
  Pose p;
  p.translation = {1, 0, 0};
  const EssentialMatrix e = essential_from_pose(p);
  const auto zero = sampson_error(e, {{0.0, 0.0}}, {{0.5, 0.0}});
  CHECK(zero[0] == 0.0);

  // Nonzero numerator with an all-zero Jacobian: the denominator vanishes
  // and the error degenerates to +infinity.
  EssentialMatrix m = EssentialMatrix::Zero();
  m(2, 2) = 1.0;
  const auto inf = sampson_error(m, {{0.0, 0.0}}, {{0.0, 0.0}});
  CHECK(std::isinf(inf[0]));
}

TEST_CASE("sampson_error approximates geometric epipolar distance") {
  std::mt19937_64 rng(19);
  const Pose t_rel = random_relative_pose(rng);
  const EssentialMatrix e = essential_from_pose(t_rel);
  std::vector<Eigen::Vector2d> x0, x1;
  synthetic_correspondences(t_rel, rng, 50, &x0, &x1);
  std::normal_distribution<double> gauss(0.0, 0.003);
  for (auto& p : x1) p += Eigen::Vector2d(gauss(rng), gauss(rng));
  const auto errs = sampson_error(e, x0, x1);
  for (std::size_t i = 0; i < x0.size(); ++i) {
    // Nonlinear oracle: project the pair onto the constraint manifold by
    // iterated linearization and measure the squared correction.
    Eigen::Vector2d p0 = x0[i];
    Eigen::Vector2d p1 = x1[i];
    for (int iter = 0; iter < 50; ++iter) {
      const Eigen::Vector3d l1 = e * p0.homogeneous();
      const Eigen::Vector3d l0 = e.transpose() * p1.homogeneous();
      const double r = p1.homogeneous().dot(l1);
      Eigen::Vector4d jac(l0.x(), l0.y(), l1.x(), l1.y());
      const double jn2 = jac.squaredNorm();
      if (jn2 < 1e-30) break;
      const Eigen::Vector4d step = jac * (r / jn2);
      p0 -= step.head<2>();
      p1 -= step.tail<2>();
    }
    const double geometric = (p0 - x0[i]).squaredNorm() +
                             (p1 - x1[i]).squaredNorm();
    if (geometric < 1e-18) continue;
    CHECK(errs[i] == doctest::Approx(geometric).epsilon(0.10));
  }
}

TEST_CASE("sampson_error zero iff algebraic residual zero") {
  std::mt19937_64 rng(23);
  const Pose t_rel = random_relative_pose(rng);
  const EssentialMatrix e = essential_from_pose(t_rel);
  std::vector<Eigen::Vector2d> x0, x1;
  synthetic_correspondences(t_rel, rng, 20, &x0, &x1);
  for (auto& p : x1) p += Eigen::Vector2d(0.01, -0.02);
  const auto errs = sampson_error(e, x0, x1);
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double residual = x1[i].homogeneous().dot(e * x0[i].homogeneous());
    CHECK((errs[i] == 0.0) == (residual == 0.0));
  }
}

TEST_CASE("hinge_loss zero errors leave base loss untouched") {
  HingeLossInput input;
  input.errors = {{0.0, 0.0, 0.0}};
  input.confidences = {{0.5, 0.9, 0.2}};
  input.base_loss = 7.5;
  const auto result = hinge_loss(input);
  CHECK(result.total_loss == 7.5);
}

TEST_CASE("hinge_loss hand-computed case") {
  // weights = (log2/log4, 1) = (0.5, 1); weighted mean = (0.05+0.3)/2 =
  // 0.175 < alpha*L = 2; total = 10.175.
  HingeLossInput input;
  input.errors = {{0.1, 0.3}};
  input.confidences = {{1.0, 3.0}};
  input.base_loss = 10.0;
  input.alpha = 0.2;
  const auto result = hinge_loss(input);
  CHECK(result.per_image_hinge[0] == doctest::Approx(0.175).epsilon(1e-12));
  CHECK(result.total_loss == doctest::Approx(10.175).epsilon(1e-12));
}

TEST_CASE("hinge_loss clipping branch") {
  HingeLossInput input;
  input.errors = {{100.0, 100.0}};
  input.confidences = {{1.0, 3.0}};
  input.base_loss = 10.0;
  input.alpha = 0.2;
  const auto result = hinge_loss(input);
  CHECK(result.per_image_hinge[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(result.total_loss == doctest::Approx(12.0).epsilon(1e-12));
}

TEST_CASE("hinge_loss all-zero-confidence image contributes 0 with warning") {
  HingeLossInput input;
  input.errors = {{1.0, 2.0}};
  input.confidences = {{0.0, 0.0}};
  input.base_loss = 5.0;
  const auto result = hinge_loss(input);
  CHECK(result.total_loss == 5.0);
  CHECK(result.zero_confidence_warning[0]);
}

TEST_CASE("hinge_loss total bounded and monotone in errors") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> ue(0.0, 50.0), uc(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    HingeLossInput input;
    const int n = 1 + trial % 5;
    for (int i = 0; i < n; ++i) {
      std::vector<double> errs, confs;
      for (int j = 0; j < 4; ++j) {
        errs.push_back(ue(rng));
        confs.push_back(uc(rng));
      }
      input.errors.push_back(errs);
      input.confidences.push_back(confs);
    }
    input.base_loss = 3.0;
    input.alpha = 0.2;
    const auto result = hinge_loss(input);
    CHECK(result.total_loss >= input.base_loss);
    CHECK(result.total_loss <=
          input.base_loss * (1.0 + n * input.alpha) + 1e-12);

    // Raising any single error never lowers the total.
    HingeLossInput bumped = input;
    bumped.errors[trial % n][trial % 4] += 5.0;
    CHECK(hinge_loss(bumped).total_loss >= result.total_loss - 1e-12);
  }
}
