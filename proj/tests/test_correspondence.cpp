#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <random>

#include "forestvo/correspondence.hpp"

using namespace forestvo;

namespace {

std::vector<Eigen::Vector2d> random_points(std::mt19937_64& rng, int n,
                                           double w, double h) {
  std::uniform_real_distribution<double> ux(0.0, w), uy(0.0, h);
  std::vector<Eigen::Vector2d> pts(n);
  for (auto& p : pts) p = {ux(rng), uy(rng)};
  return pts;
}

// Exhaustive mutual-nearest reference used to check the assignment path.
Assignment brute_force_mutual(const std::vector<Eigen::Vector2d>& a,
                              const std::vector<Eigen::Vector2d>& b,
                              double radius) {
  Assignment out;
  out.matches0.assign(a.size(), Assignment::kUnmatched);
  out.matches1.assign(b.size(), Assignment::kUnmatched);
  for (std::size_t i = 0; i < a.size(); ++i) {
    int best_j = -1;
    double best_d = 1e100;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = (a[i] - b[j]).norm();
      if (d < best_d) {
        best_d = d;
        best_j = static_cast<int>(j);
      }
    }
    if (best_j < 0 || best_d > radius) continue;
    int best_i = -1;
    double best_back = 1e100;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double d = (a[k] - b[best_j]).norm();
      if (d < best_back) {
        best_back = d;
        best_i = static_cast<int>(k);
      }
    }
    if (best_i == static_cast<int>(i)) {
      out.matches0[i] = best_j;
      out.matches1[best_j] = static_cast<int>(i);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("sample_homography difficulty zero is exact identity") {
  HomographyParams params;
  params.difficulty = 0.0;
  params.seed = 5;
  const Homography h = sample_homography(params, 640, 480);
  CHECK((h - Homography::Identity()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sample_homography rotation bounded by difficulty * max") {
  HomographyParams params;
  params.difficulty = 0.5;
  params.max_rotation_deg = 20.0;
  params.max_translation_frac = 0.0;
  params.max_scale_delta = 0.0;
  params.max_perspective = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    params.seed = seed;
    const Homography h = sample_homography(params, 640, 480);
    const double angle =
        std::abs(std::atan2(h(1, 0), h(0, 0))) * 180.0 / 3.14159265358979;
    CHECK(angle <= 10.0 + 1e-9);
  }
}

TEST_CASE("sample_homography deterministic per seed") {
  HomographyParams params;
  params.seed = 42;
  const Homography a = sample_homography(params, 640, 480);
  const Homography b = sample_homography(params, 640, 480);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sample_homography distortion components bounded") {
  HomographyParams params;
  params.difficulty = 0.7;
  params.max_rotation_deg = 0.0;
  params.max_translation_frac = 0.0;
  params.max_perspective = 0.0;
  params.max_scale_delta = 0.2;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    params.seed = seed;
    const Homography h = sample_homography(params, 100, 100);
    CHECK(std::abs(h(0, 0) - 1.0) <= 0.7 * 0.2 + 1e-12);
    CHECK(std::abs(h(1, 1) - 1.0) <= 0.7 * 0.2 + 1e-12);
  }
}

TEST_CASE("warp_points identity, translation, and algebra oracle") {
  std::vector<Eigen::Vector2d> pts = {{10, 10}, {3.5, -2.0}, {100, 200}};
  auto warped = warp_points(Homography::Identity(), pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(!warped[i].at_infinity);
    CHECK((warped[i].point - pts[i]).norm() < 1e-12);
  }

  Homography t = Homography::Identity();
  t(0, 2) = 5.0;
  t(1, 2) = -3.0;
  warped = warp_points(t, {{10, 10}});
  CHECK((warped[0].point - Eigen::Vector2d(15, 7)).norm() < 1e-12);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Homography h = Homography::Identity();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) h(r, c) += 0.1 * uni(rng);
    }
    h /= h(2, 2);
    const auto p = random_points(rng, 20, 640, 480);
    const auto w = warp_points(h, p);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Eigen::Vector3d q = h * p[i].homogeneous();
      if (std::abs(q.z()) < 1e-12) {
        CHECK(w[i].at_infinity);
      } else {
        CHECK((w[i].point - q.hnormalized()).norm() < 1e-9);
      }
    }
  }
}

TEST_CASE("warp_points flags points at infinity") {
  Homography h = Homography::Identity();
  h(2, 0) = 1.0;
  h(2, 2) = 0.0;  // x=0 maps to infinity
  const auto w = warp_points(h, {{0.0, 5.0}, {1.0, 5.0}});
  CHECK(w[0].at_infinity);
  CHECK(!w[1].at_infinity);
}

TEST_CASE("gt_matches_homography identity and beyond-radius cases") {
  std::mt19937_64 rng(9);
  const auto kpts = random_points(rng, 40, 640, 480);
  const Assignment id =
      gt_matches_homography(kpts, kpts, Homography::Identity(), 3.0);
  for (int i = 0; i < 40; ++i) CHECK(id.matches0[i] == i);

  std::vector<Eigen::Vector2d> shifted;
  // Keypoints on a coarse grid so a (4,0) shift leaves nothing in radius.
  std::vector<Eigen::Vector2d> grid;
  for (int gx = 0; gx < 6; ++gx) {
    for (int gy = 0; gy < 6; ++gy) grid.push_back({gx * 50.0, gy * 50.0});
  }
  for (const auto& p : grid) shifted.push_back(p + Eigen::Vector2d(4.0, 0.0));
  const Assignment none =
      gt_matches_homography(grid, shifted, Homography::Identity(), 3.0);
  for (int j : none.matches0) CHECK(j == Assignment::kUnmatched);
}

TEST_CASE("gt_matches_homography equals brute-force mutual-nearest oracle") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    HomographyParams hp;
    hp.seed = 100 + trial;
    const Homography h = sample_homography(hp, 640, 480);
    const auto kpts0 = random_points(rng, 60, 640, 480);
    const auto warped = warp_points(h, kpts0);
    std::vector<Eigen::Vector2d> kpts1;
    for (const auto& w : warped) {
      kpts1.push_back(w.point + Eigen::Vector2d(noise(rng), noise(rng)));
    }
    const Assignment got = gt_matches_homography(kpts0, kpts1, h, 3.0);
    std::vector<Eigen::Vector2d> wpts(kpts0.size());
    for (std::size_t i = 0; i < warped.size(); ++i) wpts[i] = warped[i].point;
    const Assignment want = brute_force_mutual(wpts, kpts1, 3.0);
    CHECK(got.matches0 == want.matches0);
    CHECK(got.matches1 == want.matches1);
  }
}

TEST_CASE("assignment bijective and transpose-symmetric") {
  // Well-separated keypoints with kpts1 near the warp of kpts0: the
  // mutual-nearest relation is unambiguous in both directions, so the
  // swapped-input assignment must be the exact transpose.
  std::mt19937_64 rng(33);
  HomographyParams hp;
  hp.seed = 77;
  const Homography h = sample_homography(hp, 640, 480);
  std::vector<Eigen::Vector2d> kpts0, kpts1;
  std::uniform_real_distribution<double> jitter(-2.0, 2.0);
  for (double y = 60.0; y < 440.0; y += 60.0) {
    for (double x = 60.0; x < 600.0; x += 60.0) {
      const Eigen::Vector2d p(x, y);
      const Eigen::Vector3d w = h * p.homogeneous();
      kpts0.push_back(p);
      kpts1.push_back(w.hnormalized() +
                      Eigen::Vector2d(jitter(rng), jitter(rng)));
    }
  }
  const Assignment fwd = gt_matches_homography(kpts0, kpts1, h, 10.0);
  CHECK(fwd.num_matches() > 20);
  for (std::size_t i = 0; i < fwd.matches0.size(); ++i) {
    if (fwd.matches0[i] != Assignment::kUnmatched) {
      CHECK(fwd.matches1[fwd.matches0[i]] == static_cast<int>(i));
    }
  }
  // Swapped inputs with the inverse homography transpose the assignment.
  Homography hinv = h.inverse();
  hinv /= hinv(2, 2);
  const Assignment rev = gt_matches_homography(kpts1, kpts0, hinv, 10.0);
  int agree = 0, total = 0;
  for (std::size_t i = 0; i < fwd.matches0.size(); ++i) {
    if (fwd.matches0[i] == Assignment::kUnmatched) continue;
    ++total;
    if (rev.matches0[fwd.matches0[i]] == static_cast<int>(i)) ++agree;
  }
  CHECK(agree == total);
}

namespace {

DepthMap constant_depth(int w, int h, double d) {
  DepthMap depth;
  depth.width = w;
  depth.height = h;
  depth.values.assign(static_cast<std::size_t>(w) * h, d);
  return depth;
}

CameraIntrinsics test_camera() {
  return CameraIntrinsics{320.0, 320.0, 320.0, 240.0, 640, 480};
}

}  // namespace

TEST_CASE("project_depth identity transform returns input coords") {
  const auto k = test_camera();
  const auto depth = constant_depth(640, 480, 5.0);
  std::mt19937_64 rng(41);
  const auto kpts = random_points(rng, 30, 640, 480);
  const auto projected = project_depth(kpts, depth, k, k, Pose::Identity());
  for (std::size_t i = 0; i < kpts.size(); ++i) {
    CHECK(projected[i].valid);
    CHECK((projected[i].point - kpts[i]).norm() < 1e-9);
  }
}

TEST_CASE("project_depth optical-axis fixed point under z-translation") {
  const auto k = test_camera();
  const double d = 8.0;
  const auto depth = constant_depth(640, 480, d);
  Pose t_rel;
  t_rel.translation = {0.0, 0.0, -d / 2.0};
  const auto projected =
      project_depth({{k.cx, k.cy}}, depth, k, k, t_rel);
  REQUIRE(projected[0].valid);
  CHECK((projected[0].point - Eigen::Vector2d(k.cx, k.cy)).norm() < 1e-9);
}

TEST_CASE("project_depth matches analytic pinhole oracle") {
  const auto k = test_camera();
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> uni(-0.1, 0.1);
  for (int trial = 0; trial < 20; ++trial) {
    const double d = 6.0 + trial * 0.3;
    const auto depth = constant_depth(640, 480, d);
    Pose t_rel;
    t_rel.rotation =
        Eigen::AngleAxisd(uni(rng), Eigen::Vector3d::UnitY().eval())
            .toRotationMatrix();
    t_rel.translation = {uni(rng), uni(rng), uni(rng)};
    // Integer pixel coordinates so the nearest-pixel depth lookup is exact.
    const std::vector<Eigen::Vector2d> kpts = {{320, 240}, {100, 80}, {500, 400}};
    const auto projected = project_depth(kpts, depth, k, k, t_rel);
    for (std::size_t i = 0; i < kpts.size(); ++i) {
      const Eigen::Vector3d x0((kpts[i].x() - k.cx) / k.fx * d,
                               (kpts[i].y() - k.cy) / k.fy * d, d);
      const Eigen::Vector3d x1 = t_rel.rotation * x0 + t_rel.translation;
      if (!projected[i].valid) continue;
      const Eigen::Vector2d expect(k.fx * x1.x() / x1.z() + k.cx,
                                   k.fy * x1.y() / x1.z() + k.cy);
      CHECK((projected[i].point - expect).norm() < 1e-6);
    }
  }
}

TEST_CASE("project_depth invalid depth and behind-camera flags") {
  const auto k = test_camera();
  auto depth = constant_depth(4, 4, -1.0);  // all invalid
  CameraIntrinsics small = k;
  small.width = 4;
  small.height = 4;
  auto projected = project_depth({{1, 1}}, depth, small, small, Pose::Identity());
  CHECK(!projected[0].valid);

  depth = constant_depth(640, 480, 2.0);
  Pose behind;
  behind.translation = {0.0, 0.0, -5.0};
  projected = project_depth({{320, 240}}, depth, k, k, behind);
  CHECK(!projected[0].valid);
}

TEST_CASE("gt_matches_depth identity assignment and color filter") {
  const auto k = test_camera();
  const auto depth = constant_depth(640, 480, 5.0);
  std::mt19937_64 rng(51);
  const auto kpts = random_points(rng, 20, 640, 480);

  const Assignment id =
      gt_matches_depth(kpts, kpts, depth, k, k, Pose::Identity(), 3.0);
  for (int i = 0; i < 20; ++i) CHECK(id.matches0[i] == i);

  // RGB distance 7*sqrt(3) ~ 12.12 > 10: dropped.
  std::vector<Rgb> c0(kpts.size(), Rgb{100, 100, 100});
  std::vector<Rgb> c1(kpts.size(), Rgb{107, 107, 107});
  Assignment dropped = gt_matches_depth(kpts, kpts, depth, k, k,
                                        Pose::Identity(), 3.0, &c0, &c1, 10.0);
  for (int j : dropped.matches0) CHECK(j == Assignment::kUnmatched);

  // sqrt(25+25+9) ~ 7.68 <= 10: kept.
  std::vector<Rgb> c2(kpts.size(), Rgb{105, 105, 103});
  Assignment kept = gt_matches_depth(kpts, kpts, depth, k, k,
                                     Pose::Identity(), 3.0, &c0, &c2, 10.0);
  for (int i = 0; i < 20; ++i) CHECK(kept.matches0[i] == i);
}

TEST_CASE("gt_matches_depth without colors equals all-identical colors") {
  const auto k = test_camera();
  const auto depth = constant_depth(640, 480, 5.0);
  std::mt19937_64 rng(53);
  const auto kpts0 = random_points(rng, 30, 640, 480);
  const auto kpts1 = random_points(rng, 30, 640, 480);
  Pose t_rel;
  t_rel.translation = {0.1, 0.0, 0.0};
  const Assignment plain =
      gt_matches_depth(kpts0, kpts1, depth, k, k, t_rel, 20.0);
  std::vector<Rgb> c(kpts0.size(), Rgb{50, 50, 50});
  const Assignment colored =
      gt_matches_depth(kpts0, kpts1, depth, k, k, t_rel, 20.0, &c, &c, 10.0);
  CHECK(plain.matches0 == colored.matches0);
}

TEST_CASE("nn_ratio_match exact descriptors and boundary rejection") {
  std::vector<Descriptor> basis(3, Descriptor::Zero(3));
  basis[0](0) = 1.0;
  basis[1](1) = 1.0;
  basis[2](2) = 1.0;
  std::vector<Eigen::Vector2d> kpts = {{0, 0}, {1, 1}, {2, 2}};
  RatioMatchParams params;
  params.ratio_threshold = 1.25;
  const MatchSet m = nn_ratio_match(basis, basis, kpts, kpts, params);
  REQUIRE(m.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK((m.kpts0[i] - m.kpts1[i]).norm() == 0.0);
  }

  // Query equidistant from both candidates: ratio 1, rejected.
  std::vector<Descriptor> query(1, Descriptor::Zero(2));
  std::vector<Descriptor> cands(2, Descriptor::Zero(2));
  cands[0](0) = 1.0;
  cands[1](0) = -1.0;
  const MatchSet rejected =
      nn_ratio_match(query, cands, {{0, 0}}, {{0, 0}, {1, 0}}, params);
  CHECK(rejected.size() == 0);
}

TEST_CASE("nn_ratio_match equals brute-force oracle") {
  std::mt19937_64 rng(61);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_descs = [&](int n, int dim) {
    std::vector<Descriptor> d(n, Descriptor::Zero(dim));
    for (auto& v : d) {
      for (int i = 0; i < dim; ++i) v(i) = gauss(rng);
    }
    return d;
  };
  for (int trial = 0; trial < 10; ++trial) {
    const auto d0 = random_descs(30, 8);
    const auto d1 = random_descs(35, 8);
    const auto k0 = random_points(rng, 30, 640, 480);
    const auto k1 = random_points(rng, 35, 640, 480);
    RatioMatchParams params;
    params.ratio_threshold = 1.25;
    const MatchSet got = nn_ratio_match(d0, d1, k0, k1, params);

    // All-pairs distance-matrix reference.
    MatchSet want;
    for (int i = 0; i < 30; ++i) {
      double best = 1e100, second = 1e100;
      int bj = -1;
      for (int j = 0; j < 35; ++j) {
        const double d = (d0[i] - d1[j]).norm();
        if (d < best) {
          second = best;
          best = d;
          bj = j;
        } else if (d < second) {
          second = d;
        }
      }
      if (best < second / params.ratio_threshold) {
        want.kpts0.push_back(k0[i]);
        want.kpts1.push_back(k1[bj]);
        want.confidence.push_back(1.0 - best / second);
      }
    }
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK((got.kpts0[i] - want.kpts0[i]).norm() == 0.0);
      CHECK((got.kpts1[i] - want.kpts1[i]).norm() == 0.0);
      CHECK(got.confidence[i] == doctest::Approx(want.confidence[i]));
    }
  }
}

TEST_CASE("nn_ratio_match subset monotonicity in threshold") {
  std::mt19937_64 rng(71);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Descriptor> d0(25, Descriptor::Zero(4)), d1(25, Descriptor::Zero(4));
  for (auto& v : d0) {
    for (int i = 0; i < 4; ++i) v(i) = gauss(rng);
  }
  for (auto& v : d1) {
    for (int i = 0; i < 4; ++i) v(i) = gauss(rng);
  }
  const auto k0 = random_points(rng, 25, 640, 480);
  const auto k1 = random_points(rng, 25, 640, 480);
  RatioMatchParams loose{1.05, false};
  RatioMatchParams strict{1.6, false};
  const MatchSet many = nn_ratio_match(d0, d1, k0, k1, loose);
  const MatchSet few = nn_ratio_match(d0, d1, k0, k1, strict);
  CHECK(few.size() <= many.size());
  // Every strict match appears among the loose matches.
  for (std::size_t i = 0; i < few.size(); ++i) {
    bool found = false;
    for (std::size_t j = 0; j < many.size(); ++j) {
      found = found || ((few.kpts0[i] - many.kpts0[j]).norm() == 0.0 &&
                        (few.kpts1[i] - many.kpts1[j]).norm() == 0.0);
    }
    CHECK(found);
  }
}

TEST_CASE("nn_ratio_match rejects too few descriptors") {
  std::vector<Descriptor> one(1, Descriptor::Zero(2));
  CHECK_THROWS_AS(
      nn_ratio_match(one, one, {{0, 0}}, {{0, 0}}, RatioMatchParams{}),
      InvalidInput);
}
