#include "forestvo/correspondence.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace forestvo {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Mutual-nearest assignment between two point sets already in the same
// frame. valid0 masks points of set a that may participate.
Assignment mutual_nearest(const std::vector<Eigen::Vector2d>& a,
                          const std::vector<bool>& valid_a,
                          const std::vector<Eigen::Vector2d>& b,
                          double radius) {
  const int n0 = static_cast<int>(a.size());
  const int n1 = static_cast<int>(b.size());
  Assignment out;
  out.matches0.assign(n0, Assignment::kUnmatched);
  out.matches1.assign(n1, Assignment::kUnmatched);

  std::vector<int> nearest0(n0, -1), nearest1(n1, -1);
  std::vector<double> best0(n0, std::numeric_limits<double>::infinity());
  std::vector<double> best1(n1, std::numeric_limits<double>::infinity());
  for (int i = 0; i < n0; ++i) {
    if (!valid_a[i]) continue;
    for (int j = 0; j < n1; ++j) {
      const double d = (a[i] - b[j]).norm();
      if (d < best0[i]) {
        best0[i] = d;
        nearest0[i] = j;
      }
      if (d < best1[j]) {
        best1[j] = d;
        nearest1[j] = i;
      }
    }
  }
  for (int i = 0; i < n0; ++i) {
    const int j = nearest0[i];
    if (j >= 0 && nearest1[j] == i && best0[i] <= radius) {
      out.matches0[i] = j;
      out.matches1[j] = i;
    }
  }
  return out;
}

}  // namespace

std::optional<double> DepthMap::sample(const Eigen::Vector2d& px) const {
  const int x = static_cast<int>(std::lround(px.x()));
  const int y = static_cast<int>(std::lround(px.y()));
  if (x < 0 || x >= width || y < 0 || y >= height) return std::nullopt;
  const double d = at(x, y);
  if (!std::isfinite(d) || d <= 0.0) return std::nullopt;
  return d;
}

Homography sample_homography(const HomographyParams& params, int image_width,
                             int image_height) {
  params.validate();
  if (image_width <= 0 || image_height <= 0) {
    throw InvalidInput("sample_homography: image size must be positive");
  }
  std::mt19937_64 rng(params.seed);
  auto draw = [&rng](double mag) {
    if (mag == 0.0) return 0.0;
    return std::uniform_real_distribution<double>(-mag, mag)(rng);
  };
  const double d = params.difficulty;
  const double angle = draw(d * params.max_rotation_deg) * kPi / 180.0;
  const double sx = 1.0 + draw(d * params.max_scale_delta);
  const double sy = 1.0 + draw(d * params.max_scale_delta);
  const double px = draw(d * params.max_perspective);
  const double py = draw(d * params.max_perspective);
  const double tx = draw(d * params.max_translation_frac * image_width);
  const double ty = draw(d * params.max_translation_frac * image_height);

  const double cx = image_width / 2.0;
  const double cy = image_height / 2.0;
  Homography center = Homography::Identity();
  center(0, 2) = -cx;
  center(1, 2) = -cy;
  Homography rot = Homography::Identity();
  rot(0, 0) = std::cos(angle);
  rot(0, 1) = -std::sin(angle);
  rot(1, 0) = std::sin(angle);
  rot(1, 1) = std::cos(angle);
  Homography scale = Homography::Identity();
  scale(0, 0) = sx;
  scale(1, 1) = sy;
  Homography persp = Homography::Identity();
  persp(2, 0) = px;
  persp(2, 1) = py;
  Homography trans = Homography::Identity();
  trans(0, 2) = tx;
  trans(1, 2) = ty;
  Homography uncenter = Homography::Identity();
  uncenter(0, 2) = cx;
  uncenter(1, 2) = cy;

  Homography h = uncenter * trans * persp * scale * rot * center;
  h /= h(2, 2);
  return h;
}

std::vector<WarpedPoint> warp_points(const Homography& h,
                                     const std::vector<Eigen::Vector2d>& pts) {
  std::vector<WarpedPoint> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Eigen::Vector3d q = h * pts[i].homogeneous();
    if (std::abs(q.z()) < 1e-12) {
      out[i].at_infinity = true;
    } else {
      out[i].point = q.hnormalized();
    }
  }
  return out;
}

Assignment gt_matches_homography(const std::vector<Eigen::Vector2d>& kpts0,
                                 const std::vector<Eigen::Vector2d>& kpts1,
                                 const Homography& h, double radius) {
  if (radius <= 0.0) {
    throw InvalidInput("gt_matches_homography: radius must be positive");
  }
  const auto warped = warp_points(h, kpts0);
  std::vector<Eigen::Vector2d> pts(kpts0.size());
  std::vector<bool> valid(kpts0.size());
  for (std::size_t i = 0; i < warped.size(); ++i) {
    pts[i] = warped[i].point;
    valid[i] = !warped[i].at_infinity;
  }
  return mutual_nearest(pts, valid, kpts1, radius);
}

std::vector<ProjectedPoint> project_depth(
    const std::vector<Eigen::Vector2d>& kpts0, const DepthMap& depth0,
    const CameraIntrinsics& k0, const CameraIntrinsics& k1, const Pose& t_rel) {
  k0.validate();
  k1.validate();
  std::vector<ProjectedPoint> out(kpts0.size());
  for (std::size_t i = 0; i < kpts0.size(); ++i) {
    const auto d = depth0.sample(kpts0[i]);
    if (!d) continue;
    const Eigen::Vector2d n = k0.normalize(kpts0[i]);
    const Eigen::Vector3d x0(n.x() * *d, n.y() * *d, *d);
    const Eigen::Vector3d x1 = t_rel.apply(x0);
    if (x1.z() <= 1e-9) continue;
    const Eigen::Vector2d px = k1.project(x1);
    if (!k1.in_bounds(px)) continue;
    out[i].point = px;
    out[i].valid = true;
  }
  return out;
}

Assignment gt_matches_depth(const std::vector<Eigen::Vector2d>& kpts0,
                            const std::vector<Eigen::Vector2d>& kpts1,
                            const DepthMap& depth0, const CameraIntrinsics& k0,
                            const CameraIntrinsics& k1, const Pose& t_rel,
                            double radius, const std::vector<Rgb>* colors0,
                            const std::vector<Rgb>* colors1,
                            double color_threshold) {
  if (radius <= 0.0) {
    throw InvalidInput("gt_matches_depth: radius must be positive");
  }
  const auto projected = project_depth(kpts0, depth0, k0, k1, t_rel);
  std::vector<Eigen::Vector2d> pts(kpts0.size());
  std::vector<bool> valid(kpts0.size());
  for (std::size_t i = 0; i < projected.size(); ++i) {
    pts[i] = projected[i].point;
    valid[i] = projected[i].valid;
  }
  Assignment out = mutual_nearest(pts, valid, kpts1, radius);
  if (colors0 != nullptr && colors1 != nullptr) {
    for (std::size_t i = 0; i < out.matches0.size(); ++i) {
      const int j = out.matches0[i];
      if (j == Assignment::kUnmatched) continue;
      const Rgb& c0 = (*colors0)[i];
      const Rgb& c1 = (*colors1)[j];
      const double dist = std::sqrt((c0[0] - c1[0]) * (c0[0] - c1[0]) +
                                    (c0[1] - c1[1]) * (c0[1] - c1[1]) +
                                    (c0[2] - c1[2]) * (c0[2] - c1[2]));
      if (dist > color_threshold) {
        out.matches0[i] = Assignment::kUnmatched;
        out.matches1[j] = Assignment::kUnmatched;
      }
    }
  }
  return out;
}

MatchSet nn_ratio_match(const std::vector<Descriptor>& desc0,
                        const std::vector<Descriptor>& desc1,
                        const std::vector<Eigen::Vector2d>& kpts0,
                        const std::vector<Eigen::Vector2d>& kpts1,
                        const RatioMatchParams& params) {
  if (params.ratio_threshold <= 1.0) {
    throw InvalidInput("nn_ratio_match: ratio_threshold must exceed 1");
  }
  if (desc1.size() < 2) {
    throw InvalidInput("TooFewDescriptors: ratio test needs >= 2 candidates");
  }
  for (const auto& d : desc0) {
    if (d.size() != desc1[0].size()) {
      throw InvalidInput("nn_ratio_match: descriptor dimensions differ");
    }
  }

  const int n0 = static_cast<int>(desc0.size());
  const int n1 = static_cast<int>(desc1.size());

  // Nearest neighbour of each desc1 entry in desc0, for the mutual check.
  std::vector<int> nearest1(n1, -1);
  if (params.mutual_check) {
    for (int j = 0; j < n1; ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n0; ++i) {
        const double d = (desc1[j] - desc0[i]).norm();
        if (d < best) {
          best = d;
          nearest1[j] = i;
        }
      }
    }
  }

  MatchSet out;
  for (int i = 0; i < n0; ++i) {
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = std::numeric_limits<double>::infinity();
    int best = -1;
    for (int j = 0; j < n1; ++j) {
      const double d = (desc0[i] - desc1[j]).norm();
      if (d < d1) {
        d2 = d1;
        d1 = d;
        best = j;
      } else if (d < d2) {
        d2 = d;
      }
    }
    if (!(d1 < d2 / params.ratio_threshold)) continue;
    if (params.mutual_check && nearest1[best] != i) continue;
    out.kpts0.push_back(kpts0[i]);
    out.kpts1.push_back(kpts1[best]);
    out.confidence.push_back(d2 > 0.0 ? 1.0 - d1 / d2 : 1.0);
  }
  return out;
}

}  // namespace forestvo
