#pragma once

#include <optional>
#include <vector>

#include "forestvo/geometry.hpp"

namespace forestvo {

// Ordered sequence of absolute (world-frame) poses, optionally timestamped.
struct Trajectory {
  std::vector<Pose> poses;
  std::vector<double> timestamps;  // empty or one per pose, strictly increasing

  std::size_t size() const { return poses.size(); }

  void validate() const {
    if (!timestamps.empty()) {
      if (timestamps.size() != poses.size()) {
        throw InvalidInput("Trajectory: timestamp count mismatch");
      }
      for (std::size_t i = 1; i < timestamps.size(); ++i) {
        if (timestamps[i] <= timestamps[i - 1]) {
          throw InvalidInput("Trajectory: timestamps must strictly increase");
        }
      }
    }
  }
};

enum class AlignmentMode { kNone, kRigid, kSimilarity };

// poses[0] = start, poses[k+1] = poses[k] * rel_poses[k].
Trajectory accumulate(const std::vector<Pose>& rel_poses, const Pose& start);

// Relative poses between consecutive frames; inverse of accumulate.
std::vector<Pose> extract_relatives(const Trajectory& traj);

// RMSE of position residuals after closed-form least-squares alignment of
// est onto gt (Umeyama; rigid or similarity per mode). Association is by
// index.
double ate(const Trajectory& est, const Trajectory& gt, AlignmentMode mode);

struct RpeResult {
  double mean_translation_m = 0.0;
  double mean_rotation_deg = 0.0;
};

// Mean translational/rotational error of consecutive relative motions:
// err_k = rel(gt_k, gt_{k+1})^-1 * rel(est_k, est_{k+1}).
RpeResult rpe_score(const Trajectory& est, const Trajectory& gt,
                    bool rmse_aggregation = false);

struct KittiResult {
  double translation_pct = 0.0;     // drift as % of distance travelled
  double rotation_deg_per_m = 0.0;  // drift in degrees per meter
  int num_subsequences = 0;
};

// Fixed-length-subsequence drift averaged over every start index and
// every length in lengths_m (walked along cumulative gt path length).
KittiResult kitti_score(const Trajectory& est, const Trajectory& gt,
                        const std::vector<double>& lengths_m);

// KITTI-standard evaluation lengths, 100..800 m.
std::vector<double> kitti_standard_lengths();
// Short lengths for desk-scale synthetic trajectories.
std::vector<double> kitti_desk_lengths();

}  // namespace forestvo
