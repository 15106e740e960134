// Command-line surface for the forest visual-odometry toolkit: ground-truth
// generation, match evaluation, pose-regressor training/inference, and
// trajectory metrics. Exit codes: 0 success, 1 usage error, 2 data error.
#include <CLI11.hpp>

#include <Eigen/Core>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "forestvo/correspondence.hpp"
#include "forestvo/dataset_io.hpp"
#include "forestvo/epipolar.hpp"
#include "forestvo/regressor.hpp"
#include "forestvo/robust_pose.hpp"
#include "forestvo/trajectory.hpp"

namespace {

using nlohmann::json;
using namespace forestvo;

Homography load_homography(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open homography file " + path);
  Homography h;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (!(in >> h(r, c))) {
        throw ParseError("homography file needs 9 numbers: " + path, 1);
      }
    }
  }
  return h;
}

Pose load_pose_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pose file " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    return parse_pose_line(line);
  }
  throw ParseError("pose file has no pose line: " + path, 1);
}

json assignment_to_json(const Assignment& a) {
  return json{{"matches0", a.matches0}, {"matches1", a.matches1}};
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file " + path);
  out << j.dump(2) << "\n";
}

AlignmentMode parse_align(const std::string& s) {
  if (s == "none") return AlignmentMode::kNone;
  if (s == "rigid") return AlignmentMode::kRigid;
  if (s == "sim3") return AlignmentMode::kSimilarity;
  throw CLI::ValidationError("--align must be none|rigid|sim3");
}

TrajectoryFileFormat parse_format(const std::string& s) {
  if (s == "tartanair") return TrajectoryFileFormat::kTartanAir;
  if (s == "tum") return TrajectoryFileFormat::kTum;
  throw CLI::ValidationError("--format must be tartanair|tum");
}

// --- gen-gt -----------------------------------------------------------------

struct GenGtOpts {
  std::string mode;
  std::string matches_path, depth_path, intrinsics_path, pose_path;
  std::string homography_path;
  double radius = 3.0;
  double color_threshold = 10.0;
  std::string out_path;
  bool quiet = false;
};

int run_gen_gt(const GenGtOpts& o) {
  const auto match_sets = load_matches(o.matches_path);
  json out = json::array();
  int total = 0;
  for (const MatchSet& m : match_sets) {
    Assignment a;
    if (o.mode == "homography") {
      const Homography h = load_homography(o.homography_path);
      a = gt_matches_homography(m.kpts0, m.kpts1, h, o.radius);
    } else {
      const DepthMap depth = load_depth_pfm(o.depth_path);
      const CameraIntrinsics k = load_intrinsics(o.intrinsics_path);
      const Pose t_rel = load_pose_file(o.pose_path);
      a = gt_matches_depth(m.kpts0, m.kpts1, depth, k, k, t_rel, o.radius,
                           nullptr, nullptr, o.color_threshold);
    }
    json entry = assignment_to_json(a);
    entry["pair_id"] = m.pair_id;
    out.push_back(entry);
    total += a.num_matches();
  }
  write_json(out, o.out_path);
  if (!o.quiet) {
    std::cout << "pairs: " << match_sets.size() << ", matches: " << total
              << "\n";
  }
  return 0;
}

// --- eval-matches -----------------------------------------------------------

struct EvalMatchesOpts {
  std::string matches_path, pose_path, intrinsics_path;
  std::vector<double> thresholds = {1e-4, 5e-4, 1e-3, 5e-3, 1e-2};
  std::uint64_t seed = 0;
  bool quiet = false;
};

int run_eval_matches(const EvalMatchesOpts& o) {
  const auto match_sets = load_matches(o.matches_path);
  if (match_sets.empty()) {
    throw InvalidInput("eval-matches: empty match file");
  }
  const CameraIntrinsics k = load_intrinsics(o.intrinsics_path);
  const Trajectory gt =
      load_trajectory(o.pose_path, TrajectoryFileFormat::kTartanAir);
  if (gt.size() != match_sets.size() + 1) {
    throw InvalidInput("eval-matches: trajectory must have one more pose "
                       "than the match file has pairs");
  }

  json pairs = json::array();
  std::vector<double> pose_errors;
  std::vector<double> all_inlier_pct;
  std::vector<std::vector<double>> all_precisions(o.thresholds.size());
  for (std::size_t i = 0; i < match_sets.size(); ++i) {
    const MatchSet& m = match_sets[i];
    // Camera transform for the pair: inverse of the frame-to-frame motion.
    const Pose cam =
        relative_pose(gt.poses[i], gt.poses[i + 1]).inverse();
    const EssentialMatrix e = essential_from_pose(cam);
    std::vector<Eigen::Vector2d> x0(m.size()), x1(m.size());
    for (std::size_t j = 0; j < m.size(); ++j) {
      x0[j] = k.normalize(m.kpts0[j]);
      x1[j] = k.normalize(m.kpts1[j]);
    }
    const std::vector<double> errs = sampson_error(e, x0, x1);
    const std::vector<double> precision = match_precision(errs, o.thresholds);

    json entry;
    entry["pair_id"] = m.pair_id;
    entry["precision"] = precision;
    for (std::size_t t = 0; t < precision.size(); ++t) {
      all_precisions[t].push_back(precision[t]);
    }
    try {
      RansacParams rp;
      rp.seed = o.seed;
      const PoseEstimate est = lo_ransac_pose(m, k, k, rp);
      const double err = pose_error(est, cam);
      entry["pose_error_deg"] = err;
      entry["inlier_pct"] = inlier_percentage(est);
      pose_errors.push_back(err);
      all_inlier_pct.push_back(inlier_percentage(est));
    } catch (const EstimationError& ex) {
      entry["pose_error_deg"] = nullptr;
      entry["error"] = ex.what();
      pose_errors.push_back(std::numeric_limits<double>::infinity());
    }
    pairs.push_back(entry);
  }

  json out;
  out["seed"] = o.seed;
  out["thresholds"] = o.thresholds;
  out["pairs"] = pairs;
  json agg;
  for (std::size_t t = 0; t < o.thresholds.size(); ++t) {
    double sum = 0.0;
    for (double p : all_precisions[t]) sum += p;
    all_precisions[t].assign(1, sum / static_cast<double>(pairs.size()));
  }
  json mean_precision = json::array();
  for (const auto& p : all_precisions) mean_precision.push_back(p[0]);
  agg["mean_precision"] = mean_precision;
  const std::vector<double> auc =
      pose_auc(pose_errors, {5.0, 10.0, 20.0});
  agg["pose_auc"] = {{"5deg", auc[0]}, {"10deg", auc[1]}, {"20deg", auc[2]}};
  if (!all_inlier_pct.empty()) {
    double sum = 0.0;
    for (double p : all_inlier_pct) sum += p;
    agg["mean_inlier_pct"] = sum / static_cast<double>(all_inlier_pct.size());
  }
  out["aggregate"] = agg;
  std::cout << out.dump(2) << "\n";
  return 0;
}

// --- train ------------------------------------------------------------------

struct TrainOpts {
  int synthetic = 0;
  std::string data_path, pose_path;
  int steps = 1000;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double weight_decay = 1e-5;
  double beta = 100.0;
  std::uint64_t seed = 0;
  std::string checkpoint_in, checkpoint_out, log_path;
  bool quiet = false;
};

std::vector<KeypointSample> synthetic_dataset(int n, std::uint64_t seed,
                                              const CoordNormalizer& norm) {
  std::vector<KeypointSample> out;
  for (int i = 0; i < n; ++i) {
    SyntheticSceneConfig c;
    c.num_points = 24;
    c.seed = seed + 1000 + static_cast<std::uint64_t>(i);
    const SyntheticPair pair = generate_synthetic_pair(c);
    KeypointSample s = make_sample(pair.matches, norm);
    const Pose rel = pair.gt_camera_transform.inverse();
    s.gt_translation = rel.translation;
    s.gt_rotation6d = rotmat_to_6d(rel.rotation);
    out.push_back(std::move(s));
  }
  return out;
}

int run_train(const TrainOpts& o) {
  Checkpoint ckpt;
  if (!o.checkpoint_in.empty()) {
    ckpt = load_checkpoint(o.checkpoint_in);
    if (!ckpt.has_train_state) {
      throw InvalidInput("train: checkpoint has no optimizer state to resume");
    }
  } else {
    RegressorConfig rc;
    ckpt.params = init_params(rc, o.seed);
    ckpt.normalizer = CoordNormalizer{640.0, 480.0};
    ckpt.adam = make_adam_state(ckpt.params);
    ckpt.has_train_state = true;
  }

  std::vector<KeypointSample> dataset;
  if (o.synthetic > 0) {
    dataset = synthetic_dataset(o.synthetic, o.seed, ckpt.normalizer);
  } else {
    const auto match_sets = load_matches(o.data_path);
    const Trajectory gt =
        load_trajectory(o.pose_path, TrajectoryFileFormat::kTartanAir);
    if (gt.size() != match_sets.size() + 1) {
      throw InvalidInput("train: trajectory must have one more pose than "
                         "the match file has pairs");
    }
    for (std::size_t i = 0; i < match_sets.size(); ++i) {
      KeypointSample s = make_sample(match_sets[i], ckpt.normalizer);
      const Pose rel = relative_pose(gt.poses[i], gt.poses[i + 1]);
      s.gt_translation = rel.translation;
      s.gt_rotation6d = rotmat_to_6d(rel.rotation);
      dataset.push_back(std::move(s));
    }
  }
  if (dataset.empty()) throw InvalidInput("train: empty dataset");

  TrainConfig tc;
  tc.batch_size = o.batch_size;
  tc.steps = o.steps;
  tc.learning_rate = o.learning_rate;
  tc.weight_decay = o.weight_decay;
  tc.beta = o.beta;
  tc.seed = o.seed;

  const auto records = train(ckpt.params, dataset, tc, ckpt.adam);

  if (!o.log_path.empty()) {
    std::ofstream log(o.log_path, std::ios::binary);
    if (!log) throw IoError("train: cannot open log file " + o.log_path);
    log << "step,total_loss,l_trans,l_rot\n";
    char buf[160];
    for (const auto& r : records) {
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", r.step,
                    r.total_loss, r.l_trans, r.l_rot);
      log << buf;
    }
  }
  save_checkpoint(ckpt, o.checkpoint_out);
  if (!o.quiet) {
    json meta;
    meta["seed"] = o.seed;
    meta["steps"] = ckpt.adam.step;
    meta["dataset_size"] = dataset.size();
    if (!records.empty()) meta["final_loss"] = records.back().total_loss;
    std::cout << meta.dump(2) << "\n";
  }
  return 0;
}

// --- infer ------------------------------------------------------------------

struct InferOpts {
  std::string checkpoint_path, matches_path, out_path;
  std::string start_pose;
  std::string format = "tartanair";
};

int run_infer(const InferOpts& o) {
  const Checkpoint ckpt = load_checkpoint(o.checkpoint_path);
  const auto match_sets = load_matches(o.matches_path);
  Pose start = Pose::Identity();
  if (!o.start_pose.empty()) {
    try {
      start = parse_pose_line(o.start_pose);
    } catch (const Error& e) {
      // A malformed flag value is a usage error, not a data error.
      throw CLI::ValidationError(std::string("--start-pose: ") + e.what());
    }
  }

  std::vector<Pose> rels;
  for (const MatchSet& m : match_sets) {
    try {
      rels.push_back(predict_relative_pose(ckpt.params, m, ckpt.normalizer));
    } catch (const Error& e) {
      throw EstimationError("infer: pair " + m.pair_id + ": " + e.what());
    }
  }
  const Trajectory traj = accumulate(rels, start);
  save_trajectory(traj, o.out_path, parse_format(o.format));
  return 0;
}

// --- eval-traj --------------------------------------------------------------

struct EvalTrajOpts {
  std::string est_path, gt_path;
  std::string format = "tartanair";
  std::string align = "sim3";
  std::vector<double> kitti_lengths;
  std::string output = "json";
};

int run_eval_traj(const EvalTrajOpts& o) {
  const TrajectoryFileFormat fmt = parse_format(o.format);
  const Trajectory est = load_trajectory(o.est_path, fmt);
  const Trajectory gt = load_trajectory(o.gt_path, fmt);
  const double ate_m = ate(est, gt, parse_align(o.align));
  const RpeResult rpe = rpe_score(est, gt);
  std::vector<double> lengths =
      o.kitti_lengths.empty() ? kitti_desk_lengths() : o.kitti_lengths;

  json out;
  out["ate_m"] = ate_m;
  out["rpe"] = {{"dt_m", rpe.mean_translation_m},
                {"dr_deg", rpe.mean_rotation_deg}};
  try {
    const KittiResult kr = kitti_score(est, gt, lengths);
    out["kitti"] = {{"dt_pct", kr.translation_pct},
                    {"dr_deg_per_m", kr.rotation_deg_per_m}};
  } catch (const EstimationError&) {
    out["kitti"] = nullptr;  // trajectory shorter than every length
  }

  if (o.output == "csv") {
    std::cout << "metric,value\n";
    std::cout << "ate_m," << ate_m << "\n";
    std::cout << "rpe_dt_m," << rpe.mean_translation_m << "\n";
    std::cout << "rpe_dr_deg," << rpe.mean_rotation_deg << "\n";
    if (!out["kitti"].is_null()) {
      std::cout << "kitti_dt_pct," << out["kitti"]["dt_pct"].get<double>()
                << "\n";
      std::cout << "kitti_dr_deg_per_m,"
                << out["kitti"]["dr_deg_per_m"].get<double>() << "\n";
    }
  } else {
    std::cout << out.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forestvo: forest visual-odometry toolkit"};
  app.require_subcommand(1);

  GenGtOpts gg;
  CLI::App* gen_gt = app.add_subcommand(
      "gen-gt", "Generate ground-truth keypoint assignments");
  gen_gt->add_option("--mode", gg.mode, "homography|depth")
      ->required()
      ->check(CLI::IsMember({"homography", "depth"}));
  gen_gt->add_option("--matches", gg.matches_path, "Match JSONL file")
      ->required();
  gen_gt->add_option("--homography", gg.homography_path,
                     "3x3 homography text file (homography mode)");
  gen_gt->add_option("--depth", gg.depth_path, "PFM depth map (depth mode)");
  gen_gt->add_option("--intrinsics", gg.intrinsics_path,
                     "Camera intrinsics JSON (depth mode)");
  gen_gt->add_option("--pose-gt", gg.pose_path,
                     "Relative pose line file (depth mode)");
  gen_gt->add_option("--radius", gg.radius, "Match radius in pixels");
  gen_gt->add_option("--color-threshold", gg.color_threshold,
                     "RGB Euclidean rejection threshold");
  gen_gt->add_option("--out", gg.out_path, "Output assignment JSON")
      ->required();
  gen_gt->add_flag("--quiet", gg.quiet);

  EvalMatchesOpts em;
  CLI::App* eval_matches = app.add_subcommand(
      "eval-matches", "Epipolar precision and robust-pose metrics");
  eval_matches->add_option("--matches", em.matches_path)->required();
  eval_matches->add_option("--pose-gt", em.pose_path, "Trajectory file")
      ->required();
  eval_matches->add_option("--intrinsics", em.intrinsics_path)->required();
  eval_matches->add_option("--thresholds", em.thresholds,
                           "Sampson precision thresholds");
  eval_matches->add_option("--seed", em.seed);
  eval_matches->add_flag("--quiet", em.quiet);

  TrainOpts tr;
  CLI::App* train_cmd =
      app.add_subcommand("train", "Train the pose regressor");
  auto* synth = train_cmd->add_option("--synthetic", tr.synthetic,
                                      "Generate N synthetic samples");
  train_cmd->add_option("--data", tr.data_path, "Match JSONL file")
      ->excludes(synth);
  train_cmd->add_option("--pose-gt", tr.pose_path,
                        "Trajectory file for --data targets");
  train_cmd->add_option("--steps", tr.steps);
  train_cmd->add_option("--batch-size", tr.batch_size);
  train_cmd->add_option("--lr", tr.learning_rate);
  train_cmd->add_option("--weight-decay", tr.weight_decay);
  train_cmd->add_option("--beta", tr.beta);
  train_cmd->add_option("--seed", tr.seed);
  train_cmd->add_option("--checkpoint-in", tr.checkpoint_in);
  train_cmd->add_option("--checkpoint-out", tr.checkpoint_out)->required();
  train_cmd->add_option("--log", tr.log_path, "CSV loss log");
  train_cmd->add_flag("--quiet", tr.quiet);

  InferOpts inf;
  CLI::App* infer_cmd =
      app.add_subcommand("infer", "Predict a trajectory from matches");
  infer_cmd->add_option("--checkpoint", inf.checkpoint_path)->required();
  infer_cmd->add_option("--matches", inf.matches_path)->required();
  infer_cmd->add_option("--start-pose", inf.start_pose,
                        "\"tx ty tz qx qy qz qw\" (default identity)");
  infer_cmd->add_option("--out", inf.out_path)->required();
  infer_cmd->add_option("--format", inf.format, "tartanair|tum");

  EvalTrajOpts et;
  CLI::App* eval_traj =
      app.add_subcommand("eval-traj", "Trajectory metrics (ATE, RPE, drift)");
  eval_traj->add_option("--est", et.est_path)->required();
  eval_traj->add_option("--gt", et.gt_path)->required();
  eval_traj->add_option("--format", et.format, "tartanair|tum");
  eval_traj->add_option("--align", et.align, "none|rigid|sim3");
  eval_traj->add_option("--kitti-lengths", et.kitti_lengths,
                        "Subsequence lengths in meters");
  eval_traj->add_option("--output", et.output, "json|csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen_gt->parsed()) {
      if (gg.mode == "homography" && gg.homography_path.empty()) {
        std::cerr << "gen-gt: --homography required in homography mode\n";
        return 1;
      }
      if (gg.mode == "depth" &&
          (gg.depth_path.empty() || gg.intrinsics_path.empty() ||
           gg.pose_path.empty())) {
        std::cerr << "gen-gt: --depth, --intrinsics and --pose-gt required "
                     "in depth mode\n";
        return 1;
      }
      return run_gen_gt(gg);
    }
    if (eval_matches->parsed()) return run_eval_matches(em);
    if (train_cmd->parsed()) {
      if (tr.synthetic <= 0 && tr.data_path.empty()) {
        std::cerr << "train: need --synthetic N or --data PATH\n";
        return 1;
      }
      if (!tr.data_path.empty() && tr.pose_path.empty()) {
        std::cerr << "train: --data requires --pose-gt\n";
        return 1;
      }
      return run_train(tr);
    }
    if (infer_cmd->parsed()) return run_infer(inf);
    if (eval_traj->parsed()) return run_eval_traj(et);
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
