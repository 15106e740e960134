#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "forestvo/camera.hpp"
#include "forestvo/geometry.hpp"

namespace forestvo {

// Transformer encoder that regresses relative camera pose from matched
// keypoint coordinates. The default config reproduces the reference
// parameter count of 531,721 trainable scalars.
struct RegressorConfig {
  int input_dim = 4;
  int model_dim = 128;
  int ffn_dim = 256;
  int num_layers = 4;
  int num_heads = 4;
  double dropout_rate = 0.1;
  int max_seq_len = 1024;

  void validate() const {
    if (input_dim <= 0 || model_dim <= 0 || ffn_dim <= 0 || num_layers <= 0 ||
        num_heads <= 0 || max_seq_len <= 0) {
      throw InvalidInput("RegressorConfig: dimensions must be positive");
    }
    if (model_dim % num_heads != 0) {
      throw InvalidInput("RegressorConfig: model_dim must divide by num_heads");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
      throw InvalidInput("RegressorConfig: dropout_rate must be in [0,1)");
    }
  }
};

// Maps pixel coordinates to [-1,1] per image dimension before they enter
// the network; saved with every checkpoint.
struct CoordNormalizer {
  double width = 1.0;
  double height = 1.0;

  double nx(double x) const { return 2.0 * x / width - 1.0; }
  double ny(double y) const { return 2.0 * y / height - 1.0; }
};

// All trainable tensors. Biases are stored as (n x 1) matrices so the
// whole parameter set can be walked generically (Adam, serialization,
// finite-difference checks).
struct EncoderLayerParams {
  Eigen::MatrixXd wq, wk, wv, wo;  // (d x d)
  Eigen::MatrixXd bq, bk, bv, bo;  // (d x 1)
  Eigen::MatrixXd ln1_scale, ln1_shift;  // (d x 1)
  Eigen::MatrixXd w_ff1, b_ff1;    // (ffn x d), (ffn x 1)
  Eigen::MatrixXd w_ff2, b_ff2;    // (d x ffn), (d x 1)
  Eigen::MatrixXd ln2_scale, ln2_shift;  // (d x 1)
};

struct RegressorParams {
  RegressorConfig config;
  Eigen::MatrixXd w_in, b_in;      // (d x input_dim), (d x 1)
  std::vector<EncoderLayerParams> layers;
  Eigen::MatrixXd w_trans, b_trans;  // (3 x d), (3 x 1)
  Eigen::MatrixXd w_rot, b_rot;      // (6 x d), (6 x 1)

  // Fixed-order named views over every tensor.
  std::vector<std::pair<std::string, Eigen::MatrixXd*>> tensors();
  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> tensors() const;
};

// One padded sequence of (x0, y0, x1, y1) tokens with its ground truth.
struct KeypointSample {
  Eigen::MatrixXd tokens;    // (T x 4), padded rows zero-filled
  std::vector<bool> mask;    // T entries, >= 1 true
  Eigen::Vector3d gt_translation = Eigen::Vector3d::Zero();
  Rotation6d gt_rotation6d = (Rotation6d() << 1, 0, 0, 0, 1, 0).finished();
};

using KeypointBatch = std::vector<KeypointSample>;

struct TrainConfig {
  int batch_size = 128;
  int steps = 28000;
  double learning_rate = 1e-3;
  double weight_decay = 1e-5;
  double beta = 100.0;  // rotation-loss scale
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const {
    if (batch_size <= 0 || steps < 0 || learning_rate < 0.0 ||
        weight_decay < 0.0 || beta < 0.0 || adam_eps <= 0.0 ||
        adam_beta1 <= 0.0 || adam_beta1 >= 1.0 || adam_beta2 <= 0.0 ||
        adam_beta2 >= 1.0) {
      throw InvalidInput("TrainConfig: invalid field");
    }
  }
};

// Zero-bias uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization;
// layer-norm scales one, shifts zero. Deterministic per seed.
RegressorParams init_params(const RegressorConfig& config, std::uint64_t seed);

std::int64_t param_count(const RegressorParams& params);

struct ForwardOutput {
  std::vector<Eigen::Vector3d> t_hat;
  std::vector<Rotation6d> r6_hat;
};

// Encoder forward pass: token projection, sinusoidal positional encoding,
// post-norm encoder layers with padded keys masked out, masked mean over
// valid tokens, linear translation/rotation heads. Dropout only in
// train_mode, deterministic per dropout_seed.
ForwardOutput forward(const RegressorParams& params, const KeypointBatch& batch,
                      bool train_mode = false, std::uint64_t dropout_seed = 0);

struct PoseLoss {
  double total = 0.0;
  double l_trans = 0.0;
  double l_rot = 0.0;
};

// l_trans/l_rot are per-component MSEs averaged over the batch;
// total = l_trans + beta * l_rot.
PoseLoss pose_loss(const ForwardOutput& pred, const KeypointBatch& batch,
                   double beta);

// Exact analytic gradients of pose_loss(forward(.)) with respect to every
// parameter, in the same shape as RegressorParams. Also reports the loss
// of the evaluated batch.
RegressorParams backward(const RegressorParams& params,
                         const KeypointBatch& batch, double beta,
                         PoseLoss* loss_out = nullptr, bool train_mode = false,
                         std::uint64_t dropout_seed = 0);

struct TrainRecord {
  int step = 0;
  double total_loss = 0.0;
  double l_trans = 0.0;
  double l_rot = 0.0;
};

// First/second Adam moments per tensor plus the number of completed
// steps; carrying it across calls makes training resumable bit-exactly.
struct AdamState {
  std::vector<Eigen::MatrixXd> m;
  std::vector<Eigen::MatrixXd> v;
  int step = 0;
};

AdamState make_adam_state(const RegressorParams& params);

// Adam with decoupled weight decay. Runs from state.step to config.steps,
// drawing each step's batch and dropout mask deterministically from
// (config.seed, step). Throws EstimationError (NonFiniteLoss) with the
// offending step index.
std::vector<TrainRecord> train(RegressorParams& params,
                               const std::vector<KeypointSample>& dataset,
                               const TrainConfig& config, AdamState& state);

// Builds a model input from a match set: coordinates normalized to
// [-1,1], tokens ordered by descending confidence with (x0, y0) ties
// broken lexicographically so predictions are order-independent.
KeypointSample make_sample(const MatchSet& matches,
                           const CoordNormalizer& normalizer);

// Eval-mode forward on a single match set; rotation recovered from the
// 6D head output. Propagates the Gram-Schmidt DegenerateInput error for
// collapsed outputs.
Pose predict_relative_pose(const RegressorParams& params,
                           const MatchSet& matches,
                           const CoordNormalizer& normalizer);

// Checkpoint container: one line of JSON (config, normalizer, format
// version, tensor manifest with byte offsets, optional train state)
// followed by raw little-endian float64 tensor data.
struct Checkpoint {
  RegressorParams params;
  CoordNormalizer normalizer;
  bool has_train_state = false;
  AdamState adam;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace forestvo
