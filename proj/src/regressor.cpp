#include "forestvo/regressor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

namespace forestvo {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kLnEps = 1e-5;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  return splitmix64(seed ^ splitmix64(salt));
}

// y = x * W^T + b^T, rows are tokens.
MatrixXd linear(const MatrixXd& x, const MatrixXd& w, const MatrixXd& b) {
  MatrixXd y = x * w.transpose();
  y.rowwise() += b.col(0).transpose();
  return y;
}

MatrixXd sinusoidal_encoding(int seq_len, int dim) {
  MatrixXd pe(seq_len, dim);
  for (int pos = 0; pos < seq_len; ++pos) {
    for (int i = 0; i < dim; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / dim);
      pe(pos, i) = std::sin(pos * freq);
      if (i + 1 < dim) pe(pos, i + 1) = std::cos(pos * freq);
    }
  }
  return pe;
}

struct LayerNormCache {
  MatrixXd xhat;
  VectorXd inv_std;
  MatrixXd y;
};

LayerNormCache layer_norm(const MatrixXd& x, const MatrixXd& scale,
                          const MatrixXd& shift) {
  const int rows = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  LayerNormCache c;
  c.xhat.resize(rows, d);
  c.inv_std.resize(rows);
  for (int r = 0; r < rows; ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    c.inv_std(r) = 1.0 / std::sqrt(var + kLnEps);
    c.xhat.row(r) = (x.row(r).array() - mu) * c.inv_std(r);
  }
  c.y = c.xhat;
  c.y.array().rowwise() *= scale.col(0).transpose().array();
  c.y.rowwise() += shift.col(0).transpose();
  return c;
}

// Backpropagates through layer_norm; accumulates scale/shift gradients
// and returns the input gradient.
MatrixXd layer_norm_backward(const MatrixXd& dy, const LayerNormCache& c,
                             const MatrixXd& scale, MatrixXd& g_scale,
                             MatrixXd& g_shift) {
  const int rows = static_cast<int>(dy.rows());
  const int d = static_cast<int>(dy.cols());
  MatrixXd dx(rows, d);
  for (int r = 0; r < rows; ++r) {
    const Eigen::RowVectorXd dxhat =
        dy.row(r).cwiseProduct(scale.col(0).transpose());
    const double m1 = dxhat.mean();
    const double m2 = dxhat.cwiseProduct(c.xhat.row(r)).mean();
    dx.row(r) =
        c.inv_std(r) * (dxhat.array() - m1 - c.xhat.row(r).array() * m2);
  }
  g_scale.col(0) += dy.cwiseProduct(c.xhat).colwise().sum().transpose();
  g_shift.col(0) += dy.colwise().sum().transpose();
  return dx;
}

struct LayerCache {
  MatrixXd x;  // layer input
  MatrixXd q, k, v;
  std::vector<MatrixXd> attn;  // softmax weights per head (T x T)
  MatrixXd headcat;
  MatrixXd drop1;  // scaled keep mask, empty in eval mode
  MatrixXd res1;
  LayerNormCache ln1;
  MatrixXd ff_pre;
  MatrixXd drop2;
  MatrixXd h_drop;  // FFN activation after dropout
  MatrixXd res2;
  LayerNormCache ln2;
};

struct SampleCache {
  MatrixXd x0;  // projection + positional encoding
  std::vector<LayerCache> layers;
  VectorXd pooled;
  int valid_count = 0;
};

MatrixXd draw_dropout_mask(std::mt19937_64& rng, int rows, int cols,
                           double rate) {
  const double keep = 1.0 - rate;
  MatrixXd mask(rows, cols);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      mask(r, c) = uni(rng) < keep ? 1.0 / keep : 0.0;
    }
  }
  return mask;
}

void check_batch(const RegressorConfig& config, const KeypointBatch& batch) {
  for (const auto& sample : batch) {
    const int t = static_cast<int>(sample.tokens.rows());
    if (t > config.max_seq_len) {
      throw InvalidInput("SequenceTooLong: sequence exceeds max_seq_len");
    }
    if (sample.tokens.cols() != config.input_dim) {
      throw InvalidInput("forward: token width does not match input_dim");
    }
    if (static_cast<int>(sample.mask.size()) != t) {
      throw InvalidInput("forward: mask length does not match tokens");
    }
    if (std::none_of(sample.mask.begin(), sample.mask.end(),
                     [](bool b) { return b; })) {
      throw InvalidInput("EmptyMask: sample has no valid token");
    }
  }
}

// Full forward pass with cached intermediates for backpropagation.
ForwardOutput forward_cached(const RegressorParams& params,
                             const KeypointBatch& batch, bool train_mode,
                             std::uint64_t dropout_seed,
                             std::vector<SampleCache>* caches) {
  const RegressorConfig& cfg = params.config;
  cfg.validate();
  check_batch(cfg, batch);

  const int d = cfg.model_dim;
  const int heads = cfg.num_heads;
  const int dh = d / heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool dropout = train_mode && cfg.dropout_rate > 0.0;
  std::mt19937_64 drop_rng(mix_seed(dropout_seed, 0x0d50u));

  ForwardOutput out;
  if (caches != nullptr) caches->clear();

  for (const KeypointSample& sample : batch) {
    const int t = static_cast<int>(sample.tokens.rows());
    SampleCache cache;
    cache.x0 = linear(sample.tokens, params.w_in, params.b_in);
    cache.x0 += sinusoidal_encoding(t, d);

    MatrixXd x = cache.x0;
    for (const EncoderLayerParams& lp : params.layers) {
      LayerCache lc;
      lc.x = x;
      lc.q = linear(x, lp.wq, lp.bq);
      lc.k = linear(x, lp.wk, lp.bk);
      lc.v = linear(x, lp.wv, lp.bv);

      lc.headcat.resize(t, d);
      lc.attn.resize(heads);
      for (int h = 0; h < heads; ++h) {
        const auto qh = lc.q.middleCols(h * dh, dh);
        const auto kh = lc.k.middleCols(h * dh, dh);
        const auto vh = lc.v.middleCols(h * dh, dh);
        MatrixXd scores = qh * kh.transpose() * att_scale;
        for (int j = 0; j < t; ++j) {
          if (!sample.mask[j]) {
            scores.col(j).setConstant(
                -std::numeric_limits<double>::infinity());
          }
        }
        MatrixXd& a = lc.attn[h];
        a.resize(t, t);
        for (int r = 0; r < t; ++r) {
          const double mx = scores.row(r).maxCoeff();
          a.row(r) = (scores.row(r).array() - mx).exp();
          a.row(r) /= a.row(r).sum();
        }
        lc.headcat.middleCols(h * dh, dh) = a * vh;
      }

      MatrixXd attn_out = linear(lc.headcat, lp.wo, lp.bo);
      if (dropout) {
        lc.drop1 = draw_dropout_mask(drop_rng, t, d, cfg.dropout_rate);
        attn_out = attn_out.cwiseProduct(lc.drop1);
      }
      lc.res1 = x + attn_out;
      lc.ln1 = layer_norm(lc.res1, lp.ln1_scale, lp.ln1_shift);

      lc.ff_pre = linear(lc.ln1.y, lp.w_ff1, lp.b_ff1);
      lc.h_drop = lc.ff_pre.cwiseMax(0.0);
      if (dropout) {
        lc.drop2 = draw_dropout_mask(drop_rng, t, cfg.ffn_dim,
                                     cfg.dropout_rate);
        lc.h_drop = lc.h_drop.cwiseProduct(lc.drop2);
      }
      lc.res2 = lc.ln1.y + linear(lc.h_drop, lp.w_ff2, lp.b_ff2);
      lc.ln2 = layer_norm(lc.res2, lp.ln2_scale, lp.ln2_shift);
      x = lc.ln2.y;
      if (caches != nullptr) cache.layers.push_back(std::move(lc));
    }

    // Mean over valid tokens only.
    VectorXd pooled = VectorXd::Zero(d);
    int count = 0;
    for (int r = 0; r < t; ++r) {
      if (sample.mask[r]) {
        pooled += x.row(r).transpose();
        ++count;
      }
    }
    pooled /= static_cast<double>(count);
    cache.pooled = pooled;
    cache.valid_count = count;

    out.t_hat.push_back(params.w_trans * pooled + params.b_trans.col(0));
    out.r6_hat.push_back(params.w_rot * pooled + params.b_rot.col(0));
    if (caches != nullptr) caches->push_back(std::move(cache));
  }
  return out;
}

RegressorParams zeros_like(const RegressorParams& params) {
  RegressorParams z = params;
  for (auto& [name, tensor] : z.tensors()) {
    (void)name;
    tensor->setZero();
  }
  return z;
}

}  // namespace

std::vector<std::pair<std::string, Eigen::MatrixXd*>>
RegressorParams::tensors() {
  std::vector<std::pair<std::string, Eigen::MatrixXd*>> out;
  out.emplace_back("w_in", &w_in);
  out.emplace_back("b_in", &b_in);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    EncoderLayerParams& lp = layers[l];
    out.emplace_back(p + "wq", &lp.wq);
    out.emplace_back(p + "bq", &lp.bq);
    out.emplace_back(p + "wk", &lp.wk);
    out.emplace_back(p + "bk", &lp.bk);
    out.emplace_back(p + "wv", &lp.wv);
    out.emplace_back(p + "bv", &lp.bv);
    out.emplace_back(p + "wo", &lp.wo);
    out.emplace_back(p + "bo", &lp.bo);
    out.emplace_back(p + "ln1_scale", &lp.ln1_scale);
    out.emplace_back(p + "ln1_shift", &lp.ln1_shift);
    out.emplace_back(p + "w_ff1", &lp.w_ff1);
    out.emplace_back(p + "b_ff1", &lp.b_ff1);
    out.emplace_back(p + "w_ff2", &lp.w_ff2);
    out.emplace_back(p + "b_ff2", &lp.b_ff2);
    out.emplace_back(p + "ln2_scale", &lp.ln2_scale);
    out.emplace_back(p + "ln2_shift", &lp.ln2_shift);
  }
  out.emplace_back("w_trans", &w_trans);
  out.emplace_back("b_trans", &b_trans);
  out.emplace_back("w_rot", &w_rot);
  out.emplace_back("b_rot", &b_rot);
  return out;
}

std::vector<std::pair<std::string, const Eigen::MatrixXd*>>
RegressorParams::tensors() const {
  auto mutable_view = const_cast<RegressorParams*>(this)->tensors();
  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> out;
  out.reserve(mutable_view.size());
  for (auto& [name, tensor] : mutable_view) out.emplace_back(name, tensor);
  return out;
}

RegressorParams init_params(const RegressorConfig& config, std::uint64_t seed) {
  config.validate();
  const int d = config.model_dim;
  RegressorParams p;
  p.config = config;
  p.w_in.resize(d, config.input_dim);
  p.b_in = MatrixXd::Zero(d, 1);
  p.layers.resize(config.num_layers);
  for (EncoderLayerParams& lp : p.layers) {
    lp.wq.resize(d, d);
    lp.wk.resize(d, d);
    lp.wv.resize(d, d);
    lp.wo.resize(d, d);
    lp.bq = lp.bk = lp.bv = lp.bo = MatrixXd::Zero(d, 1);
    lp.ln1_scale = MatrixXd::Ones(d, 1);
    lp.ln1_shift = MatrixXd::Zero(d, 1);
    lp.w_ff1.resize(config.ffn_dim, d);
    lp.b_ff1 = MatrixXd::Zero(config.ffn_dim, 1);
    lp.w_ff2.resize(d, config.ffn_dim);
    lp.b_ff2 = MatrixXd::Zero(d, 1);
    lp.ln2_scale = MatrixXd::Ones(d, 1);
    lp.ln2_shift = MatrixXd::Zero(d, 1);
  }
  p.w_trans.resize(3, d);
  p.b_trans = MatrixXd::Zero(3, 1);
  p.w_rot.resize(6, d);
  p.b_rot = MatrixXd::Zero(6, 1);

  std::mt19937_64 rng(seed);
  for (auto& [name, tensor] : p.tensors()) {
    // Only weight matrices draw; biases and layer norms keep their
    // deterministic initial values.
    if (name[0] != 'w' && name.find(".w") == std::string::npos) continue;
    const double bound = 1.0 / std::sqrt(static_cast<double>(tensor->cols()));
    std::uniform_real_distribution<double> uni(-bound, bound);
    for (int c = 0; c < tensor->cols(); ++c) {
      for (int r = 0; r < tensor->rows(); ++r) {
        (*tensor)(r, c) = uni(rng);
      }
    }
  }
  return p;
}

std::int64_t param_count(const RegressorParams& params) {
  std::int64_t count = 0;
  for (const auto& [name, tensor] : params.tensors()) {
    (void)name;
    count += tensor->size();
  }
  return count;
}

ForwardOutput forward(const RegressorParams& params, const KeypointBatch& batch,
                      bool train_mode, std::uint64_t dropout_seed) {
  return forward_cached(params, batch, train_mode, dropout_seed, nullptr);
}

PoseLoss pose_loss(const ForwardOutput& pred, const KeypointBatch& batch,
                   double beta) {
  if (pred.t_hat.size() != batch.size() || pred.r6_hat.size() != batch.size() ||
      batch.empty()) {
    throw InvalidInput("pose_loss: prediction/batch size mismatch");
  }
  PoseLoss loss;
  const double b = static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    loss.l_trans +=
        (pred.t_hat[i] - batch[i].gt_translation).squaredNorm() / 3.0;
    loss.l_rot += (pred.r6_hat[i] - batch[i].gt_rotation6d).squaredNorm() / 6.0;
  }
  loss.l_trans /= b;
  loss.l_rot /= b;
  loss.total = loss.l_trans + beta * loss.l_rot;
  return loss;
}

RegressorParams backward(const RegressorParams& params,
                         const KeypointBatch& batch, double beta,
                         PoseLoss* loss_out, bool train_mode,
                         std::uint64_t dropout_seed) {
  std::vector<SampleCache> caches;
  const ForwardOutput pred =
      forward_cached(params, batch, train_mode, dropout_seed, &caches);
  const PoseLoss loss = pose_loss(pred, batch, beta);
  if (loss_out != nullptr) *loss_out = loss;

  const RegressorConfig& cfg = params.config;
  const int d = cfg.model_dim;
  const int heads = cfg.num_heads;
  const int dh = d / heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const double b_count = static_cast<double>(batch.size());

  RegressorParams grads = zeros_like(params);

  for (std::size_t s = 0; s < batch.size(); ++s) {
    const KeypointSample& sample = batch[s];
    const SampleCache& cache = caches[s];
    const int t = static_cast<int>(sample.tokens.rows());

    const Eigen::Vector3d dt =
        2.0 * (pred.t_hat[s] - sample.gt_translation) / (3.0 * b_count);
    const Rotation6d dr =
        beta * 2.0 * (pred.r6_hat[s] - sample.gt_rotation6d) / (6.0 * b_count);

    grads.w_trans += dt * cache.pooled.transpose();
    grads.b_trans.col(0) += dt;
    grads.w_rot += dr * cache.pooled.transpose();
    grads.b_rot.col(0) += dr;

    const VectorXd d_pooled =
        params.w_trans.transpose() * dt + params.w_rot.transpose() * dr;
    MatrixXd dx = MatrixXd::Zero(t, d);
    for (int r = 0; r < t; ++r) {
      if (sample.mask[r]) {
        dx.row(r) = d_pooled.transpose() / cache.valid_count;
      }
    }

    for (int l = cfg.num_layers - 1; l >= 0; --l) {
      const EncoderLayerParams& lp = params.layers[l];
      EncoderLayerParams& gl = grads.layers[l];
      const LayerCache& lc = cache.layers[l];

      const MatrixXd d_res2 = layer_norm_backward(dx, lc.ln2, lp.ln2_scale,
                                                  gl.ln2_scale, gl.ln2_shift);
      MatrixXd d_y1 = d_res2;  // residual branch
      const MatrixXd& d_ffout = d_res2;

      gl.w_ff2 += d_ffout.transpose() * lc.h_drop;
      gl.b_ff2.col(0) += d_ffout.colwise().sum().transpose();
      MatrixXd d_h = d_ffout * lp.w_ff2;
      if (lc.drop2.size() > 0) d_h = d_h.cwiseProduct(lc.drop2);
      const MatrixXd d_ffpre =
          d_h.cwiseProduct((lc.ff_pre.array() > 0.0).cast<double>().matrix());
      gl.w_ff1 += d_ffpre.transpose() * lc.ln1.y;
      gl.b_ff1.col(0) += d_ffpre.colwise().sum().transpose();
      d_y1 += d_ffpre * lp.w_ff1;

      const MatrixXd d_res1 = layer_norm_backward(d_y1, lc.ln1, lp.ln1_scale,
                                                  gl.ln1_scale, gl.ln1_shift);
      MatrixXd d_x_next = d_res1;  // residual branch to the layer input
      MatrixXd d_attnout = d_res1;
      if (lc.drop1.size() > 0) d_attnout = d_attnout.cwiseProduct(lc.drop1);

      gl.wo += d_attnout.transpose() * lc.headcat;
      gl.bo.col(0) += d_attnout.colwise().sum().transpose();
      const MatrixXd d_headcat = d_attnout * lp.wo;

      MatrixXd dq(t, d), dk(t, d), dv(t, d);
      for (int h = 0; h < heads; ++h) {
        const auto qh = lc.q.middleCols(h * dh, dh);
        const auto kh = lc.k.middleCols(h * dh, dh);
        const auto vh = lc.v.middleCols(h * dh, dh);
        const MatrixXd& a = lc.attn[h];
        const auto d_oh = d_headcat.middleCols(h * dh, dh);

        const MatrixXd d_a = d_oh * vh.transpose();
        dv.middleCols(h * dh, dh) = a.transpose() * d_oh;
        MatrixXd d_scores(t, t);
        for (int r = 0; r < t; ++r) {
          const double dot = d_a.row(r).dot(a.row(r));
          d_scores.row(r) =
              a.row(r).array() * (d_a.row(r).array() - dot);
        }
        dq.middleCols(h * dh, dh) = d_scores * kh * att_scale;
        dk.middleCols(h * dh, dh) = d_scores.transpose() * qh * att_scale;
      }

      gl.wq += dq.transpose() * lc.x;
      gl.bq.col(0) += dq.colwise().sum().transpose();
      gl.wk += dk.transpose() * lc.x;
      gl.bk.col(0) += dk.colwise().sum().transpose();
      gl.wv += dv.transpose() * lc.x;
      gl.bv.col(0) += dv.colwise().sum().transpose();
      d_x_next += dq * lp.wq + dk * lp.wk + dv * lp.wv;
      dx = std::move(d_x_next);
    }

    grads.w_in += dx.transpose() * sample.tokens;
    grads.b_in.col(0) += dx.colwise().sum().transpose();
  }
  return grads;
}

AdamState make_adam_state(const RegressorParams& params) {
  AdamState state;
  for (const auto& [name, tensor] : params.tensors()) {
    (void)name;
    state.m.push_back(MatrixXd::Zero(tensor->rows(), tensor->cols()));
    state.v.push_back(MatrixXd::Zero(tensor->rows(), tensor->cols()));
  }
  return state;
}

std::vector<TrainRecord> train(RegressorParams& params,
                               const std::vector<KeypointSample>& dataset,
                               const TrainConfig& config, AdamState& state) {
  config.validate();
  if (dataset.empty()) {
    throw InvalidInput("train: dataset is empty");
  }
  auto tensors = params.tensors();
  if (state.m.empty()) state = make_adam_state(params);
  if (state.m.size() != tensors.size()) {
    throw InvalidInput("train: Adam state does not match parameter shapes");
  }

  std::vector<TrainRecord> records;
  const int n = static_cast<int>(dataset.size());
  for (int step = state.step; step < config.steps; ++step) {
    // Per-step RNG keeps data order and dropout independent of how the
    // run is split across resumes.
    std::mt19937_64 batch_rng(mix_seed(config.seed, 2 * step));
    const std::uint64_t dropout_seed = mix_seed(config.seed, 2 * step + 1);

    KeypointBatch batch;
    batch.reserve(config.batch_size);
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int i = 0; i < config.batch_size; ++i) {
      batch.push_back(dataset[pick(batch_rng)]);
    }

    PoseLoss loss;
    const RegressorParams grads =
        backward(params, batch, config.beta, &loss,
                 params.config.dropout_rate > 0.0, dropout_seed);
    if (!std::isfinite(loss.total)) {
      throw EstimationError("NonFiniteLoss at step " + std::to_string(step));
    }

    auto grad_tensors = const_cast<RegressorParams&>(grads).tensors();
    const double t = static_cast<double>(step + 1);
    const double bc1 = 1.0 - std::pow(config.adam_beta1, t);
    const double bc2 = 1.0 - std::pow(config.adam_beta2, t);
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      MatrixXd& w = *tensors[i].second;
      const MatrixXd& g = *grad_tensors[i].second;
      // Decoupled weight decay, applied directly to the weights.
      w -= config.learning_rate * config.weight_decay * w;
      state.m[i] = config.adam_beta1 * state.m[i] + (1.0 - config.adam_beta1) * g;
      state.v[i] = config.adam_beta2 * state.v[i] +
                   (1.0 - config.adam_beta2) * g.cwiseProduct(g);
      const MatrixXd m_hat = state.m[i] / bc1;
      const MatrixXd v_hat = state.v[i] / bc2;
      w -= config.learning_rate *
           m_hat.cwiseQuotient(
               (v_hat.cwiseSqrt().array() + config.adam_eps).matrix());
    }
    state.step = step + 1;
    records.push_back({step, loss.total, loss.l_trans, loss.l_rot});
  }
  return records;
}

KeypointSample make_sample(const MatchSet& matches,
                           const CoordNormalizer& normalizer) {
  matches.validate();
  if (matches.size() == 0) {
    throw InvalidInput("make_sample: match set is empty");
  }
  const int n = static_cast<int>(matches.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (matches.confidence[a] != matches.confidence[b]) {
      return matches.confidence[a] > matches.confidence[b];
    }
    if (matches.kpts0[a].x() != matches.kpts0[b].x()) {
      return matches.kpts0[a].x() < matches.kpts0[b].x();
    }
    return matches.kpts0[a].y() < matches.kpts0[b].y();
  });

  KeypointSample sample;
  sample.tokens.resize(n, 4);
  sample.mask.assign(n, true);
  for (int i = 0; i < n; ++i) {
    const int j = order[i];
    sample.tokens(i, 0) = normalizer.nx(matches.kpts0[j].x());
    sample.tokens(i, 1) = normalizer.ny(matches.kpts0[j].y());
    sample.tokens(i, 2) = normalizer.nx(matches.kpts1[j].x());
    sample.tokens(i, 3) = normalizer.ny(matches.kpts1[j].y());
  }
  return sample;
}

Pose predict_relative_pose(const RegressorParams& params,
                           const MatchSet& matches,
                           const CoordNormalizer& normalizer) {
  const KeypointBatch batch{make_sample(matches, normalizer)};
  const ForwardOutput out = forward(params, batch);
  Pose pose;
  pose.rotation = r6_to_rotmat(out.r6_hat[0]);
  pose.translation = out.t_hat[0];
  return pose;
}

namespace {

nlohmann::json config_to_json(const RegressorConfig& cfg) {
  return {{"input_dim", cfg.input_dim},   {"model_dim", cfg.model_dim},
          {"ffn_dim", cfg.ffn_dim},       {"num_layers", cfg.num_layers},
          {"num_heads", cfg.num_heads},   {"dropout_rate", cfg.dropout_rate},
          {"max_seq_len", cfg.max_seq_len}};
}

RegressorConfig config_from_json(const nlohmann::json& j) {
  RegressorConfig cfg;
  cfg.input_dim = j.at("input_dim");
  cfg.model_dim = j.at("model_dim");
  cfg.ffn_dim = j.at("ffn_dim");
  cfg.num_layers = j.at("num_layers");
  cfg.num_heads = j.at("num_heads");
  cfg.dropout_rate = j.at("dropout_rate");
  cfg.max_seq_len = j.at("max_seq_len");
  return cfg;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  auto tensors = const_cast<RegressorParams&>(ckpt.params).tensors();

  std::vector<std::pair<std::string, const MatrixXd*>> blobs;
  for (const auto& [name, tensor] : tensors) blobs.emplace_back(name, tensor);
  if (ckpt.has_train_state) {
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      blobs.emplace_back("adam.m." + tensors[i].first, &ckpt.adam.m[i]);
    }
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      blobs.emplace_back("adam.v." + tensors[i].first, &ckpt.adam.v[i]);
    }
  }

  nlohmann::json manifest = nlohmann::json::array();
  std::int64_t offset = 0;
  for (const auto& [name, tensor] : blobs) {
    manifest.push_back({{"name", name},
                        {"shape", {tensor->rows(), tensor->cols()}},
                        {"offset", offset}});
    offset += tensor->size() * static_cast<std::int64_t>(sizeof(double));
  }
  nlohmann::json header = {
      {"format_version", 1},
      {"config", config_to_json(ckpt.params.config)},
      {"normalizer",
       {{"width", ckpt.normalizer.width}, {"height", ckpt.normalizer.height}}},
      {"tensors", manifest}};
  if (ckpt.has_train_state) {
    header["train_state"] = {{"step", ckpt.adam.step}};
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("save_checkpoint: cannot open " + path);
  }
  out << header.dump() << '\n';
  for (const auto& [name, tensor] : blobs) {
    // Eigen default storage is column-major; serialize as-is.
    out.write(reinterpret_cast<const char*>(tensor->data()),
              tensor->size() * static_cast<std::streamsize>(sizeof(double)));
  }
  if (!out) {
    throw IoError("save_checkpoint: write failed for " + path);
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("load_checkpoint: cannot open " + path);
  }
  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw IoError("load_checkpoint: missing header line");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_line);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("load_checkpoint: bad header: ") + e.what());
  }
  if (header.at("format_version").get<int>() != 1) {
    throw IoError("load_checkpoint: unsupported format version");
  }

  Checkpoint ckpt;
  ckpt.params = init_params(config_from_json(header.at("config")), 0);
  ckpt.normalizer.width = header.at("normalizer").at("width");
  ckpt.normalizer.height = header.at("normalizer").at("height");
  ckpt.has_train_state = header.contains("train_state");
  if (ckpt.has_train_state) {
    ckpt.adam = make_adam_state(ckpt.params);
    ckpt.adam.step = header.at("train_state").at("step");
  }

  const std::streampos data_start = in.tellg();
  auto tensors = ckpt.params.tensors();
  auto read_blob = [&](const nlohmann::json& entry, MatrixXd& dst) {
    const auto shape = entry.at("shape");
    if (dst.rows() != shape[0].get<std::int64_t>() ||
        dst.cols() != shape[1].get<std::int64_t>()) {
      throw IoError("load_checkpoint: shape mismatch for tensor " +
                    entry.at("name").get<std::string>());
    }
    in.seekg(data_start + std::streampos(entry.at("offset").get<std::int64_t>()));
    in.read(reinterpret_cast<char*>(dst.data()),
            dst.size() * static_cast<std::streamsize>(sizeof(double)));
    if (!in) {
      throw IoError("load_checkpoint: truncated tensor data");
    }
  };

  for (const auto& entry : header.at("tensors")) {
    const std::string name = entry.at("name");
    if (name.rfind("adam.m.", 0) == 0 || name.rfind("adam.v.", 0) == 0) {
      if (!ckpt.has_train_state) {
        throw IoError("load_checkpoint: optimizer tensors without train_state");
      }
      const bool is_m = name.rfind("adam.m.", 0) == 0;
      const std::string base = name.substr(7);
      bool found = false;
      for (std::size_t i = 0; i < tensors.size(); ++i) {
        if (tensors[i].first == base) {
          read_blob(entry, is_m ? ckpt.adam.m[i] : ckpt.adam.v[i]);
          found = true;
          break;
        }
      }
      if (!found) {
        throw IoError("load_checkpoint: unknown optimizer tensor " + name);
      }
      continue;
    }
    bool found = false;
    for (auto& [tname, tensor] : tensors) {
      if (tname == name) {
        read_blob(entry, *tensor);
        found = true;
        break;
      }
    }
    if (!found) {
      throw IoError("load_checkpoint: unknown tensor " + name);
    }
  }
  return ckpt;
}

}  // namespace forestvo
