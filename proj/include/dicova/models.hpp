// Copyright 2026 The dicova-bench Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Frame-level baseline classifiers (logistic regression, a one-hidden-layer
// tanh perceptron, and a Gini random forest) together with recording-level
// and fold-ensemble scoring.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dicova/common.hpp"
#include "dicova/corpus.hpp"
#include "dicova/features.hpp"

namespace dicova {

inline constexpr std::size_t kHiddenUnits = 25;

enum class ModelKind { kLr, kMlp, kRf };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kLr: return "lr";
    case ModelKind::kMlp: return "mlp";
    case ModelKind::kRf: return "rf";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "lr") return ModelKind::kLr;
  if (s == "mlp") return ModelKind::kMlp;
  if (s == "rf") return ModelKind::kRf;
  throw Error(ErrorCode::kInvalidArgument, "unknown model kind \"" + std::string(s) + "\"");
}

enum class ClassWeighting { kInverseFrequency, kNone };

struct TrainConfig {
  std::size_t epochs = 25;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double l2_lr = 0.01;
  double l2_mlp = 0.001;
  ClassWeighting class_weighting = ClassWeighting::kInverseFrequency;
  std::size_t batch_size = 256;
  std::size_t n_trees = 50;
  std::uint64_t seed = 1;

  void validate() const {
    if (epochs == 0 || batch_size == 0 || n_trees == 0 || !(learning_rate > 0.0) ||
        l2_lr < 0.0 || l2_mlp < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "invalid training configuration");
    }
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Frames pooled across recordings; every frame inherits its recording's label.
struct FrameDataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> groups;

  std::size_t size() const noexcept { return labels.size(); }

  void add_recording(const FeatureMatrix& fm, Label label) {
    for (std::size_t t = 0; t < fm.values.rows(); ++t) {
      features.append_row(fm.values.row(t));
      labels.push_back(label == Label::kCovid ? 1 : 0);
      groups.push_back(fm.recording_id);
    }
  }

  std::size_t count_positive() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  }
};

inline void require_both_classes(const FrameDataset& ds) {
  if (ds.size() == 0) throw Error(ErrorCode::kEmptyInput, "empty training set");
  const std::size_t pos = ds.count_positive();
  if (pos == 0 || pos == ds.size()) {
    throw Error(ErrorCode::kSingleClass, "training frames contain a single class");
  }
}

// Per-frame loss weights. Inverse frequency makes both classes carry equal
// total weight, the loss-side equivalent of oversampling the minority class.
inline std::vector<double> class_weights(std::span<const int> labels, ClassWeighting mode) {
  std::vector<double> w(labels.size(), 1.0);
  if (mode == ClassWeighting::kNone) return w;
  const double n = static_cast<double>(labels.size());
  const double pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double neg = n - pos;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    w[i] = labels[i] == 1 ? n / (2.0 * pos) : n / (2.0 * neg);
  }
  return w;
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// -[y log s(z) + (1-y) log(1-s(z))] without overflow.
inline double bce_with_logit(double z, int y) {
  const double softplus = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
  return softplus - (y == 1 ? z : 0.0);
}

// ---------------------------------------------------------------------------
// Models

struct LrModel {
  std::vector<double> weights = std::vector<double>(kFeatureDim, 0.0);
  double bias = 0.0;
  TrainConfig config;

  std::size_t input_dim() const noexcept { return weights.size(); }

  double logit(std::span<const double> x) const {
    double z = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * x[j];
    return z;
  }
  double predict(std::span<const double> x) const { return sigmoid(logit(x)); }

  std::vector<double> params() const {
    std::vector<double> p = weights;
    p.push_back(bias);
    return p;
  }
  void set_params(std::span<const double> p) {
    std::copy(p.begin(), p.end() - 1, weights.begin());
    bias = p.back();
  }

  friend bool operator==(const LrModel&, const LrModel&) = default;
};

struct MlpModel {
  Matrix hidden_weights = Matrix(kFeatureDim, kHiddenUnits);  // input x hidden
  std::vector<double> hidden_bias = std::vector<double>(kHiddenUnits, 0.0);
  std::vector<double> out_weights = std::vector<double>(kHiddenUnits, 0.0);
  double out_bias = 0.0;
  TrainConfig config;

  std::size_t input_dim() const noexcept { return hidden_weights.rows(); }

  double forward(std::span<const double> x, std::span<double> hidden) const {
    const std::size_t d = hidden_weights.rows();
    for (std::size_t k = 0; k < kHiddenUnits; ++k) hidden[k] = hidden_bias[k];
    for (std::size_t j = 0; j < d; ++j) {
      const double xj = x[j];
      if (xj == 0.0) continue;
      const auto wrow = hidden_weights.row(j);
      for (std::size_t k = 0; k < kHiddenUnits; ++k) hidden[k] += xj * wrow[k];
    }
    double z = out_bias;
    for (std::size_t k = 0; k < kHiddenUnits; ++k) {
      hidden[k] = std::tanh(hidden[k]);
      z += out_weights[k] * hidden[k];
    }
    return z;
  }
  double predict(std::span<const double> x) const {
    double hidden[kHiddenUnits];
    return sigmoid(forward(x, hidden));
  }

  // Layout: hidden weights (row-major), hidden bias, output weights, output bias.
  std::vector<double> params() const {
    std::vector<double> p(hidden_weights.data());
    p.insert(p.end(), hidden_bias.begin(), hidden_bias.end());
    p.insert(p.end(), out_weights.begin(), out_weights.end());
    p.push_back(out_bias);
    return p;
  }
  void set_params(std::span<const double> p) {
    std::size_t i = 0;
    for (std::size_t r = 0; r < hidden_weights.rows(); ++r) {
      for (std::size_t c = 0; c < kHiddenUnits; ++c) hidden_weights(r, c) = p[i++];
    }
    for (auto& b : hidden_bias) b = p[i++];
    for (auto& w : out_weights) w = p[i++];
    out_bias = p[i];
  }

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // positive-class fraction at a leaf

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                          : n.right);
    }
    return nodes[i].value;
  }

  std::size_t depth() const {
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 1}};
    std::size_t best = 0;
    while (!stack.empty()) {
      auto [i, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      if (!nodes[i].is_leaf()) {
        stack.push_back({static_cast<std::size_t>(nodes[i].left), d + 1});
        stack.push_back({static_cast<std::size_t>(nodes[i].right), d + 1});
      }
    }
    return best;
  }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct RfModel {
  std::vector<DecisionTree> trees;
  std::size_t n_features = kFeatureDim;
  std::uint64_t seed = 0;
  TrainConfig config;

  std::size_t input_dim() const noexcept { return n_features; }

  double predict(std::span<const double> x) const {
    double acc = 0.0;
    for (const auto& t : trees) acc += t.predict(x);
    return acc / static_cast<double>(trees.size());
  }

  friend bool operator==(const RfModel&, const RfModel&) = default;
};

using Model = std::variant<LrModel, MlpModel, RfModel>;

inline ModelKind kind_of(const Model& m) { return static_cast<ModelKind>(m.index()); }

// ---------------------------------------------------------------------------
// Objectives: sum_i c_i l_i / sum_i c_i + lambda ||W||^2 over the given rows.
// Biases are not regularized.

struct Objective {
  double loss = 0.0;
  std::vector<double> grad;
};

inline Objective lr_objective(const LrModel& model, const Matrix& x, std::span<const int> y,
                              std::span<const double> weight, std::span<const std::size_t> rows,
                              double l2) {
  const std::size_t d = model.input_dim();
  Objective out;
  out.grad.assign(d + 1, 0.0);
  double wsum = 0.0;
  for (std::size_t r : rows) wsum += weight[r];
  for (std::size_t r : rows) {
    const auto xr = x.row(r);
    const double z = model.logit(xr);
    const double c = weight[r] / wsum;
    out.loss += c * bce_with_logit(z, y[r]);
    const double dz = c * (sigmoid(z) - y[r]);
    for (std::size_t j = 0; j < d; ++j) out.grad[j] += dz * xr[j];
    out.grad[d] += dz;
  }
  for (std::size_t j = 0; j < d; ++j) {
    out.loss += l2 * model.weights[j] * model.weights[j];
    out.grad[j] += 2.0 * l2 * model.weights[j];
  }
  return out;
}

inline Objective mlp_objective(const MlpModel& model, const Matrix& x, std::span<const int> y,
                               std::span<const double> weight, std::span<const std::size_t> rows,
                               double l2) {
  const std::size_t d = model.input_dim();
  const std::size_t h = kHiddenUnits;
  const std::size_t off_b1 = d * h, off_w2 = off_b1 + h, off_b2 = off_w2 + h;
  Objective out;
  out.grad.assign(off_b2 + 1, 0.0);
  double wsum = 0.0;
  for (std::size_t r : rows) wsum += weight[r];
  double hidden[kHiddenUnits];
  double da[kHiddenUnits];
  for (std::size_t r : rows) {
    const auto xr = x.row(r);
    const double z = model.forward(xr, hidden);
    const double c = weight[r] / wsum;
    out.loss += c * bce_with_logit(z, y[r]);
    const double dz = c * (sigmoid(z) - y[r]);
    for (std::size_t k = 0; k < h; ++k) {
      out.grad[off_w2 + k] += dz * hidden[k];
      da[k] = dz * model.out_weights[k] * (1.0 - hidden[k] * hidden[k]);
      out.grad[off_b1 + k] += da[k];
    }
    out.grad[off_b2] += dz;
    for (std::size_t j = 0; j < d; ++j) {
      const double xj = xr[j];
      if (xj == 0.0) continue;
      double* g = out.grad.data() + j * h;
      for (std::size_t k = 0; k < h; ++k) g[k] += da[k] * xj;
    }
  }
  const auto& w1 = model.hidden_weights.data();
  for (std::size_t i = 0; i < w1.size(); ++i) {
    out.loss += l2 * w1[i] * w1[i];
    out.grad[i] += 2.0 * l2 * w1[i];
  }
  for (std::size_t k = 0; k < h; ++k) {
    out.loss += l2 * model.out_weights[k] * model.out_weights[k];
    out.grad[off_w2 + k] += 2.0 * l2 * model.out_weights[k];
  }
  return out;
}

class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t n_params, const TrainConfig& cfg)
      : cfg_(cfg), m_(n_params, 0.0), v_(n_params, 0.0) {}

  void step(std::vector<double>& params, std::span<const double> grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
      const double mhat = m_[i] / c1;
      const double vhat = v_[i] / c2;
      params[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
    }
  }

 private:
  TrainConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

namespace train_detail {

// Shared mini-batch loop for the gradient-trained models.
template <typename ModelT, typename ObjectiveFn>
void run_adam(ModelT& model, const FrameDataset& ds, const TrainConfig& cfg, double l2,
              Rng& rng, ObjectiveFn objective) {
  const auto weights = class_weights(ds.labels, cfg.class_weighting);
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto params = model.params();
  AdamOptimizer adam(params.size(), cfg);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      const Objective obj = objective(model, ds.features, ds.labels, weights, rows, l2);
      adam.step(params, obj.grad);
      model.set_params(params);
    }
  }
}

}  // namespace train_detail

inline LrModel train_lr(const FrameDataset& ds, const TrainConfig& cfg = {}) {
  cfg.validate();
  require_both_classes(ds);
  LrModel model;
  model.weights.assign(ds.features.cols(), 0.0);
  model.config = cfg;
  Rng rng(cfg.seed);
  train_detail::run_adam(model, ds, cfg, cfg.l2_lr, rng, lr_objective);
  return model;
}

// Symmetric uniform initialization with bound 1/sqrt(fan_in).
inline MlpModel init_mlp(std::size_t input_dim, Rng& rng) {
  MlpModel model;
  model.hidden_weights = Matrix(input_dim, kHiddenUnits);
  const double b1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(kHiddenUnits));
  for (std::size_t j = 0; j < input_dim; ++j) {
    for (std::size_t k = 0; k < kHiddenUnits; ++k) model.hidden_weights(j, k) = rng.uniform(-b1, b1);
  }
  for (auto& b : model.hidden_bias) b = rng.uniform(-b1, b1);
  for (auto& w : model.out_weights) w = rng.uniform(-b2, b2);
  model.out_bias = rng.uniform(-b2, b2);
  return model;
}

inline MlpModel train_mlp(const FrameDataset& ds, const TrainConfig& cfg = {}) {
  cfg.validate();
  require_both_classes(ds);
  Rng rng(cfg.seed);
  MlpModel model = init_mlp(ds.features.cols(), rng);
  model.config = cfg;
  train_detail::run_adam(model, ds, cfg, cfg.l2_mlp, rng, mlp_objective);
  return model;
}

// Gini impurity 1 - sum p^2 of a two-class node.
inline double gini(double pos, double neg) {
  const double n = pos + neg;
  if (n <= 0.0) return 0.0;
  const double p = pos / n, q = neg / n;
  return 1.0 - p * p - q * q;
}

namespace rf_detail {

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  // sum over children of n_child * gini_child / 2; lower is better
  double score = 0.0;
};

class TreeGrower {
 public:
  TreeGrower(const FrameDataset& ds, std::size_t max_features, Rng& rng)
      : ds_(ds), max_features_(max_features), rng_(rng) {}

  DecisionTree grow(std::vector<std::size_t> sample) {
    DecisionTree tree;
    idx_ = std::move(sample);
    struct Work {
      std::size_t node, begin, end;
    };
    tree.nodes.emplace_back();
    std::vector<Work> stack{{0, 0, idx_.size()}};
    std::vector<int> features(ds_.features.cols());
    while (!stack.empty()) {
      const Work w = stack.back();
      stack.pop_back();
      const std::size_t n = w.end - w.begin;
      std::size_t pos = 0;
      for (std::size_t i = w.begin; i < w.end; ++i) pos += static_cast<std::size_t>(ds_.labels[idx_[i]]);
      const double value = static_cast<double>(pos) / static_cast<double>(n);
      if (pos == 0 || pos == n || n < 2) {
        tree.nodes[w.node].value = value;
        continue;
      }
      const SplitCandidate best = find_split(w.begin, w.end, features);
      if (best.feature < 0) {
        tree.nodes[w.node].value = value;
        continue;
      }
      const auto mid_it = std::partition(
          idx_.begin() + static_cast<std::ptrdiff_t>(w.begin),
          idx_.begin() + static_cast<std::ptrdiff_t>(w.end), [&](std::size_t r) {
            return ds_.features(r, static_cast<std::size_t>(best.feature)) <= best.threshold;
          });
      const auto mid = static_cast<std::size_t>(mid_it - idx_.begin());
      const auto left = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[w.node];
      node.feature = best.feature;
      node.threshold = best.threshold;
      node.left = left;
      node.right = left + 1;
      node.value = value;
      stack.push_back({static_cast<std::size_t>(left + 1), mid, w.end});
      stack.push_back({static_cast<std::size_t>(left), w.begin, mid});
    }
    return tree;
  }

 private:
  // Draws features without replacement until max_features of them vary
  // within the node (constant features do not count toward the budget).
  SplitCandidate find_split(std::size_t begin, std::size_t end, std::vector<int>& features) {
    std::iota(features.begin(), features.end(), 0);
    SplitCandidate best;
    best.score = std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;
    const std::size_t n = end - begin;
    double total_pos = 0.0;
    for (std::size_t i = begin; i < end; ++i) total_pos += ds_.labels[idx_[i]];
    for (std::size_t drawn = 0; drawn < features.size() && evaluated < max_features_; ++drawn) {
      const std::size_t pick = drawn + rng_.below(features.size() - drawn);
      std::swap(features[drawn], features[pick]);
      const auto f = static_cast<std::size_t>(features[drawn]);

      scratch_.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = idx_[begin + i];
        scratch_[i] = {ds_.features(r, f), ds_.labels[r]};
      }
      std::sort(scratch_.begin(), scratch_.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (scratch_.front().first == scratch_.back().first) continue;
      ++evaluated;

      double left_pos = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_pos += scratch_[i].second;
        if (scratch_[i].first == scratch_[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = static_cast<double>(n) - nl;
        const double right_pos = total_pos - left_pos;
        const double score =
            left_pos * (nl - left_pos) / nl + right_pos * (nr - right_pos) / nr;
        if (score < best.score) {
          double thr = 0.5 * (scratch_[i].first + scratch_[i + 1].first);
          if (!(thr < scratch_[i + 1].first)) thr = scratch_[i].first;
          best = {static_cast<int>(f), thr, score};
        }
      }
    }
    return best;
  }

  const FrameDataset& ds_;
  std::size_t max_features_;
  Rng& rng_;
  std::vector<std::size_t> idx_;
  std::vector<std::pair<double, int>> scratch_;
};

}  // namespace rf_detail

// Bootstrap over frames, sqrt(d) candidate features per split, grown until
// pure or fewer than two samples.
inline RfModel train_rf(const FrameDataset& ds, const TrainConfig& cfg = {}) {
  cfg.validate();
  require_both_classes(ds);
  RfModel model;
  model.n_features = ds.features.cols();
  model.seed = cfg.seed;
  model.config = cfg;
  const auto max_features = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(model.n_features)))));
  const std::size_t m = ds.size();
  for (std::size_t t = 0; t < cfg.n_trees; ++t) {
    Rng rng(cfg.seed * 0x9e3779b97f4a7c15ULL + t + 1);
    std::vector<std::size_t> sample(m);
    for (auto& s : sample) s = rng.below(m);
    rf_detail::TreeGrower grower(ds, max_features, rng);
    model.trees.push_back(grower.grow(std::move(sample)));
  }
  return model;
}

inline Model train_model(ModelKind kind, const FrameDataset& ds, const TrainConfig& cfg = {}) {
  switch (kind) {
    case ModelKind::kLr: return train_lr(ds, cfg);
    case ModelKind::kMlp: return train_mlp(ds, cfg);
    case ModelKind::kRf: return train_rf(ds, cfg);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown model kind");
}

// ---------------------------------------------------------------------------
// Inference

inline std::size_t input_dim(const Model& m) {
  return std::visit([](const auto& x) { return x.input_dim(); }, m);
}

inline std::vector<double> predict_frame_scores(const Model& model, const Matrix& features) {
  const std::size_t d = input_dim(model);
  if (features.rows() > 0 && features.cols() != d) {
    throw Error(ErrorCode::kWidthMismatch, "feature width " + std::to_string(features.cols()) +
                                               " does not match model input " + std::to_string(d));
  }
  std::vector<double> scores(features.rows());
  std::visit(
      [&](const auto& m) {
        for (std::size_t t = 0; t < features.rows(); ++t) scores[t] = m.predict(features.row(t));
      },
      model);
  return scores;
}

// Mean of the frame-level probabilities.
inline double score_recording(const Model& model, const Matrix& features) {
  if (features.rows() == 0) throw Error(ErrorCode::kEmptyInput, "recording has no frames");
  const auto scores = predict_frame_scores(model, features);
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

// Mean over fold models of the recording-level score.
inline double ensemble_score(std::span<const Model> models, const Matrix& features) {
  if (models.empty()) throw Error(ErrorCode::kEmptyInput, "empty model list");
  const ModelKind kind = kind_of(models.front());
  double acc = 0.0;
  for (const auto& m : models) {
    if (kind_of(m) != kind) {
      throw Error(ErrorCode::kInvalidArgument, "ensemble mixes model kinds");
    }
    acc += score_recording(m, features);
  }
  return acc / static_cast<double>(models.size());
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"adam_eps", c.adam_eps},
          {"l2_lr", c.l2_lr},
          {"l2_mlp", c.l2_mlp},
          {"class_weighting",
           c.class_weighting == ClassWeighting::kNone ? "none" : "inverse_frequency"},
          {"batch_size", c.batch_size},
          {"n_trees", c.n_trees},
          {"seed", c.seed}};
}

inline TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  c.l2_lr = j.at("l2_lr").get<double>();
  c.l2_mlp = j.at("l2_mlp").get<double>();
  c.class_weighting = j.at("class_weighting").get<std::string>() == "none"
                          ? ClassWeighting::kNone
                          : ClassWeighting::kInverseFrequency;
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.n_trees = j.at("n_trees").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

inline nlohmann::json model_to_json(const Model& model) {
  nlohmann::json j;
  j["format"] = "dicova-model";
  j["version"] = kModelFormatVersion;
  j["kind"] = to_string(kind_of(model));
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        j["config"] = config_to_json(m.config);
        j["seed"] = m.config.seed;
        j["input_dim"] = m.input_dim();
        if constexpr (std::is_same_v<T, LrModel>) {
          j["params"] = {{"weights", m.weights}, {"bias", m.bias}};
        } else if constexpr (std::is_same_v<T, MlpModel>) {
          j["params"] = {{"hidden_weights", m.hidden_weights.data()},
                         {"hidden_bias", m.hidden_bias},
                         {"out_weights", m.out_weights},
                         {"out_bias", m.out_bias}};
        } else {
          j["seed"] = m.seed;
          nlohmann::json trees = nlohmann::json::array();
          for (const auto& t : m.trees) {
            nlohmann::json f = nlohmann::json::array(), thr = nlohmann::json::array(),
                           l = nlohmann::json::array(), r = nlohmann::json::array(),
                           v = nlohmann::json::array();
            for (const auto& n : t.nodes) {
              f.push_back(n.feature);
              thr.push_back(n.threshold);
              l.push_back(n.left);
              r.push_back(n.right);
              v.push_back(n.value);
            }
            trees.push_back(
                {{"feature", f}, {"threshold", thr}, {"left", l}, {"right", r}, {"value", v}});
          }
          j["params"] = {{"trees", trees}};
        }
      },
      model);
  return j;
}

inline Model model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "dicova-model") {
      throw Error(ErrorCode::kParse, "not a dicova model file");
    }
    if (j.at("version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorCode::kParse, "unsupported model format version");
    }
    const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
    const TrainConfig cfg = config_from_json(j.at("config"));
    const auto dim = j.at("input_dim").get<std::size_t>();
    const auto& p = j.at("params");
    switch (kind) {
      case ModelKind::kLr: {
        LrModel m;
        m.config = cfg;
        m.weights = p.at("weights").get<std::vector<double>>();
        m.bias = p.at("bias").get<double>();
        if (m.weights.size() != dim) throw Error(ErrorCode::kParse, "weight count mismatch");
        return m;
      }
      case ModelKind::kMlp: {
        MlpModel m;
        m.config = cfg;
        const auto w1 = p.at("hidden_weights").get<std::vector<double>>();
        if (w1.size() != dim * kHiddenUnits) throw Error(ErrorCode::kParse, "hidden weight count mismatch");
        m.hidden_weights = Matrix(dim, kHiddenUnits);
        for (std::size_t i = 0; i < w1.size(); ++i) m.hidden_weights(i / kHiddenUnits, i % kHiddenUnits) = w1[i];
        m.hidden_bias = p.at("hidden_bias").get<std::vector<double>>();
        m.out_weights = p.at("out_weights").get<std::vector<double>>();
        m.out_bias = p.at("out_bias").get<double>();
        if (m.hidden_bias.size() != kHiddenUnits || m.out_weights.size() != kHiddenUnits) {
          throw Error(ErrorCode::kParse, "hidden layer must have 25 units");
        }
        return m;
      }
      case ModelKind::kRf: {
        RfModel m;
        m.config = cfg;
        m.seed = j.at("seed").get<std::uint64_t>();
        m.n_features = dim;
        for (const auto& jt : p.at("trees")) {
          DecisionTree t;
          const auto f = jt.at("feature").get<std::vector<int>>();
          const auto thr = jt.at("threshold").get<std::vector<double>>();
          const auto l = jt.at("left").get<std::vector<int>>();
          const auto r = jt.at("right").get<std::vector<int>>();
          const auto v = jt.at("value").get<std::vector<double>>();
          if (f.empty() || thr.size() != f.size() || l.size() != f.size() ||
              r.size() != f.size() || v.size() != f.size()) {
            throw Error(ErrorCode::kParse, "inconsistent tree arrays");
          }
          const int n = static_cast<int>(f.size());
          for (int i = 0; i < n; ++i) {
            const bool leaf = f[i] < 0;
            if (!leaf && (f[i] >= static_cast<int>(dim) || l[i] <= i || r[i] <= i || l[i] >= n ||
                          r[i] >= n)) {
              throw Error(ErrorCode::kParse, "invalid tree node " + std::to_string(i));
            }
            t.nodes.push_back({f[i], thr[i], l[i], r[i], v[i]});
          }
          m.trees.push_back(std::move(t));
        }
        return m;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("model file: ") + e.what());
  }
  throw Error(ErrorCode::kParse, "unreachable model kind");
}

inline void save_model(const std::filesystem::path& path, const Model& model) {
  write_file(path, model_to_json(model).dump() + "\n");
}

inline Model load_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kMissingModel, "missing model file " + path.string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace dicova
