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

// End-to-end orchestration: featurization with a content-addressed cache,
// five-fold training and validation, fold-ensemble test scoring and fusion.

#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "dicova/audio.hpp"
#include "dicova/corpus.hpp"
#include "dicova/eval.hpp"
#include "dicova/features.hpp"
#include "dicova/fusion.hpp"
#include "dicova/models.hpp"

namespace dicova {

struct FeaturizeOptions {
  PreprocessConfig preprocess;
  MfccConfig mfcc;
  // Off when the input audio already went through `preprocess`.
  bool run_preprocess = true;
  std::size_t workers = 0;  // 0 = hardware concurrency
};

inline std::uint64_t feature_cache_key(std::string_view audio_bytes, const FeaturizeOptions& o) {
  std::string cfg;
  const auto add = [&cfg](double v) { cfg += format_double(v) + ';'; };
  add(o.preprocess.sad_threshold);
  add(o.preprocess.sad_buffer_ms);
  add(o.preprocess.edge_trim_ms);
  add(o.preprocess.min_duration_ms);
  add(o.run_preprocess ? 1 : 0);
  add(static_cast<double>(o.mfcc.frame_len));
  add(static_cast<double>(o.mfcc.hop));
  add(static_cast<double>(o.mfcc.n_mels));
  add(static_cast<double>(o.mfcc.n_coeffs));
  add(o.mfcc.sample_rate);
  add(o.mfcc.fmin);
  add(o.mfcc.fmax);
  add(o.mfcc.log_floor);
  add(static_cast<double>(o.mfcc.delta_halfwidth));
  return fnv1a(cfg, fnv1a(audio_bytes));
}

inline Waveform prepare_waveform(const Waveform& raw, const FeaturizeOptions& o) {
  Waveform w = resample(raw, kTargetRate);
  return o.run_preprocess ? preprocess(w, o.preprocess) : w;
}

struct FeaturizeReport {
  Manifest kept;  // entries with features, audio paths relative to the feature dir
  std::vector<std::pair<std::string, std::string>> dropped;  // id, reason
  std::size_t cache_hits = 0;
};

inline std::filesystem::path relative_to(const std::filesystem::path& target,
                                         const std::filesystem::path& dir) {
  const auto t = std::filesystem::absolute(target).lexically_normal();
  const auto d = std::filesystem::absolute(dir).lexically_normal();
  return t.lexically_relative(d);
}

// Writes <dir>/<id>.csv (+ <id>.key holding the cache key) for every usable
// recording and <dir>/manifest.csv listing them. Recordings rejected by the
// curation rules (too short, no activity) are reported, not fatal.
inline FeaturizeReport featurize_manifest(const Manifest& manifest,
                                          const std::filesystem::path& feature_dir,
                                          const FeaturizeOptions& options = {}) {
  std::filesystem::create_directories(feature_dir);
  const MfccExtractor extractor(options.mfcc);
  const std::size_t n = manifest.entries.size();
  std::vector<std::optional<std::string>> failure(n);
  std::vector<bool> hit(n, false);
  std::atomic<std::size_t> next{0};
  std::mutex fatal_mu;
  std::optional<Error> fatal;

  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const auto& e = manifest.entries[i];
      try {
        const auto audio_path = manifest.audio_file(e);
        const std::string bytes = read_file(audio_path);
        const std::string key = std::to_string(feature_cache_key(bytes, options));
        const auto csv = feature_dir / (e.id + ".csv");
        const auto key_file = feature_dir / (e.id + ".key");
        if (std::filesystem::exists(csv) && std::filesystem::exists(key_file) &&
            read_file(key_file) == key) {
          hit[i] = true;
          continue;
        }
        Waveform raw;
        try {
          raw = decode_pcm_wav(bytes);
        } catch (const Error& err) {
          throw Error(err.code(), audio_path.string() + ": " + err.what());
        }
        const Waveform w = prepare_waveform(raw, options);
        save_features(csv, extract_features(w, extractor, e.id));
        write_file(key_file, key);
      } catch (const Error& err) {
        if (err.code() == ErrorCode::kTooShort || err.code() == ErrorCode::kNoActivity) {
          failure[i] = std::string(err.code_name()) + ": " + err.what();
        } else {
          std::lock_guard lock(fatal_mu);
          if (!fatal) fatal = Error(err.code(), "recording \"" + e.id + "\": " + err.what());
        }
      }
    }
  };
  std::size_t workers = options.workers ? options.workers : std::thread::hardware_concurrency();
  workers = std::max<std::size_t>(1, std::min(workers, n));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (fatal) throw *fatal;

  FeaturizeReport report;
  report.kept = manifest.with_entries({});
  report.kept.base_dir = feature_dir;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = manifest.entries[i];
    if (failure[i]) {
      report.dropped.emplace_back(e.id, *failure[i]);
      continue;
    }
    if (hit[i]) ++report.cache_hits;
    RecordingMeta kept = e;
    kept.audio_path = relative_to(manifest.audio_file(e), feature_dir);
    report.kept.entries.push_back(std::move(kept));
  }
  save_manifest(feature_dir / "manifest.csv", report.kept);
  return report;
}

using FeatureSet = std::unordered_map<std::string, FeatureMatrix>;

inline FeatureSet load_feature_set(const Manifest& manifest, const std::filesystem::path& feature_dir) {
  FeatureSet set;
  for (const auto& e : manifest.entries) {
    const auto path = feature_dir / (e.id + ".csv");
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorCode::kIo, "no features for \"" + e.id + "\" in " + feature_dir.string());
    }
    try {
      set.emplace(e.id, load_features(path, e.id));
    } catch (const Error& err) {
      throw Error(err.code(), path.string() + ": " + err.what());
    }
  }
  return set;
}

inline const FeatureMatrix& features_for(const FeatureSet& set, const std::string& id) {
  const auto it = set.find(id);
  if (it == set.end()) throw Error(ErrorCode::kIo, "no features loaded for \"" + id + "\"");
  return it->second;
}

template <typename Pred>
FrameDataset build_dataset(const Manifest& manifest, const FeatureSet& features, Pred include) {
  FrameDataset ds;
  for (const auto& e : manifest.entries) {
    if (include(e)) ds.add_recording(features_for(features, e.id), e.label);
  }
  return ds;
}

struct FoldResult {
  int fold = 0;
  MetricsReport metrics;
};

struct FiveFoldResult {
  std::vector<FoldResult> folds;
  std::vector<Model> models;  // models[f-1] was trained without fold f
  ScoreFile validation_scores;
  double mean_auc = 0.0;
  double stderr_auc = 0.0;  // sample standard error over folds
};

inline double sample_standard_error(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return sd / std::sqrt(static_cast<double>(xs.size()));
}

// Fold f model: trained on the dev entries outside fold f with seed cfg.seed + f,
// then scored on fold f.
inline FiveFoldResult run_five_fold(const Manifest& manifest, const FeatureSet& features,
                                    ModelKind kind, const TrainConfig& cfg = {}) {
  const Manifest dev = manifest.split_view(Split::kDev);
  for (const auto& e : dev.entries) {
    if (!e.fold) throw Error(ErrorCode::kInvalidArgument, "dev entry \"" + e.id + "\" has no fold");
  }
  const LabelMap labels = labels_of(dev);
  FiveFoldResult result;
  std::vector<double> aucs;
  for (int f = 1; f <= manifest.k_folds; ++f) {
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = cfg.seed + static_cast<std::uint64_t>(f);
    const FrameDataset train =
        build_dataset(dev, features, [f](const RecordingMeta& e) { return *e.fold != f; });
    Model model = train_model(kind, train, fold_cfg);
    ScoreFile fold_scores;
    for (const auto& e : dev.entries) {
      if (*e.fold != f) continue;
      const double s = score_recording(model, features_for(features, e.id).values);
      fold_scores.add(e.id, s);
      result.validation_scores.add(e.id, s);
    }
    const MetricsReport m = evaluate(fold_scores, labels);
    result.folds.push_back({f, m});
    aucs.push_back(m.auc);
    result.models.push_back(std::move(model));
  }
  for (double a : aucs) result.mean_auc += a;
  result.mean_auc /= static_cast<double>(aucs.size());
  result.stderr_auc = sample_standard_error(aucs);
  return result;
}

inline nlohmann::ordered_json to_json(const FiveFoldResult& r) {
  nlohmann::ordered_json folds = nlohmann::ordered_json::array();
  for (const auto& f : r.folds) {
    auto j = to_json(f.metrics);
    j["fold"] = f.fold;
    folds.push_back(j);
  }
  return {{"folds", folds}, {"mean_auc", r.mean_auc}, {"stderr_auc", r.stderr_auc}};
}

inline std::filesystem::path fold_model_path(const std::filesystem::path& dir, int fold) {
  return dir / ("fold" + std::to_string(fold) + ".json");
}

inline void save_fold_models(const std::filesystem::path& dir, std::span<const Model> models) {
  for (std::size_t i = 0; i < models.size(); ++i) {
    save_model(fold_model_path(dir, static_cast<int>(i + 1)), models[i]);
  }
}

inline std::vector<Model> load_fold_models(const std::filesystem::path& dir, int k = kDefaultFolds) {
  std::vector<Model> models;
  for (int f = 1; f <= k; ++f) models.push_back(load_model(fold_model_path(dir, f)));
  return models;
}

// Fold-ensemble score for every entry of `manifest`.
inline ScoreFile run_test_scoring(std::span<const Model> models, const Manifest& manifest,
                                  const FeatureSet& features) {
  if (models.empty()) throw Error(ErrorCode::kMissingModel, "no fold models supplied");
  ScoreFile out;
  for (const auto& e : manifest.entries) {
    out.add(e.id, ensemble_score(models, features_for(features, e.id).values));
  }
  return out;
}

struct FusionResult {
  ScoreFile fused;
  std::optional<MetricsReport> metrics;
};

inline FusionResult run_fusion(std::span<const ScoreFile> inputs, const LabelMap* labels = nullptr) {
  FusionResult r;
  r.fused = fuse_score_files(inputs);
  if (labels) r.metrics = evaluate(r.fused, *labels);
  return r;
}

}  // namespace dicova
