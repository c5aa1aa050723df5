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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "dicova/pipeline.hpp"
#include "oracles.hpp"

namespace dicova {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("dicova_pipeline_test_" + name);
  fs::remove_all(p);
  return p;
}

// A small corpus shared by the tests in this file.
class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(scratch("shared"));
    SynthSpec spec;
    spec.n_recordings = 60;
    spec.positive_fraction = 0.25;
    spec.seed = 3;
    spec.min_duration_s = 0.8;
    spec.max_duration_s = 1.0;
    spec.test_fraction = 0.2;
    Manifest m = assign_folds(generate_synthetic_corpus(spec, *root_ / "corpus"), 5, 3);
    FeaturizeOptions opts;
    opts.workers = 2;
    report_ = new FeaturizeReport(featurize_manifest(m, *root_ / "features", opts));
    features_ = new FeatureSet(load_feature_set(report_->kept, *root_ / "features"));
  }
  static void TearDownTestSuite() {
    delete features_;
    delete report_;
    delete root_;
  }

  static fs::path* root_;
  static FeaturizeReport* report_;
  static FeatureSet* features_;
};

fs::path* PipelineTest::root_ = nullptr;
FeaturizeReport* PipelineTest::report_ = nullptr;
FeatureSet* PipelineTest::features_ = nullptr;

TEST_F(PipelineTest, FeaturizeWritesManifestAndFeatures) {
  EXPECT_TRUE(report_->dropped.empty());
  EXPECT_EQ(report_->kept.size(), 60u);
  const Manifest reloaded = load_manifest(*root_ / "features" / "manifest.csv");
  ASSERT_EQ(reloaded.size(), 60u);
  EXPECT_TRUE(fs::exists(reloaded.audio_file(reloaded.entries[0])));
  for (const auto& e : reloaded.entries) {
    const auto& fm = features_for(*features_, e.id);
    EXPECT_EQ(fm.values.cols(), kFeatureDim);
    EXPECT_GT(fm.values.rows(), 0u);
  }
}

TEST_F(PipelineTest, CacheHitsAndWorkerCountDoNotChangeOutput) {
  const Manifest m = load_manifest(*root_ / "corpus" / "manifest.csv");
  FeaturizeOptions one;
  one.workers = 1;
  const auto dir = scratch("cache");
  const auto first = featurize_manifest(m, dir, one);
  EXPECT_EQ(first.cache_hits, 0u);
  for (const auto& e : first.kept.entries) {
    EXPECT_EQ(read_file(dir / (e.id + ".csv")), read_file(*root_ / "features" / (e.id + ".csv"))) << e.id;
  }
  const auto second = featurize_manifest(m, dir, one);
  EXPECT_EQ(second.cache_hits, 60u);
  FeaturizeOptions changed = one;
  changed.mfcc.n_mels = 30;
  EXPECT_EQ(featurize_manifest(m, dir, changed).cache_hits, 0u);
}

TEST_F(PipelineTest, ShortAndSilentRecordingsAreDropped) {
  const auto dir = scratch("drop");
  Manifest m;
  m.base_dir = dir;
  Waveform loud;
  for (int i = 0; i < 44100; ++i) loud.samples.push_back(0.5 * std::sin(i * 0.05));
  Waveform quiet;
  quiet.samples.assign(44100, 0.0);
  Waveform short_clip;
  short_clip.samples.assign(8000, 0.5);
  const std::vector<std::pair<std::string, Waveform>> clips{{"ok", loud}, {"silent", quiet}, {"short", short_clip}};
  for (const auto& [id, w] : clips) {
    write_pcm_wav(dir / (id + ".wav"), w);
    RecordingMeta r;
    r.id = id;
    r.audio_path = id + ".wav";
    m.entries.push_back(r);
  }
  const auto report = featurize_manifest(m, dir / "features");
  ASSERT_EQ(report.kept.size(), 1u);
  EXPECT_EQ(report.kept.entries[0].id, "ok");
  ASSERT_EQ(report.dropped.size(), 2u);
  EXPECT_NE(report.dropped[0].second.find("NO_ACTIVITY"), std::string::npos);
  EXPECT_NE(report.dropped[1].second.find("TOO_SHORT"), std::string::npos);
}

TEST_F(PipelineTest, FiveFoldIsDeterministicAndLearns) {
  TrainConfig cfg;
  cfg.n_trees = 10;
  const auto a = run_five_fold(report_->kept, *features_, ModelKind::kRf, cfg);
  const auto b = run_five_fold(report_->kept, *features_, ModelKind::kRf, cfg);
  ASSERT_EQ(a.folds.size(), 5u);
  for (std::size_t f = 0; f < 5; ++f) EXPECT_EQ(a.folds[f].metrics, b.folds[f].metrics);
  EXPECT_EQ(a.validation_scores, b.validation_scores);
  EXPECT_EQ(a.validation_scores.size(), report_->kept.split_view(Split::kDev).size());
  EXPECT_GE(a.mean_auc, 0.85);
  std::vector<double> aucs;
  for (const auto& f : a.folds) aucs.push_back(f.metrics.auc);
  EXPECT_NEAR(a.stderr_auc, sample_standard_error(aucs), 0.0);
  const auto j = to_json(a);
  EXPECT_EQ(j["folds"].size(), 5u);
}

TEST(StdErrTest, SampleFormula) {
  const std::vector<double> xs{1, 2, 3, 4, 5};
  // sd = sqrt(2.5), se = sd / sqrt(5)
  EXPECT_NEAR(sample_standard_error(xs), std::sqrt(2.5) / std::sqrt(5.0), 1e-15);
  EXPECT_EQ(sample_standard_error(std::vector<double>{0.7}), 0.0);
}

TEST_F(PipelineTest, TestScoringEnsemble) {
  const Manifest test = report_->kept.split_view(Split::kTest);
  TrainConfig cfg;
  cfg.epochs = 2;
  const FrameDataset ds = build_dataset(report_->kept.split_view(Split::kDev), *features_,
                                        [](const RecordingMeta&) { return true; });
  const Model single = train_model(ModelKind::kLr, ds, cfg);
  const std::vector<Model> five(5, single);
  const ScoreFile ens = run_test_scoring(five, test, *features_);
  ASSERT_EQ(ens.size(), test.size());
  for (const auto& e : ens.entries()) {
    EXPECT_NEAR(e.score, score_recording(single, features_for(*features_, e.id).values), 1e-15);
  }
  EXPECT_EQ(parse_score_file(format_score_file(ens)), ens);
  EXPECT_TRUE(run_test_scoring(five, test.with_entries({}), *features_).empty());
  EXPECT_THROW(run_test_scoring(std::span<const Model>{}, test, *features_), Error);

  const auto dir = scratch("models");
  save_fold_models(dir, five);
  EXPECT_EQ(load_fold_models(dir), five);
  fs::remove(fold_model_path(dir, 3));
  try {
    load_fold_models(dir);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingModel);
  }
}

TEST(FusionRunTest, ComplementarySystems) {
  // System A separates ids 0..9 and is flat on 10..19; B the reverse.
  ScoreFile a, b;
  LabelMap labels;
  for (int i = 0; i < 20; ++i) {
    const std::string id = "r" + std::to_string(i);
    const bool pos = i % 4 == 0;
    labels[id] = pos ? Label::kCovid : Label::kNonCovid;
    const double good = pos ? 0.9 - 0.01 * i : 0.1 + 0.01 * i;
    a.add(id, i < 10 ? good : 0.5);
    b.add(id, i < 10 ? 0.5 : good);
  }
  const std::vector<ScoreFile> both{a, b};
  const FusionResult r = run_fusion(both, &labels);
  ASSERT_TRUE(r.metrics.has_value());
  const double best_single = std::max(evaluate(a, labels).auc, evaluate(b, labels).auc);
  EXPECT_GE(r.metrics->auc, best_single);

  const std::vector<ScoreFile> one{a};
  const FusionResult single = run_fusion(one);
  EXPECT_FALSE(single.metrics.has_value());
  std::vector<double> raw;
  for (const auto& e : a.entries()) raw.push_back(e.score);
  const auto cal = calibrate_minmax(raw);
  for (std::size_t i = 0; i < cal.size(); ++i) EXPECT_EQ(single.fused.entries()[i].score, cal[i]);
}

}  // namespace
}  // namespace dicova
