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

// dicova: command-line driver for the screening benchmark.
//
//   synth → preprocess → featurize → train → score → eval / fuse, and serve.
//
// Exit status is 0 on success. Failures print {"error": CODE, "message": ...}
// on stderr and exit with 10 + the numeric error code (2 for usage errors).

#include <csignal>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dicova/dicova.hpp"
#include "dicova/leaderboard_http.hpp"

namespace fs = std::filesystem;
using namespace dicova;

namespace {

void print_json(const nlohmann::ordered_json& j) { std::cout << j.dump(2) << "\n"; }

Split parse_split(const std::string& s) {
  if (s == "dev") return Split::kDev;
  if (s == "test") return Split::kTest;
  throw Error(ErrorCode::kInvalidArgument, "unknown split \"" + s + "\"");
}

Manifest select_split(const Manifest& m, const std::string& which) {
  return which == "all" ? m : m.split_view(parse_split(which));
}

struct SynthArgs {
  std::string out;
  SynthSpec spec;
  int folds = kDefaultFolds;
};

int cmd_synth(const SynthArgs& a) {
  Manifest m = generate_synthetic_corpus(a.spec, a.out);
  const Manifest dev = m.split_view(Split::kDev);
  const std::size_t dev_pos = dev.count_covid();
  if (!dev.empty() && dev_pos >= static_cast<std::size_t>(a.folds) &&
      dev.size() - dev_pos >= static_cast<std::size_t>(a.folds)) {
    m = assign_folds(m, a.folds, a.spec.seed);
    save_manifest(fs::path(a.out) / "manifest.csv", m);
  } else if (!m.empty()) {
    std::cerr << "warning: too few dev recordings per class for " << a.folds
              << " folds; folds left unassigned\n";
  }
  print_json({{"manifest", (fs::path(a.out) / "manifest.csv").string()},
              {"recordings", m.size()},
              {"covid", m.count_covid()},
              {"test", m.split_view(Split::kTest).size()}});
  return 0;
}

struct PreprocessArgs {
  std::string manifest;
  std::string out;
  PreprocessConfig cfg;
};

int cmd_preprocess(const PreprocessArgs& a) {
  const Manifest in = load_manifest(a.manifest);
  Manifest out = in.with_entries({});
  out.base_dir = a.out;
  nlohmann::ordered_json dropped = nlohmann::ordered_json::array();
  for (const auto& e : in.entries) {
    try {
      const Waveform w = preprocess(resample(read_pcm_wav(in.audio_file(e)), kTargetRate), a.cfg);
      RecordingMeta kept = e;
      kept.audio_path = fs::path("audio") / (e.id + ".wav");
      write_pcm_wav(fs::path(a.out) / kept.audio_path, w);
      out.entries.push_back(std::move(kept));
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kTooShort && err.code() != ErrorCode::kNoActivity) throw;
      dropped.push_back({{"id", e.id}, {"reason", err.code_name()}});
    }
  }
  save_manifest(fs::path(a.out) / "manifest.csv", out);
  print_json({{"manifest", (fs::path(a.out) / "manifest.csv").string()},
              {"kept", out.size()},
              {"dropped", dropped}});
  return 0;
}

struct FeaturizeArgs {
  std::string manifest;
  std::string out;
  bool no_preprocess = false;
  std::size_t workers = 0;
  FeaturizeOptions options;
};

int cmd_featurize(FeaturizeArgs a) {
  a.options.run_preprocess = !a.no_preprocess;
  a.options.workers = a.workers;
  const Manifest m = load_manifest(a.manifest);
  const FeaturizeReport r = featurize_manifest(m, a.out, a.options);
  nlohmann::ordered_json dropped = nlohmann::ordered_json::array();
  for (const auto& [id, why] : r.dropped) dropped.push_back({{"id", id}, {"reason", why}});
  print_json({{"manifest", (fs::path(a.out) / "manifest.csv").string()},
              {"featurized", r.kept.size()},
              {"cache_hits", r.cache_hits},
              {"dropped", dropped}});
  return 0;
}

struct TrainArgs {
  std::string model = "rf";
  std::string manifest;
  std::string features;
  std::string out;
  TrainConfig cfg;
};

fs::path feature_dir_for(const std::string& features, const std::string& manifest) {
  return features.empty() ? fs::path(manifest).parent_path() : fs::path(features);
}

int cmd_train(const TrainArgs& a) {
  const Manifest m = load_manifest(a.manifest);
  const FeatureSet features = load_feature_set(m.split_view(Split::kDev), feature_dir_for(a.features, a.manifest));
  const FiveFoldResult r = run_five_fold(m, features, parse_model_kind(a.model), a.cfg);
  save_fold_models(a.out, r.models);
  save_score_file(fs::path(a.out) / "val_scores.txt", r.validation_scores);
  auto report = to_json(r);
  report["model"] = a.model;
  write_file(fs::path(a.out) / "five_fold.json", report.dump(2) + "\n");
  print_json(report);
  return 0;
}

struct ScoreArgs {
  std::string manifest;
  std::string features;
  std::string models;
  std::string out;
  std::string split = "test";
  int folds = kDefaultFolds;
};

int cmd_score(const ScoreArgs& a) {
  const Manifest m = select_split(load_manifest(a.manifest), a.split);
  const auto models = load_fold_models(a.models, a.folds);
  const FeatureSet features = load_feature_set(m, feature_dir_for(a.features, a.manifest));
  const ScoreFile scores = run_test_scoring(models, m, features);
  save_score_file(a.out, scores);
  print_json({{"scores", a.out}, {"recordings", scores.size()}});
  return 0;
}

struct EvalArgs {
  std::string scores;
  std::string manifest;
  std::string by;
};

int cmd_eval(const EvalArgs& a) {
  const ScoreFile scores = load_score_file(a.scores);
  const Manifest m = load_manifest(a.manifest);
  const LabelMap labels = labels_of(m);
  const MetricsReport overall = evaluate(scores, labels);
  if (a.by.empty()) {
    print_json(to_json(overall));
    return 0;
  }
  Slicer slicer;
  if (a.by == "gender") {
    slicer = slice_by_gender();
  } else if (a.by == "age") {
    slicer = slice_by_age(40);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "--by must be gender or age");
  }
  nlohmann::ordered_json groups;
  for (const auto& [name, report] : subgroup_metrics(scores, labels, m, slicer)) {
    groups[name] = to_json(report);
  }
  print_json({{"overall", to_json(overall)}, {"groups", groups}});
  return 0;
}

struct FuseArgs {
  std::vector<std::string> inputs;
  std::string out;
  std::string manifest;
};

int cmd_fuse(const FuseArgs& a) {
  std::vector<ScoreFile> files;
  for (const auto& p : a.inputs) files.push_back(load_score_file(p));
  std::optional<LabelMap> labels;
  if (!a.manifest.empty()) labels = labels_of(load_manifest(a.manifest));
  const FusionResult r = run_fusion(files, labels ? &*labels : nullptr);
  save_score_file(a.out, r.fused);
  nlohmann::ordered_json j = {{"scores", a.out}, {"systems", files.size()}};
  if (r.metrics) j["metrics"] = to_json(*r.metrics);
  print_json(j);
  return 0;
}

struct ServeArgs {
  std::string journal;
  std::string truth;
  std::string host = "127.0.0.1";
  int port = 8080;
};

httplib::Server* g_server = nullptr;

int cmd_serve(const ServeArgs& a) {
  LeaderboardService service(GroundTruth::from_manifest(load_manifest(a.truth)), a.journal);
  httplib::Server server;
  mount_leaderboard_routes(server, service);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  int port = a.port;
  if (port == 0) {
    port = server.bind_to_any_port(a.host);
  } else if (!server.bind_to_port(a.host, port)) {
    throw Error(ErrorCode::kIo, "cannot bind " + a.host + ":" + std::to_string(port));
  }
  std::cerr << "listening on " << a.host << ":" << port << "\n";
  server.listen_after_bind();
  return 0;
}

void add_preprocess_options(CLI::App* cmd, PreprocessConfig& cfg) {
  cmd->add_option("--sad-threshold", cfg.sad_threshold, "Sound activity amplitude threshold");
  cmd->add_option("--sad-buffer-ms", cfg.sad_buffer_ms, "Activity buffer on either side (ms)");
  cmd->add_option("--edge-trim-ms", cfg.edge_trim_ms, "Trim at start and end (ms)");
  cmd->add_option("--min-duration-ms", cfg.min_duration_ms, "Discard recordings shorter than this");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acoustic COVID-19 screening benchmark"};
  app.set_config("--config", "", "Key-value configuration file; command-line flags win");
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic two-class corpus");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--n", synth.spec.n_recordings, "Number of recordings");
  c_synth->add_option("--positive-fraction", synth.spec.positive_fraction, "Share of covid recordings");
  c_synth->add_option("--min-duration", synth.spec.min_duration_s, "Minimum duration (s)");
  c_synth->add_option("--max-duration", synth.spec.max_duration_s, "Maximum duration (s)");
  c_synth->add_option("--sample-rate", synth.spec.sample_rate, "Sample rate of the written WAVs");
  c_synth->add_option("--test-fraction", synth.spec.test_fraction, "Share routed to the test split");
  c_synth->add_option("--seed", synth.spec.seed, "Random seed");
  c_synth->add_option("--folds", synth.folds, "Number of validation folds");
  synth.spec.test_fraction = 0.2;

  PreprocessArgs pre;
  auto* c_pre = app.add_subcommand("preprocess", "Resample, normalize, trim and activity-filter audio");
  c_pre->add_option("--manifest", pre.manifest, "Input manifest")->required();
  c_pre->add_option("--out", pre.out, "Output directory")->required();
  add_preprocess_options(c_pre, pre.cfg);

  FeaturizeArgs feat;
  auto* c_feat = app.add_subcommand("featurize", "Extract 39-d MFCC+delta features");
  c_feat->add_option("--manifest", feat.manifest, "Input manifest")->required();
  c_feat->add_option("--out", feat.out, "Feature directory")->required();
  c_feat->add_flag("--no-preprocess", feat.no_preprocess, "Input audio is already preprocessed");
  c_feat->add_option("--workers", feat.workers, "Worker threads (0 = all cores)");
  add_preprocess_options(c_feat, feat.options.preprocess);

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Five-fold training and validation");
  c_train->add_option("--model", train.model, "Classifier")
      ->check(CLI::IsMember({"lr", "mlp", "rf"}));
  c_train->add_option("--manifest", train.manifest, "Feature manifest with folds")->required();
  c_train->add_option("--features", train.features, "Feature directory (default: manifest dir)");
  c_train->add_option("--out", train.out, "Model directory")->required();
  c_train->add_option("--seed", train.cfg.seed, "Random seed");
  c_train->add_option("--epochs", train.cfg.epochs, "Epochs (lr, mlp)");
  c_train->add_option("--learning-rate", train.cfg.learning_rate, "Adam learning rate");
  c_train->add_option("--batch-size", train.cfg.batch_size, "Mini-batch size in frames");
  c_train->add_option("--trees", train.cfg.n_trees, "Random forest size");

  ScoreArgs score;
  auto* c_score = app.add_subcommand("score", "Fold-ensemble scoring");
  c_score->add_option("--manifest", score.manifest, "Feature manifest")->required();
  c_score->add_option("--features", score.features, "Feature directory (default: manifest dir)");
  c_score->add_option("--models", score.models, "Model directory")->required();
  c_score->add_option("--out", score.out, "Score file")->required();
  c_score->add_option("--split", score.split, "test, dev or all")
      ->check(CLI::IsMember({"test", "dev", "all"}));
  c_score->add_option("--folds", score.folds, "Number of fold models");

  EvalArgs eval_args;
  auto* c_eval = app.add_subcommand("eval", "Score a submission against labels");
  c_eval->add_option("--scores", eval_args.scores, "Score file")->required();
  c_eval->add_option("--manifest", eval_args.manifest, "Manifest with labels")->required();
  c_eval->add_option("--by", eval_args.by, "Subgroup slicing: gender or age");

  FuseArgs fuse;
  auto* c_fuse = app.add_subcommand("fuse", "Min-max calibrated mean fusion");
  c_fuse->add_option("inputs", fuse.inputs, "Score files")->required();
  c_fuse->add_option("--out", fuse.out, "Fused score file")->required();
  c_fuse->add_option("--manifest", fuse.manifest, "Manifest with labels for metrics");

  ServeArgs serve;
  auto* c_serve = app.add_subcommand("serve", "Run the ticketed leaderboard service");
  c_serve->add_option("--journal", serve.journal, "Journal path")->required();
  c_serve->add_option("--truth", serve.truth, "Ground-truth manifest")->required();
  c_serve->add_option("--host", serve.host, "Bind address");
  c_serve->add_option("--port", serve.port, "Port (0 = any)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*c_synth) return cmd_synth(synth);
    if (*c_pre) return cmd_preprocess(pre);
    if (*c_feat) return cmd_featurize(feat);
    if (*c_train) return cmd_train(train);
    if (*c_score) return cmd_score(score);
    if (*c_eval) return cmd_eval(eval_args);
    if (*c_fuse) return cmd_fuse(fuse);
    if (*c_serve) return cmd_serve(serve);
  } catch (const Error& e) {
    std::cerr << nlohmann::ordered_json{{"error", e.code_name()}, {"message", e.what()}}.dump() << "\n";
    return 10 + static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << nlohmann::ordered_json{{"error", "INTERNAL"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
