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

// Challenge scoring: ROC from a fixed threshold grid, trapezoidal AUC and the
// two operating-point statistics, plus per-subgroup reports.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "dicova/common.hpp"
#include "dicova/corpus.hpp"

namespace dicova {

// Grid of 10 001 thresholds: k / 10000 for k = 0..10000.
inline constexpr int kThresholdSteps = 10000;

inline double threshold_at(int k) {
  return static_cast<double>(k) / static_cast<double>(kThresholdSteps);
}

// Ordered recording-id -> probability pairs (the submission format).
class ScoreFile {
 public:
  struct Entry {
    std::string id;
    double score;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  void add(std::string id, double score) {
    if (!(score >= 0.0 && score <= 1.0)) {
      throw Error(ErrorCode::kMalformed,
                  "score " + format_double(score) + " for \"" + id + "\" outside [0,1]");
    }
    if (!index_.emplace(id, entries_.size()).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate id \"" + id + "\" in score file");
    }
    entries_.push_back({std::move(id), score});
  }

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  std::optional<double> find(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return entries_[it->second].score;
  }

  std::unordered_set<std::string> id_set() const {
    std::unordered_set<std::string> ids;
    for (const auto& e : entries_) ids.insert(e.id);
    return ids;
  }

  friend bool operator==(const ScoreFile& a, const ScoreFile& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// "<id> <score>\n" per recording; scores keep at least four decimals and are
// printed exactly, so parse(format(s)) == s.
inline std::string format_score_file(const ScoreFile& s) {
  std::string out;
  for (const auto& e : s.entries()) {
    out += e.id;
    out += ' ';
    out += format_fixed(e.score, 4);
    out += '\n';
  }
  return out;
}

inline ScoreFile parse_score_file(std::string_view text) {
  ScoreFile s;
  std::size_t line_no = 0;
  for (std::string_view rest = text; !rest.empty();) {
    const auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto where = "score line " + std::to_string(line_no) + ": ";
    const auto parts = split(line, ' ');
    if (parts.size() != 2 || parts[0].empty()) {
      throw Error(ErrorCode::kMalformed, where + "expected \"<id> <score>\"");
    }
    double v = 0.0;
    if (!parse_double(parts[1], v) || !std::isfinite(v)) {
      throw Error(ErrorCode::kMalformed, where + "unparseable score \"" + std::string(parts[1]) + "\"");
    }
    try {
      s.add(std::string(parts[0]), v);
    } catch (const Error& e) {
      throw Error(e.code() == ErrorCode::kDuplicateId ? ErrorCode::kMalformed : e.code(),
                  where + e.what());
    }
  }
  return s;
}

inline ScoreFile load_score_file(const std::filesystem::path& path) {
  return parse_score_file(read_file(path));
}

inline void save_score_file(const std::filesystem::path& path, const ScoreFile& s) {
  write_file(path, format_score_file(s));
}

using LabelMap = std::unordered_map<std::string, Label>;

inline LabelMap labels_of(const Manifest& m) {
  LabelMap labels;
  for (const auto& e : m.entries) labels.emplace(e.id, e.label);
  return labels;
}

struct RocPoint {
  double threshold;
  double sensitivity;  // TPR
  double specificity;  // TNR
};

struct RocCurve {
  std::vector<RocPoint> points;  // ascending threshold
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

// Positive iff score >= threshold.
inline RocCurve roc_curve(const ScoreFile& scores, const LabelMap& labels) {
  std::vector<double> pos, neg;
  for (const auto& e : scores.entries()) {
    const auto it = labels.find(e.id);
    if (it == labels.end()) throw Error(ErrorCode::kMissingLabel, "no label for \"" + e.id + "\"");
    (it->second == Label::kCovid ? pos : neg).push_back(e.score);
  }
  if (pos.empty() || neg.empty()) {
    throw Error(ErrorCode::kSingleClass, "ROC needs both covid and non_covid recordings");
  }
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  RocCurve roc;
  roc.n_pos = pos.size();
  roc.n_neg = neg.size();
  roc.points.reserve(kThresholdSteps + 1);
  const double np = static_cast<double>(pos.size());
  const double nn = static_cast<double>(neg.size());
  for (int k = 0; k <= kThresholdSteps; ++k) {
    const double tau = threshold_at(k);
    const auto below_pos = std::lower_bound(pos.begin(), pos.end(), tau) - pos.begin();
    const auto below_neg = std::lower_bound(neg.begin(), neg.end(), tau) - neg.begin();
    const double tp = np - static_cast<double>(below_pos);
    const double tn = static_cast<double>(below_neg);
    roc.points.push_back({tau, tp / np, tn / nn});
  }
  return roc;
}

// Trapezoidal area under TPR vs FPR, with (0,0) and (1,1) closing the curve.
inline double auc(const RocCurve& roc) {
  std::vector<std::pair<double, double>> pts;  // (fpr, tpr)
  pts.reserve(roc.points.size() + 2);
  pts.emplace_back(0.0, 0.0);
  for (const auto& p : roc.points) pts.emplace_back(1.0 - p.specificity, p.sensitivity);
  pts.emplace_back(1.0, 1.0);
  std::sort(pts.begin(), pts.end());
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    area += (pts[i].first - pts[i - 1].first) * (pts[i].second + pts[i - 1].second) / 2.0;
  }
  return area;
}

// Best specificity among grid points whose sensitivity reaches the floor.
inline double specificity_at_sensitivity(const RocCurve& roc, double floor = 0.80) {
  double best = 0.0;
  for (const auto& p : roc.points) {
    if (p.sensitivity >= floor) best = std::max(best, p.specificity);
  }
  return best;
}

// Best sensitivity among grid points whose specificity reaches the floor.
inline double sensitivity_at_specificity(const RocCurve& roc, double floor = 0.95) {
  double best = 0.0;
  for (const auto& p : roc.points) {
    if (p.specificity >= floor) best = std::max(best, p.sensitivity);
  }
  return best;
}

struct MetricsReport {
  double auc = 0.0;
  double spec_at_80sens = 0.0;
  double sens_at_95spec = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

inline MetricsReport metrics_from_roc(const RocCurve& roc) {
  return {auc(roc), specificity_at_sensitivity(roc, 0.80), sensitivity_at_specificity(roc, 0.95),
          roc.n_pos, roc.n_neg};
}

inline MetricsReport evaluate(const ScoreFile& scores, const LabelMap& labels) {
  return metrics_from_roc(roc_curve(scores, labels));
}

inline nlohmann::ordered_json to_json(const MetricsReport& m) {
  return {{"auc", m.auc},
          {"spec_at_80sens", m.spec_at_80sens},
          {"sens_at_95spec", m.sens_at_95spec},
          {"n_pos", m.n_pos},
          {"n_neg", m.n_neg}};
}

// Maps a recording to its group name; nullopt drops the recording.
using Slicer = std::function<std::optional<std::string>(const RecordingMeta&)>;

inline Slicer slice_by_gender() {
  return [](const RecordingMeta& m) -> std::optional<std::string> {
    switch (m.gender) {
      case Gender::kMale: return "male";
      case Gender::kFemale: return "female";
      case Gender::kUnknown: return std::nullopt;
    }
    return std::nullopt;
  };
}

inline Slicer slice_by_age(int boundary = 40) {
  return [boundary](const RecordingMeta& m) -> std::optional<std::string> {
    if (!m.age) return std::nullopt;
    return *m.age < boundary ? "age<" + std::to_string(boundary)
                             : "age>=" + std::to_string(boundary);
  };
}

inline std::map<std::string, MetricsReport> subgroup_metrics(const ScoreFile& scores,
                                                             const LabelMap& labels,
                                                             const Manifest& manifest,
                                                             const Slicer& slicer) {
  std::map<std::string, ScoreFile> groups;
  for (const auto& e : manifest.entries) {
    const auto score = scores.find(e.id);
    if (!score) continue;
    const auto group = slicer(e);
    if (!group) continue;
    groups[*group].add(e.id, *score);
  }
  std::map<std::string, MetricsReport> out;
  for (const auto& [name, group_scores] : groups) {
    try {
      out.emplace(name, evaluate(group_scores, labels));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kSingleClass) throw;
      throw Error(ErrorCode::kSingleClass, "group \"" + name + "\" contains a single class");
    }
  }
  return out;
}

}  // namespace dicova
