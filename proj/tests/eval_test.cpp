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

#include "dicova/eval.hpp"
#include "oracles.hpp"

namespace dicova {
namespace {

struct Case {
  ScoreFile scores;
  LabelMap labels;
  std::vector<oracle::Scored> plain;
};

Case make_case(const std::vector<std::pair<double, bool>>& rows) {
  Case c;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string id = "s" + std::to_string(i);
    c.scores.add(id, rows[i].first);
    c.labels[id] = rows[i].second ? Label::kCovid : Label::kNonCovid;
    c.plain.push_back({rows[i].first, rows[i].second});
  }
  return c;
}

Case random_case(Rng& rng, std::size_t n, double quantum) {
  std::vector<std::pair<double, bool>> rows;
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = rng.uniform() < 0.3;
    double s = std::clamp(rng.uniform() * 0.7 + (pos ? 0.25 : 0.0), 0.0, 1.0);
    if (quantum > 0) s = std::round(s / quantum) * quantum;
    rows.emplace_back(s, pos);
    (pos ? has_pos : has_neg) = true;
  }
  if (!has_pos) rows[0].second = true;
  if (!has_neg) rows[1].second = false;
  return make_case(rows);
}

const std::vector<std::pair<double, bool>> kFourPoint{{0.1, false}, {0.4, false}, {0.35, true}, {0.8, true}};

TEST(ScoreFileTest, FormatAndParse) {
  ScoreFile s;
  s.add("a", 0.5);
  s.add("b", 0.123456789);
  s.add("c", 1.0);
  const std::string text = format_score_file(s);
  EXPECT_EQ(text, "a 0.5000\nb 0.123456789\nc 1.0000\n");
  EXPECT_EQ(parse_score_file(text), s);
  Rng rng(1);
  ScoreFile r;
  for (int i = 0; i < 200; ++i) r.add("id" + std::to_string(i), rng.uniform());
  EXPECT_EQ(parse_score_file(format_score_file(r)), r);
}

TEST(ScoreFileTest, Rejections) {
  ScoreFile s;
  EXPECT_THROW(s.add("x", 1.5), Error);
  EXPECT_THROW(s.add("x", -0.1), Error);
  EXPECT_THROW(s.add("x", std::nan("")), Error);
  for (const char* bad : {"a\n", "a 0.5 extra\n", "a zero\n", "a 0.5\na 0.6\n", "a 2\n"}) {
    try {
      parse_score_file(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kMalformed) << bad;
    }
  }
}

TEST(RocTest, GridAndBoundary) {
  const Case c = make_case(kFourPoint);
  const RocCurve roc = roc_curve(c.scores, c.labels);
  ASSERT_EQ(roc.points.size(), 10001u);
  EXPECT_EQ(roc.points.front().sensitivity, 1.0);
  EXPECT_EQ(roc.points.front().specificity, 0.0);
  EXPECT_EQ(roc.points[4000].threshold, 0.4);
  EXPECT_EQ(roc.points[4000].sensitivity, 0.5);
  EXPECT_EQ(roc.points[4000].specificity, 0.5);
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    EXPECT_LE(roc.points[i].sensitivity, roc.points[i - 1].sensitivity);
    EXPECT_GE(roc.points[i].specificity, roc.points[i - 1].specificity);
  }
}

TEST(RocTest, AllEqualScoresStep) {
  const Case c = make_case({{0.5, true}, {0.5, false}, {0.5, true}, {0.5, false}});
  const RocCurve roc = roc_curve(c.scores, c.labels);
  EXPECT_EQ(roc.points[5000].sensitivity, 1.0);
  EXPECT_EQ(roc.points[5000].specificity, 0.0);
  EXPECT_EQ(roc.points[5001].sensitivity, 0.0);
  EXPECT_EQ(roc.points[5001].specificity, 1.0);
  const MetricsReport m = metrics_from_roc(roc);
  EXPECT_DOUBLE_EQ(m.auc, 0.5);
  EXPECT_EQ(m.spec_at_80sens, 0.0);
  EXPECT_EQ(m.sens_at_95spec, 0.0);
}

TEST(RocTest, Errors) {
  Case c = make_case({{0.2, true}, {0.3, true}});
  try {
    roc_curve(c.scores, c.labels);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingleClass);
  }
  c = make_case(kFourPoint);
  c.labels.erase("s2");
  try {
    roc_curve(c.scores, c.labels);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingLabel);
  }
}

TEST(MetricsTest, FourPointExample) {
  const Case c = make_case(kFourPoint);
  const MetricsReport m = evaluate(c.scores, c.labels);
  EXPECT_NEAR(m.auc, oracle::mann_whitney_auc(c.plain), 1e-12);
  EXPECT_NEAR(m.auc, 0.75, 1e-12);
  EXPECT_EQ(m.spec_at_80sens, oracle::brute_spec_at_sens(c.plain, 0.8));
  EXPECT_EQ(m.spec_at_80sens, 0.5);
  EXPECT_EQ(m.sens_at_95spec, oracle::brute_sens_at_spec(c.plain, 0.95));
  EXPECT_EQ(m.sens_at_95spec, 0.5);
  EXPECT_EQ(m.n_pos, 2u);
  EXPECT_EQ(m.n_neg, 2u);
}

TEST(MetricsTest, PerfectSeparation) {
  const Case c = make_case({{0.1, false}, {0.2, false}, {0.7, true}, {0.9, true}});
  const MetricsReport m = evaluate(c.scores, c.labels);
  EXPECT_DOUBLE_EQ(m.auc, 1.0);
  EXPECT_EQ(m.spec_at_80sens, 1.0);
  EXPECT_EQ(m.sens_at_95spec, 1.0);
}

TEST(MetricsTest, AgreesWithOraclesOnRandomInstances) {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    // Scores on the threshold grid make the trapezoid exact; off-grid scores
    // stay within one grid cell of the pair statistic.
    const bool on_grid = trial % 2 == 0;
    const Case c = random_case(rng, 20 + rng.below(80), on_grid ? 1e-4 : 0.0);
    const MetricsReport m = evaluate(c.scores, c.labels);
    EXPECT_NEAR(m.auc, oracle::mann_whitney_auc(c.plain), on_grid ? 1e-9 : 1e-3);
    EXPECT_EQ(m.spec_at_80sens, oracle::brute_spec_at_sens(c.plain, 0.8));
    EXPECT_EQ(m.sens_at_95spec, oracle::brute_sens_at_spec(c.plain, 0.95));
    EXPECT_GE(m.auc, 0.0);
    EXPECT_LE(m.auc, 1.0);
  }
}

TEST(MetricsTest, MonotoneTransformInvariance) {
  Rng rng(78);
  for (int trial = 0; trial < 10; ++trial) {
    const Case c = random_case(rng, 60, 1e-3);
    std::vector<std::pair<double, bool>> squashed;
    for (const auto& p : c.plain) squashed.emplace_back(p.score * p.score, p.positive);
    const Case d = make_case(squashed);
    EXPECT_NEAR(evaluate(c.scores, c.labels).auc, evaluate(d.scores, d.labels).auc, 1e-9);
  }
}

TEST(MetricsTest, LabelFlipInvariance) {
  Rng rng(79);
  for (int trial = 0; trial < 10; ++trial) {
    const Case c = random_case(rng, 50, 1e-4);
    std::vector<std::pair<double, bool>> flipped;
    for (const auto& p : c.plain) flipped.emplace_back(1.0 - p.score, !p.positive);
    const Case d = make_case(flipped);
    EXPECT_NEAR(evaluate(c.scores, c.labels).auc, evaluate(d.scores, d.labels).auc, 1e-9);
  }
}

TEST(MetricsTest, JsonKeys) {
  const Case c = make_case(kFourPoint);
  const auto j = to_json(evaluate(c.scores, c.labels));
  for (const char* key : {"auc", "spec_at_80sens", "sens_at_95spec", "n_pos", "n_neg"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}

Manifest manifest_for(const Case& c, const std::function<void(std::size_t, RecordingMeta&)>& fill) {
  Manifest m;
  for (std::size_t i = 0; i < c.plain.size(); ++i) {
    RecordingMeta r;
    r.id = "s" + std::to_string(i);
    r.label = c.plain[i].positive ? Label::kCovid : Label::kNonCovid;
    fill(i, r);
    m.entries.push_back(r);
  }
  return m;
}

TEST(SubgroupMetricsTest, ReplicatedGroupsMatch) {
  std::vector<std::pair<double, bool>> rows = kFourPoint;
  rows.insert(rows.end(), kFourPoint.begin(), kFourPoint.end());
  const Case c = make_case(rows);
  const Manifest m = manifest_for(c, [](std::size_t i, RecordingMeta& r) {
    r.gender = i < 4 ? Gender::kMale : Gender::kFemale;
  });
  const auto groups = subgroup_metrics(c.scores, c.labels, m, slice_by_gender());
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups.at("male"), groups.at("female"));
}

TEST(SubgroupMetricsTest, EachGroupMatchesPairOracle) {
  Rng rng(80);
  const Case c = random_case(rng, 200, 1e-4);
  const Manifest m = manifest_for(c, [&](std::size_t i, RecordingMeta& r) {
    r.age = 15 + static_cast<int>((i * 37) % 66);
  });
  const auto groups = subgroup_metrics(c.scores, c.labels, m, slice_by_age(40));
  ASSERT_EQ(groups.size(), 2u);
  for (const auto& [name, report] : groups) {
    std::vector<oracle::Scored> members;
    for (std::size_t i = 0; i < c.plain.size(); ++i) {
      const bool young = *m.entries[i].age < 40;
      if ((name == "age<40") == young) members.push_back(c.plain[i]);
    }
    EXPECT_NEAR(report.auc, oracle::mann_whitney_auc(members), 1e-9) << name;
  }
}

TEST(SubgroupMetricsTest, SingleClassGroupNamed) {
  const Case c = make_case({{0.1, false}, {0.2, false}, {0.6, true}, {0.9, false}});
  const Manifest m = manifest_for(c, [](std::size_t i, RecordingMeta& r) {
    r.gender = i < 2 ? Gender::kFemale : Gender::kMale;
  });
  try {
    subgroup_metrics(c.scores, c.labels, m, slice_by_gender());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingleClass);
    EXPECT_NE(std::string(e.what()).find("female"), std::string::npos);
  }
}

}  // namespace
}  // namespace dicova
