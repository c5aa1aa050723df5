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

// Late fusion of several systems: per-system min-max range calibration
// followed by an unweighted mean.

#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "dicova/common.hpp"
#include "dicova/eval.hpp"

namespace dicova {

// p_hat = (p - min) / (max - min). Constant columns are rejected.
inline std::vector<double> calibrate_minmax(std::span<const double> column) {
  if (column.empty()) throw Error(ErrorCode::kEmptyInput, "empty score column");
  const auto [lo_it, hi_it] = std::minmax_element(column.begin(), column.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    throw Error(ErrorCode::kDegenerateColumn, "score column is constant; cannot calibrate");
  }
  std::vector<double> out(column.size());
  for (std::size_t i = 0; i < column.size(); ++i) out[i] = (column[i] - lo) / (hi - lo);
  return out;
}

// N subjects x T systems, subject order shared by all columns.
struct TeamScoreMatrix {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> columns;

  std::size_t subjects() const noexcept { return ids.size(); }
  std::size_t systems() const noexcept { return columns.size(); }

  // Aligns the files on the id order of the first one.
  static TeamScoreMatrix from_score_files(std::span<const ScoreFile> files) {
    if (files.empty()) throw Error(ErrorCode::kEmptyInput, "no score files to fuse");
    TeamScoreMatrix m;
    for (const auto& e : files.front().entries()) m.ids.push_back(e.id);
    for (std::size_t j = 0; j < files.size(); ++j) {
      const auto& f = files[j];
      std::vector<std::string> missing;
      std::vector<double> col;
      col.reserve(m.ids.size());
      for (const auto& id : m.ids) {
        const auto s = f.find(id);
        if (!s) {
          missing.push_back(id);
        } else {
          col.push_back(*s);
        }
      }
      if (!missing.empty() || f.size() != m.ids.size()) {
        std::string msg = "score file " + std::to_string(j + 1) + " id set differs from file 1";
        if (!missing.empty()) msg += " (missing \"" + missing.front() + "\")";
        throw Error(ErrorCode::kIdMismatch, msg);
      }
      m.columns.push_back(std::move(col));
    }
    return m;
  }
};

// p_f = (1/T) sum_j p_hat_j
inline std::vector<double> fuse_mean(const TeamScoreMatrix& matrix) {
  if (matrix.columns.empty()) throw Error(ErrorCode::kEmptyInput, "fusion needs at least one system");
  const std::size_t n = matrix.subjects();
  std::vector<double> fused(n, 0.0);
  for (const auto& col : matrix.columns) {
    if (col.size() != n) throw Error(ErrorCode::kIdMismatch, "ragged score matrix");
    const auto cal = calibrate_minmax(col);
    for (std::size_t i = 0; i < n; ++i) fused[i] += cal[i];
  }
  const double t = static_cast<double>(matrix.systems());
  for (double& v : fused) v /= t;
  return fused;
}

inline ScoreFile fuse_score_files(std::span<const ScoreFile> files) {
  const auto matrix = TeamScoreMatrix::from_score_files(files);
  const auto fused = fuse_mean(matrix);
  ScoreFile out;
  for (std::size_t i = 0; i < fused.size(); ++i) {
    out.add(matrix.ids[i], fused[i]);
  }
  return out;
}

}  // namespace dicova
