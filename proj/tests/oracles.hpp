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

// Independent reference computations used only by the tests. Nothing here
// calls into the library code it is meant to check.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace dicova::oracle {

struct Scored {
  double score;
  bool positive;
};

// P(score_pos > score_neg) + 0.5 P(tie), by counting every pair.
inline double mann_whitney_auc(const std::vector<Scored>& xs) {
  double wins = 0.0, pairs = 0.0;
  for (const auto& p : xs) {
    if (!p.positive) continue;
    for (const auto& n : xs) {
      if (n.positive) continue;
      pairs += 1.0;
      if (p.score > n.score) {
        wins += 1.0;
      } else if (p.score == n.score) {
        wins += 0.5;
      }
    }
  }
  return wins / pairs;
}

// Direct count at one threshold with the "score >= tau is positive" rule.
inline std::pair<double, double> rates_at(const std::vector<Scored>& xs, double tau) {
  double tp = 0, fn = 0, tn = 0, fp = 0;
  for (const auto& x : xs) {
    const bool pred = x.score >= tau;
    if (x.positive) {
      (pred ? tp : fn) += 1;
    } else {
      (pred ? fp : tn) += 1;
    }
  }
  return {tp / (tp + fn), tn / (tn + fp)};
}

// Exhaustive sweep over k/10000, k = 0..10000.
inline double brute_spec_at_sens(const std::vector<Scored>& xs, double floor) {
  double best = 0.0;
  for (int k = 0; k <= 10000; ++k) {
    const auto [tpr, tnr] = rates_at(xs, static_cast<double>(k) / 10000.0);
    if (tpr >= floor && tnr > best) best = tnr;
  }
  return best;
}

inline double brute_sens_at_spec(const std::vector<Scored>& xs, double floor) {
  double best = 0.0;
  for (int k = 0; k <= 10000; ++k) {
    const auto [tpr, tnr] = rates_at(xs, static_cast<double>(k) / 10000.0);
    if (tnr >= floor && tpr > best) best = tpr;
  }
  return best;
}

// O(n^2) DFT power spectrum, bins 0..n/2.
inline std::vector<double> naive_power_spectrum(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * M_PI * static_cast<double>(k * t % n) / static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = std::norm(acc);
  }
  return out;
}

// Energy of x within [lo_hz, hi_hz] via a direct DFT restricted to those bins.
inline double band_energy(const std::vector<double>& x, double rate, double lo_hz, double hi_hz) {
  const std::size_t n = x.size();
  double e = 0.0;
  const auto k_lo = static_cast<std::size_t>(std::ceil(lo_hz * n / rate));
  const auto k_hi = static_cast<std::size_t>(std::floor(hi_hz * n / rate));
  for (std::size_t k = k_lo; k <= k_hi && k <= n / 2; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * M_PI * static_cast<double>(k * t % n) / static_cast<double>(n);
      re += x[t] * std::cos(ang);
      im += x[t] * std::sin(ang);
    }
    e += re * re + im * im;
  }
  return e;
}

// Literal reading of the activity rule: sample i survives iff some j with
// |i - j| <= buffer has |x_j| >= threshold.
inline std::vector<double> sad_by_definition(const std::vector<double>& x, double threshold,
                                             std::size_t buffer) {
  std::vector<double> out;
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
  const std::ptrdiff_t b = static_cast<std::ptrdiff_t>(buffer);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    bool keep = false;
    for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - b); j <= std::min(n - 1, i + b); ++j) {
      if (std::abs(x[static_cast<std::size_t>(j)]) >= threshold) {
        keep = true;
        break;
      }
    }
    if (keep) out.push_back(x[static_cast<std::size_t>(i)]);
  }
  return out;
}

// Central differences of f at p, step h.
inline std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> p, double h) {
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + h;
    const double up = f(p);
    p[i] = orig - h;
    const double down = f(p);
    p[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||), so near-zero components cannot dominate.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(1e-12, std::sqrt(std::max(na, nb)));
}

}  // namespace dicova::oracle
