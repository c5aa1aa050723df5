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

// Frame-level MFCC features: Hann window, power spectrum, HTK-style triangular
// mel filterbank, floored natural log, orthonormal DCT-II, then regression
// deltas and delta-deltas. One 39-dimensional row per 1024-sample frame.

#pragma once

#include <cmath>
#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include "dicova/audio.hpp"
#include "dicova/common.hpp"

namespace dicova {

inline constexpr std::size_t kStaticDim = 13;
inline constexpr std::size_t kFeatureDim = 3 * kStaticDim;

struct MfccConfig {
  std::size_t frame_len = 1024;
  std::size_t hop = 441;
  std::size_t n_mels = 40;
  std::size_t n_coeffs = kStaticDim;
  double sample_rate = kTargetRate;
  double fmin = 0.0;
  double fmax = 22050.0;
  double log_floor = 1e-10;
  std::size_t delta_halfwidth = 2;

  void validate() const {
    if (frame_len == 0 || hop == 0 || hop > frame_len) {
      throw Error(ErrorCode::kInvalidArgument, "need 0 < hop <= frame_len");
    }
    if (n_mels == 0 || n_coeffs == 0 || n_coeffs > n_mels) {
      throw Error(ErrorCode::kInvalidArgument, "need 0 < n_coeffs <= n_mels");
    }
    if (fmin < 0.0 || fmax <= fmin || fmax > sample_rate / 2.0) {
      throw Error(ErrorCode::kInvalidArgument, "need 0 <= fmin < fmax <= rate/2");
    }
    if (!(log_floor > 0.0)) throw Error(ErrorCode::kInvalidArgument, "log_floor must be > 0");
    if (delta_halfwidth == 0) throw Error(ErrorCode::kInvalidArgument, "delta half-width must be >= 1");
  }

  // FFT size: next power of two >= frame_len.
  std::size_t n_fft() const {
    std::size_t n = 1;
    while (n < frame_len) n <<= 1;
    return n;
  }
};

struct FeatureMatrix {
  std::string recording_id;
  Matrix values;  // T x 39: static | delta | delta-delta

  std::size_t frames() const noexcept { return values.rows(); }
  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

inline std::size_t frame_count(std::size_t len, std::size_t frame_len, std::size_t hop) {
  return len < frame_len ? 0 : (len - frame_len) / hop + 1;
}

// Frames start at 0, hop, 2*hop, ...; an incomplete tail frame is dropped.
inline Matrix frame_signal(const Waveform& w, std::size_t frame_len, std::size_t hop) {
  if (hop == 0 || frame_len == 0) throw Error(ErrorCode::kInvalidArgument, "frame_len and hop must be > 0");
  if (w.samples.size() < frame_len) {
    throw Error(ErrorCode::kTooShort, "signal of " + std::to_string(w.samples.size()) +
                                          " samples is shorter than one " +
                                          std::to_string(frame_len) + "-sample frame");
  }
  const std::size_t t = frame_count(w.samples.size(), frame_len, hop);
  Matrix frames(t, frame_len);
  for (std::size_t i = 0; i < t; ++i) {
    std::copy_n(w.samples.begin() + static_cast<std::ptrdiff_t>(i * hop), frame_len,
                frames.row(i).begin());
  }
  return frames;
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Centre frequencies (Hz) of the n_mels filters, equally spaced on the mel axis.
inline std::vector<double> mel_centers(const MfccConfig& cfg) {
  const double lo = hz_to_mel(cfg.fmin);
  const double hi = hz_to_mel(cfg.fmax);
  std::vector<double> centers(cfg.n_mels);
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    centers[m] = mel_to_hz(lo + (hi - lo) * static_cast<double>(m + 1) /
                                    static_cast<double>(cfg.n_mels + 1));
  }
  return centers;
}

// n_mels x (n_fft/2 + 1) unit-height triangular weights.
inline Matrix mel_filterbank(const MfccConfig& cfg) {
  const std::size_t n_fft = cfg.n_fft();
  const std::size_t n_bins = n_fft / 2 + 1;
  const double lo = hz_to_mel(cfg.fmin);
  const double hi = hz_to_mel(cfg.fmax);
  std::vector<double> edges(cfg.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) /
                                  static_cast<double>(cfg.n_mels + 1));
  }
  Matrix fb(cfg.n_mels, n_bins);
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / static_cast<double>(n_fft);
      if (f > left && f <= center) {
        fb(m, k) = (f - left) / (center - left);
      } else if (f > center && f < right) {
        fb(m, k) = (right - f) / (right - center);
      }
    }
  }
  return fb;
}

// Orthonormal DCT-II basis, n_out x n_in.
inline Matrix dct_matrix(std::size_t n_out, std::size_t n_in) {
  Matrix d(n_out, n_in);
  const double n = static_cast<double>(n_in);
  for (std::size_t k = 0; k < n_out; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (std::size_t i = 0; i < n_in; ++i) {
      d(k, i) = scale * std::cos(M_PI * static_cast<double>(k) * (static_cast<double>(i) + 0.5) / n);
    }
  }
  return d;
}

inline std::vector<double> dct_ii(std::span<const double> x, std::size_t n_out) {
  const Matrix d = dct_matrix(n_out, x.size());
  std::vector<double> out(n_out, 0.0);
  for (std::size_t k = 0; k < n_out; ++k) {
    for (std::size_t i = 0; i < x.size(); ++i) out[k] += d(k, i) * x[i];
  }
  return out;
}

// Inverse of the full orthonormal DCT-II (its transpose).
inline std::vector<double> inverse_dct_ii(std::span<const double> c) {
  const Matrix d = dct_matrix(c.size(), c.size());
  std::vector<double> out(c.size(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t k = 0; k < c.size(); ++k) out[i] += d(k, i) * c[k];
  }
  return out;
}

// In-place iterative radix-2 FFT. Size must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const auto u = a[i + j];
        const auto v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Holds the window, filterbank and DCT basis so repeated frames share them.
class MfccExtractor {
 public:
  explicit MfccExtractor(const MfccConfig& cfg = {})
      : cfg_(cfg),
        window_(cfg.frame_len),
        filterbank_((cfg.validate(), mel_filterbank(cfg))),
        dct_(dct_matrix(cfg.n_coeffs, cfg.n_mels)) {
    for (std::size_t n = 0; n < cfg_.frame_len; ++n) {
      window_[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(n) /
                                         static_cast<double>(cfg_.frame_len));
    }
  }

  const MfccConfig& config() const noexcept { return cfg_; }
  const Matrix& filterbank() const noexcept { return filterbank_; }

  std::vector<double> power_spectrum(std::span<const double> frame) const {
    const std::size_t n_fft = cfg_.n_fft();
    std::vector<std::complex<double>> buf(n_fft, 0.0);
    for (std::size_t i = 0; i < cfg_.frame_len && i < frame.size(); ++i) {
      buf[i] = frame[i] * window_[i];
    }
    fft_inplace(buf);
    std::vector<double> power(n_fft / 2 + 1);
    for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(buf[k]);
    return power;
  }

  // Raw (un-logged) filterbank energies.
  std::vector<double> filter_energies(std::span<const double> frame) const {
    const auto power = power_spectrum(frame);
    std::vector<double> energies(cfg_.n_mels, 0.0);
    for (std::size_t m = 0; m < cfg_.n_mels; ++m) {
      const auto weights = filterbank_.row(m);
      double e = 0.0;
      for (std::size_t k = 0; k < power.size(); ++k) e += weights[k] * power[k];
      energies[m] = e;
    }
    return energies;
  }

  std::vector<double> log_energies(std::span<const double> frame) const {
    auto e = filter_energies(frame);
    for (double& v : e) v = std::log(std::max(v, cfg_.log_floor));
    return e;
  }

  void cepstrum(std::span<const double> frame, std::span<double> out) const {
    const auto logs = log_energies(frame);
    for (std::size_t k = 0; k < cfg_.n_coeffs; ++k) {
      double acc = 0.0;
      const auto basis = dct_.row(k);
      for (std::size_t m = 0; m < cfg_.n_mels; ++m) acc += basis[m] * logs[m];
      out[k] = acc;
    }
  }

  // T x n_coeffs static coefficients, c0 included.
  Matrix mfcc(const Matrix& frames) const {
    if (frames.rows() == 0) throw Error(ErrorCode::kEmptyInput, "no frames to analyse");
    Matrix out(frames.rows(), cfg_.n_coeffs);
    for (std::size_t t = 0; t < frames.rows(); ++t) cepstrum(frames.row(t), out.row(t));
    return out;
  }

 private:
  MfccConfig cfg_;
  std::vector<double> window_;
  Matrix filterbank_;
  Matrix dct_;
};

inline Matrix mfcc(const Matrix& frames, const MfccConfig& cfg = {}) {
  return MfccExtractor(cfg).mfcc(frames);
}

// Regression deltas d_t = sum_n n (c_{t+n} - c_{t-n}) / (2 sum_n n^2) with
// edge frames replicated. Returns [static | delta | delta-delta].
inline Matrix append_deltas(const Matrix& statics, std::size_t halfwidth = 2) {
  const std::size_t t_count = statics.rows();
  const std::size_t d = statics.cols();
  if (t_count == 0) throw Error(ErrorCode::kEmptyInput, "no frames for delta computation");
  double denom = 0.0;
  for (std::size_t n = 1; n <= halfwidth; ++n) denom += static_cast<double>(n * n);
  denom *= 2.0;

  const auto regress = [&](const Matrix& in) {
    Matrix out(t_count, d);
    const auto last = static_cast<std::ptrdiff_t>(t_count) - 1;
    for (std::size_t t = 0; t < t_count; ++t) {
      for (std::size_t n = 1; n <= halfwidth; ++n) {
        const auto ti = static_cast<std::ptrdiff_t>(t);
        const auto nn = static_cast<std::ptrdiff_t>(n);
        const auto fwd = static_cast<std::size_t>(std::min(ti + nn, last));
        const auto bwd = static_cast<std::size_t>(std::max(ti - nn, std::ptrdiff_t{0}));
        for (std::size_t c = 0; c < d; ++c) {
          out(t, c) += static_cast<double>(n) * (in(fwd, c) - in(bwd, c));
        }
      }
      for (std::size_t c = 0; c < d; ++c) out(t, c) /= denom;
    }
    return out;
  };

  const Matrix delta = regress(statics);
  const Matrix delta2 = regress(delta);
  Matrix out(t_count, 3 * d);
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t c = 0; c < d; ++c) {
      out(t, c) = statics(t, c);
      out(t, d + c) = delta(t, c);
      out(t, 2 * d + c) = delta2(t, c);
    }
  }
  return out;
}

inline FeatureMatrix extract_features(const Waveform& w, const MfccExtractor& extractor,
                                      std::string recording_id = {}) {
  const auto& cfg = extractor.config();
  const Matrix frames = frame_signal(w, cfg.frame_len, cfg.hop);
  FeatureMatrix fm;
  fm.recording_id = std::move(recording_id);
  fm.values = append_deltas(extractor.mfcc(frames), cfg.delta_halfwidth);
  return fm;
}

inline FeatureMatrix extract_features(const Waveform& w, const MfccConfig& cfg = {},
                                      std::string recording_id = {}) {
  return extract_features(w, MfccExtractor(cfg), std::move(recording_id));
}

// Headerless CSV, one frame per line. Values use the shortest exact decimal form.
inline std::string format_feature_csv(const FeatureMatrix& fm) {
  std::string out;
  for (std::size_t t = 0; t < fm.values.rows(); ++t) {
    const auto row = fm.values.row(t);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out.push_back(',');
      out += format_double(row[c]);
    }
    out.push_back('\n');
  }
  return out;
}

inline FeatureMatrix parse_feature_csv(std::string_view text, std::string recording_id) {
  FeatureMatrix fm;
  fm.recording_id = std::move(recording_id);
  std::vector<double> row;
  std::size_t line_no = 0;
  for (std::string_view rest = text; !rest.empty();) {
    const auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    row.clear();
    for (auto cell : split(line, ',')) {
      double v = 0.0;
      if (!parse_double(cell, v) || !std::isfinite(v)) {
        throw Error(ErrorCode::kParse, "feature line " + std::to_string(line_no) + ": bad value");
      }
      row.push_back(v);
    }
    if (row.size() != kFeatureDim) {
      throw Error(ErrorCode::kWidthMismatch, "feature line " + std::to_string(line_no) +
                                                 ": expected 39 columns, found " +
                                                 std::to_string(row.size()));
    }
    fm.values.append_row(row);
  }
  return fm;
}

inline void save_features(const std::filesystem::path& path, const FeatureMatrix& fm) {
  write_file(path, format_feature_csv(fm));
}

inline FeatureMatrix load_features(const std::filesystem::path& path, std::string recording_id) {
  return parse_feature_csv(read_file(path), std::move(recording_id));
}

}  // namespace dicova
