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

// PCM WAV ingestion and the recording-level preprocessing chain:
// peak normalization, edge trimming and sample-wise sound activity filtering.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dicova/common.hpp"

namespace dicova {

inline constexpr std::uint32_t kTargetRate = 44100;
inline constexpr std::size_t kAnalysisFrameLen = 1024;

struct Waveform {
  std::vector<double> samples;
  std::uint32_t rate = kTargetRate;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double duration_ms() const {
    return 1000.0 * static_cast<double>(samples.size()) / static_cast<double>(rate);
  }

  friend bool operator==(const Waveform&, const Waveform&) = default;
};

struct PreprocessConfig {
  double sad_threshold = 0.01;
  double sad_buffer_ms = 50.0;
  double edge_trim_ms = 20.0;
  double min_duration_ms = 500.0;

  void validate() const {
    if (sad_threshold < 0.0 || sad_threshold >= 1.0 || sad_buffer_ms < 0.0 ||
        edge_trim_ms < 0.0 || min_duration_ms < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "invalid preprocessing configuration");
    }
  }
};

namespace wav_detail {

inline std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}
inline std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}
inline void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace wav_detail

// Decodes RIFF/WAVE 16-bit PCM (mono or stereo). Stereo is averaged to mono.
inline Waveform decode_pcm_wav(std::string_view bytes) {
  using namespace wav_detail;
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t size = bytes.size();
  if (size < 12 || std::memcmp(data, "RIFF", 4) != 0 || std::memcmp(data + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::kMalformedHeader, "not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= size) {
    const unsigned char* chunk = data + pos;
    const std::uint32_t chunk_size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (chunk_size < 16 || body + chunk_size > size) {
        throw Error(ErrorCode::kMalformedHeader, "truncated fmt chunk");
      }
      std::uint16_t format = le16(data + body);
      channels = le16(data + body + 2);
      rate = le32(data + body + 4);
      const std::uint16_t bits = le16(data + body + 14);
      if (format == 0xFFFE && chunk_size >= 26) format = le16(data + body + 24);
      if (format != 1) {
        throw Error(ErrorCode::kUnsupportedEncoding,
                    "unsupported WAV format tag " + std::to_string(format));
      }
      if (bits != 16) {
        throw Error(ErrorCode::kUnsupportedEncoding,
                    "unsupported bit depth " + std::to_string(bits) + " (16-bit PCM only)");
      }
      if (channels != 1 && channels != 2) {
        throw Error(ErrorCode::kUnsupportedEncoding,
                    "unsupported channel count " + std::to_string(channels));
      }
      if (rate == 0) throw Error(ErrorCode::kMalformedHeader, "zero sample rate");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw Error(ErrorCode::kMalformedHeader, "data chunk before fmt chunk");
      if (body + chunk_size > size) {
        throw Error(ErrorCode::kMalformedHeader, "data chunk extends past end of file");
      }
      const std::size_t frame_bytes = 2u * channels;
      const std::size_t frames = chunk_size / frame_bytes;
      Waveform w;
      w.rate = rate;
      w.samples.resize(frames);
      const unsigned char* p = data + body;
      for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < channels; ++c) {
          const auto v = static_cast<std::int16_t>(le16(p));
          acc += static_cast<double>(v) / 32768.0;
          p += 2;
        }
        w.samples[i] = acc / channels;
      }
      return w;
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }
  throw Error(ErrorCode::kMalformedHeader, have_fmt ? "missing data chunk" : "missing fmt chunk");
}

inline Waveform read_pcm_wav(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_pcm_wav(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

// Mono 16-bit PCM, the inverse of the decoder's 1/32768 scaling. Values
// outside the representable range saturate.
inline std::string encode_pcm_wav(const Waveform& w) {
  using namespace wav_detail;
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out.append("RIFF");
  put32(out, 36 + data_bytes);
  out.append("WAVEfmt ");
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, w.rate);
  put32(out, w.rate * 2);
  put16(out, 2);
  put16(out, 16);
  out.append("data");
  put32(out, data_bytes);
  for (double s : w.samples) {
    const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    const auto q = static_cast<std::int16_t>(scaled);
    put16(out, static_cast<std::uint16_t>(q));
  }
  return out;
}

inline void write_pcm_wav(const std::filesystem::path& path, const Waveform& w) {
  write_file(path, encode_pcm_wav(w));
}

// Linear interpolation onto a new sample grid. Output length is
// round(n * target / source); positions past the last input sample hold it.
inline Waveform resample(const Waveform& w, std::uint32_t target_rate) {
  if (target_rate == 0) throw Error(ErrorCode::kInvalidArgument, "target rate must be positive");
  if (w.rate == target_rate) return w;
  const std::uint64_t n = w.samples.size();
  const std::uint64_t out_len = (n * target_rate * 2 + w.rate) / (2ull * w.rate);
  Waveform out;
  out.rate = target_rate;
  out.samples.resize(out_len);
  for (std::uint64_t j = 0; j < out_len; ++j) {
    const std::uint64_t num = j * w.rate;
    const std::uint64_t i0 = num / target_rate;
    const double frac = static_cast<double>(num % target_rate) / target_rate;
    if (i0 + 1 >= n) {
      out.samples[j] = w.samples[n - 1];
    } else {
      const double a = w.samples[i0];
      const double b = w.samples[i0 + 1];
      out.samples[j] = a + (b - a) * frac;
    }
  }
  return out;
}

inline Waveform normalize_amplitude(const Waveform& w) {
  double peak = 0.0;
  for (double s : w.samples) peak = std::max(peak, std::abs(s));
  if (peak == 0.0) return w;
  Waveform out = w;
  for (double& s : out.samples) s /= peak;
  return out;
}

inline std::size_t ms_to_samples(double ms, std::uint32_t rate) {
  return static_cast<std::size_t>(std::llround(ms * rate / 1000.0));
}

// Keeps sample i iff some sample within +-buffer of i reaches the threshold.
// Retained samples are concatenated in order.
inline Waveform sound_activity_filter(const Waveform& w, double threshold, double buffer_ms) {
  const std::size_t n = w.samples.size();
  const std::size_t buffer = ms_to_samples(buffer_ms, w.rate);
  // prefix[i] = number of loud samples in [0, i)
  std::vector<std::size_t> prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    prefix[i + 1] = prefix[i] + (std::abs(w.samples[i]) >= threshold ? 1 : 0);
  }
  Waveform out;
  out.rate = w.rate;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= buffer ? i - buffer : 0;
    const std::size_t hi = std::min(n, i + buffer + 1);
    if (prefix[hi] > prefix[lo]) out.samples.push_back(w.samples[i]);
  }
  return out;
}

inline Waveform trim_edges(const Waveform& w, double edge_trim_ms) {
  const std::size_t cut = ms_to_samples(edge_trim_ms, w.rate);
  Waveform out;
  out.rate = w.rate;
  if (2 * cut >= w.samples.size()) return out;
  out.samples.assign(w.samples.begin() + static_cast<std::ptrdiff_t>(cut),
                     w.samples.end() - static_cast<std::ptrdiff_t>(cut));
  return out;
}

// normalize -> trim -> SAD. Input must already be at 44.1 kHz.
inline Waveform preprocess(const Waveform& w, const PreprocessConfig& cfg = {}) {
  cfg.validate();
  if (w.rate != kTargetRate) {
    throw Error(ErrorCode::kInvalidArgument,
                "preprocess expects " + std::to_string(kTargetRate) + " Hz input, got " +
                    std::to_string(w.rate));
  }
  if (w.duration_ms() < cfg.min_duration_ms) {
    throw Error(ErrorCode::kTooShort, "recording lasts " + std::to_string(w.duration_ms()) +
                                          " ms, below the " +
                                          std::to_string(cfg.min_duration_ms) + " ms minimum");
  }
  Waveform out = normalize_amplitude(w);
  out = trim_edges(out, cfg.edge_trim_ms);
  out = sound_activity_filter(out, cfg.sad_threshold, cfg.sad_buffer_ms);
  if (out.samples.size() < kAnalysisFrameLen) {
    throw Error(ErrorCode::kNoActivity,
                "only " + std::to_string(out.samples.size()) +
                    " samples survive sound activity filtering");
  }
  return out;
}

}  // namespace dicova
