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

// Recording manifests, stratified fold assignment, subgroup slicing and the
// synthetic two-class corpus generator.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "dicova/audio.hpp"
#include "dicova/common.hpp"

namespace dicova {

enum class Label { kNonCovid = 0, kCovid = 1 };
enum class Gender { kMale, kFemale, kUnknown };
enum class Split { kDev, kTest };

inline constexpr int kMinAge = 15;
inline constexpr int kMaxAge = 80;
inline constexpr int kDefaultFolds = 5;

inline std::string_view to_string(Label l) { return l == Label::kCovid ? "covid" : "non_covid"; }
inline std::string_view to_string(Split s) { return s == Split::kDev ? "dev" : "test"; }
inline std::string_view to_string(Gender g) {
  switch (g) {
    case Gender::kMale: return "m";
    case Gender::kFemale: return "f";
    case Gender::kUnknown: return "u";
  }
  return "u";
}

struct RecordingMeta {
  std::string id;
  std::filesystem::path audio_path;
  Label label = Label::kNonCovid;
  Gender gender = Gender::kUnknown;
  std::optional<int> age;
  std::optional<int> fold;
  Split split = Split::kDev;

  bool is_covid() const noexcept { return label == Label::kCovid; }

  friend bool operator==(const RecordingMeta&, const RecordingMeta&) = default;
};

struct Manifest {
  std::vector<RecordingMeta> entries;
  int k_folds = kDefaultFolds;
  // Relative audio paths are resolved against this directory.
  std::filesystem::path base_dir;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }

  std::filesystem::path audio_file(const RecordingMeta& m) const {
    return m.audio_path.is_absolute() || base_dir.empty() ? m.audio_path
                                                          : base_dir / m.audio_path;
  }

  const RecordingMeta* find(std::string_view id) const {
    for (const auto& e : entries) {
      if (e.id == id) return &e;
    }
    return nullptr;
  }

  Manifest with_entries(std::vector<RecordingMeta> subset) const {
    Manifest m;
    m.entries = std::move(subset);
    m.k_folds = k_folds;
    m.base_dir = base_dir;
    return m;
  }

  Manifest split_view(Split s) const {
    std::vector<RecordingMeta> subset;
    for (const auto& e : entries) {
      if (e.split == s) subset.push_back(e);
    }
    return with_entries(std::move(subset));
  }

  std::size_t count_covid() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.is_covid(); }));
  }
};

inline constexpr std::string_view kManifestHeader = "id,path,label,gender,age,fold,split";

// Checks id uniqueness, the age range, the fold range, and (once every dev
// entry carries a fold) that each fold holds both classes.
inline void validate_manifest(const Manifest& m) {
  if (m.k_folds < 1) throw Error(ErrorCode::kInvalidArgument, "k_folds must be >= 1");
  std::unordered_set<std::string> seen;
  bool all_dev_folded = true;
  bool any_dev = false;
  for (const auto& e : m.entries) {
    if (e.id.empty()) throw Error(ErrorCode::kParse, "empty recording id");
    if (!seen.insert(e.id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate recording id \"" + e.id + "\"");
    }
    if (e.age && (*e.age < kMinAge || *e.age > kMaxAge)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "age " + std::to_string(*e.age) + " of \"" + e.id + "\" outside 15..80");
    }
    if (e.fold && (*e.fold < 1 || *e.fold > m.k_folds)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "fold " + std::to_string(*e.fold) + " of \"" + e.id + "\" outside 1.." +
                      std::to_string(m.k_folds));
    }
    if (e.split == Split::kDev) {
      any_dev = true;
      if (!e.fold) all_dev_folded = false;
    }
  }
  if (any_dev && all_dev_folded) {
    std::vector<int> pos(m.k_folds + 1, 0), neg(m.k_folds + 1, 0);
    for (const auto& e : m.entries) {
      if (e.split != Split::kDev) continue;
      (e.is_covid() ? pos : neg)[*e.fold]++;
    }
    for (int f = 1; f <= m.k_folds; ++f) {
      if (pos[f] == 0 || neg[f] == 0) {
        throw Error(ErrorCode::kSingleClass,
                    "fold " + std::to_string(f) + " lacks a covid or non_covid dev entry");
      }
    }
  }
}

inline Manifest parse_manifest(std::string_view text, int k_folds = kDefaultFolds) {
  Manifest m;
  m.k_folds = k_folds;
  std::size_t line_no = 0;
  bool saw_header = false;
  for (std::string_view rest = text; !rest.empty();) {
    const auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto where = [&] { return "manifest line " + std::to_string(line_no) + ": "; };
    if (!saw_header) {
      if (line != kManifestHeader) {
        throw Error(ErrorCode::kParse, where() + "expected header \"" +
                                           std::string(kManifestHeader) + "\"");
      }
      saw_header = true;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 7) {
      throw Error(ErrorCode::kParse,
                  where() + "expected 7 columns, found " + std::to_string(cols.size()));
    }
    RecordingMeta r;
    r.id = std::string(cols[0]);
    r.audio_path = std::filesystem::path(std::string(cols[1]));
    if (cols[2] == "covid") {
      r.label = Label::kCovid;
    } else if (cols[2] == "non_covid") {
      r.label = Label::kNonCovid;
    } else {
      throw Error(ErrorCode::kUnknownLabel,
                  where() + "unknown label \"" + std::string(cols[2]) + "\"");
    }
    if (cols[3] == "m") {
      r.gender = Gender::kMale;
    } else if (cols[3] == "f") {
      r.gender = Gender::kFemale;
    } else if (cols[3] == "u" || cols[3].empty()) {
      r.gender = Gender::kUnknown;
    } else {
      throw Error(ErrorCode::kParse, where() + "unknown gender \"" + std::string(cols[3]) + "\"");
    }
    if (!cols[4].empty()) {
      int age = 0;
      if (!parse_int(cols[4], age)) throw Error(ErrorCode::kParse, where() + "bad age");
      r.age = age;
    }
    if (!cols[5].empty()) {
      int fold = 0;
      if (!parse_int(cols[5], fold)) throw Error(ErrorCode::kParse, where() + "bad fold");
      r.fold = fold;
    }
    if (cols[6] == "dev") {
      r.split = Split::kDev;
    } else if (cols[6] == "test") {
      r.split = Split::kTest;
    } else {
      throw Error(ErrorCode::kParse, where() + "unknown split \"" + std::string(cols[6]) + "\"");
    }
    m.entries.push_back(std::move(r));
  }
  if (!saw_header) throw Error(ErrorCode::kParse, "manifest line 1: missing header");
  validate_manifest(m);
  return m;
}

inline Manifest load_manifest(const std::filesystem::path& path, int k_folds = kDefaultFolds) {
  Manifest m = parse_manifest(read_file(path), k_folds);
  m.base_dir = path.parent_path();
  return m;
}

inline std::string format_manifest(const Manifest& m) {
  std::string out(kManifestHeader);
  out.push_back('\n');
  for (const auto& e : m.entries) {
    out += e.id;
    out += ',';
    out += e.audio_path.generic_string();
    out += ',';
    out += to_string(e.label);
    out += ',';
    out += to_string(e.gender);
    out += ',';
    if (e.age) out += std::to_string(*e.age);
    out += ',';
    if (e.fold) out += std::to_string(*e.fold);
    out += ',';
    out += to_string(e.split);
    out += '\n';
  }
  return out;
}

inline void save_manifest(const std::filesystem::path& path, const Manifest& m) {
  write_file(path, format_manifest(m));
}

// Shuffled round-robin within each class over the dev entries. The counter
// carries over from the covid class into the non_covid class so that fold
// sizes stay balanced too. Test entries lose any fold.
inline Manifest assign_folds(const Manifest& manifest, int k, std::uint64_t seed) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    if (e.split != Split::kDev) continue;
    (e.is_covid() ? pos : neg).push_back(i);
  }
  if (pos.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::kInsufficientPositives,
                "need at least " + std::to_string(k) + " covid dev entries, found " +
                    std::to_string(pos.size()));
  }
  if (neg.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::kInsufficientPositives,
                "need at least " + std::to_string(k) + " non_covid dev entries, found " +
                    std::to_string(neg.size()));
  }
  Manifest out = manifest;
  out.k_folds = k;
  for (auto& e : out.entries) {
    if (e.split == Split::kTest) e.fold.reset();
  }
  Rng rng(seed);
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::size_t counter = 0;
  for (const auto* group : {&pos, &neg}) {
    for (std::size_t idx : *group) {
      out.entries[idx].fold = static_cast<int>(counter % static_cast<std::size_t>(k)) + 1;
      ++counter;
    }
  }
  validate_manifest(out);
  return out;
}

using MetaPredicate = std::function<bool(const RecordingMeta&)>;

inline Manifest filter_subgroup(const Manifest& manifest, const MetaPredicate& keep) {
  std::vector<RecordingMeta> subset;
  for (const auto& e : manifest.entries) {
    if (keep(e)) subset.push_back(e);
  }
  return manifest.with_entries(std::move(subset));
}

// Predicates for the usual fairness slices. Unknown metadata never matches.
inline MetaPredicate gender_is(Gender g) {
  return [g](const RecordingMeta& m) { return g != Gender::kUnknown && m.gender == g; };
}
inline MetaPredicate age_at_least(int years) {
  return [years](const RecordingMeta& m) { return m.age && *m.age >= years; };
}
inline MetaPredicate age_below(int years) {
  return [years](const RecordingMeta& m) { return m.age && *m.age < years; };
}
inline MetaPredicate label_is(Label l) {
  return [l](const RecordingMeta& m) { return m.label == l; };
}

// ---------------------------------------------------------------------------
// Synthetic corpus

struct SynthSpec {
  std::size_t n_recordings = 200;
  double positive_fraction = 0.1;
  double min_duration_s = 1.0;
  double max_duration_s = 2.0;
  std::uint32_t sample_rate = kTargetRate;
  std::uint64_t seed = 7;
  // Share of each class routed to the test split.
  double test_fraction = 0.0;

  void validate() const {
    if (!(positive_fraction > 0.0 && positive_fraction < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "positive_fraction must lie in (0,1)");
    }
    if (min_duration_s < 0.5 || max_duration_s < min_duration_s) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duration range must satisfy 0.5 <= min <= max seconds");
    }
    if (sample_rate == 0) throw Error(ErrorCode::kInvalidArgument, "sample_rate must be > 0");
    if (test_fraction < 0.0 || test_fraction >= 1.0) {
      throw Error(ErrorCode::kInvalidArgument, "test_fraction must lie in [0,1)");
    }
  }
};

namespace synth_detail {

struct Band {
  double lo_hz;
  double hi_hz;
};
inline constexpr Band kLowBand{300.0, 900.0};
inline constexpr Band kHighBand{2000.0, 6000.0};

// Positive clips: fast burst trains dominated by the 300-900 Hz band.
// Negative clips: slower trains dominated by the 2-6 kHz band.
inline Waveform synthesize_clip(bool covid, double duration_s, std::uint32_t rate, Rng& rng) {
  const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * rate));
  Waveform w;
  w.rate = rate;
  w.samples.assign(n, 0.0);

  const double period = covid ? rng.uniform(0.18, 0.28) : rng.uniform(0.35, 0.55);
  const double low_amp = covid ? rng.uniform(0.6, 1.0) : rng.uniform(0.05, 0.25);
  const double high_amp = covid ? rng.uniform(0.05, 0.25) : rng.uniform(0.6, 1.0);
  const double nyquist = 0.5 * rate;

  struct Tone {
    double freq, phase, amp;
  };
  std::vector<Tone> tones;
  for (int i = 0; i < 3; ++i) {
    tones.push_back({rng.uniform(kLowBand.lo_hz, kLowBand.hi_hz), rng.uniform(0.0, 2 * M_PI),
                     low_amp / 3.0});
  }
  for (int i = 0; i < 3; ++i) {
    const double f = rng.uniform(kHighBand.lo_hz, kHighBand.hi_hz);
    tones.push_back({std::min(f, 0.9 * nyquist), rng.uniform(0.0, 2 * M_PI), high_amp / 3.0});
  }

  const double gain = rng.uniform(0.3, 0.9);
  double t_burst = rng.uniform(0.02, 0.1);
  while (t_burst < duration_s) {
    const double burst_len = period * rng.uniform(0.4, 0.6);
    const auto start = static_cast<std::size_t>(t_burst * rate);
    const auto len = static_cast<std::size_t>(burst_len * rate);
    for (std::size_t k = 0; k < len && start + k < n; ++k) {
      const double t = static_cast<double>(start + k) / rate;
      const double env = 0.5 - 0.5 * std::cos(2 * M_PI * static_cast<double>(k) / len);
      double v = 0.0;
      for (const auto& tone : tones) v += tone.amp * std::sin(2 * M_PI * tone.freq * t + tone.phase);
      v += 0.03 * rng.normal();
      w.samples[start + k] += gain * env * v;
    }
    t_burst += period * rng.uniform(0.9, 1.1);
  }
  // Low-level floor well under the activity threshold.
  for (double& s : w.samples) s += rng.uniform(-5e-4, 5e-4);

  double peak = 0.0;
  for (double s : w.samples) peak = std::max(peak, std::abs(s));
  if (peak > 0.95) {
    for (double& s : w.samples) s *= 0.95 / peak;
  }
  return w;
}

}  // namespace synth_detail

// Writes <out_dir>/audio/<id>.wav for every recording and <out_dir>/manifest.csv.
// Folds are left unassigned; see assign_folds.
inline Manifest generate_synthetic_corpus(const SynthSpec& spec,
                                          const std::filesystem::path& out_dir) {
  spec.validate();
  std::filesystem::create_directories(out_dir);
  const std::size_t n = spec.n_recordings;
  const auto n_pos = static_cast<std::size_t>(std::llround(n * spec.positive_fraction));

  Rng meta_rng(spec.seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  meta_rng.shuffle(order);
  std::vector<bool> covid(n, false);
  for (std::size_t i = 0; i < n_pos; ++i) covid[order[i]] = true;

  std::vector<bool> is_test(n, false);
  for (bool cls : {true, false}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (covid[i] == cls) members.push_back(i);
    }
    meta_rng.shuffle(members);
    const auto n_test =
        static_cast<std::size_t>(std::llround(members.size() * spec.test_fraction));
    for (std::size_t i = 0; i < n_test; ++i) is_test[members[i]] = true;
  }

  Manifest m;
  m.base_dir = out_dir;
  const std::size_t width = std::max<std::size_t>(4, std::to_string(n).size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::string digits = std::to_string(i);
    RecordingMeta r;
    r.id = "syn" + std::string(width - digits.size(), '0') + digits;
    r.audio_path = std::filesystem::path("audio") / (r.id + ".wav");
    r.label = covid[i] ? Label::kCovid : Label::kNonCovid;
    const double g = meta_rng.uniform();
    r.gender = g < 0.05 ? Gender::kUnknown : (g < 0.72 ? Gender::kMale : Gender::kFemale);
    // Skewed toward younger participants, as crowd-sourced pools tend to be.
    r.age = kMinAge + static_cast<int>(std::floor(66.0 * std::pow(meta_rng.uniform(), 1.6)));
    r.split = is_test[i] ? Split::kTest : Split::kDev;

    Rng clip_rng(fnv1a(r.id, spec.seed * 0x9e3779b97f4a7c15ULL + 1));
    const double duration = clip_rng.uniform(spec.min_duration_s, spec.max_duration_s);
    const Waveform w =
        synth_detail::synthesize_clip(covid[i], duration, spec.sample_rate, clip_rng);
    write_pcm_wav(out_dir / r.audio_path, w);
    m.entries.push_back(std::move(r));
  }
  validate_manifest(m);
  save_manifest(out_dir / "manifest.csv", m);
  return m;
}

}  // namespace dicova
