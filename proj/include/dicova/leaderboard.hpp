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

// Ticketed scoring service. All state changes go through an append-only
// JSON-lines journal; the in-memory state is a fold over that journal.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "dicova/common.hpp"
#include "dicova/corpus.hpp"
#include "dicova/eval.hpp"

namespace dicova {

inline constexpr int kTicketsPerTeam = 25;

enum class Track { kVal, kTest };

inline std::string_view to_string(Track t) { return t == Track::kVal ? "val" : "test"; }

inline Track parse_track(std::string_view s) {
  if (s == "val") return Track::kVal;
  if (s == "test") return Track::kTest;
  throw Error(ErrorCode::kUnknownTrack, "unknown track \"" + std::string(s) + "\"");
}

struct Team {
  std::string team_id;
  std::string token;
  int tickets_remaining = kTicketsPerTeam;
};

struct SubmissionRecord {
  std::string team_id;
  std::uint64_t sequence_no = 0;
  std::int64_t received_at_ms = 0;
  Track track = Track::kTest;
  MetricsReport metrics;

  friend bool operator==(const SubmissionRecord&, const SubmissionRecord&) = default;
};

struct LeaderboardRow {
  std::string team_id;
  double best_auc = 0.0;
  double best_spec_at_80sens = 0.0;
  std::int64_t achieved_at_ms = 0;

  friend bool operator==(const LeaderboardRow&, const LeaderboardRow&) = default;
};

// Server-held labels per track. Never serialized into any response.
struct GroundTruth {
  LabelMap val;
  LabelMap test;

  const LabelMap& at(Track t) const { return t == Track::kVal ? val : test; }

  // Dev entries form the validation track, test entries the test track.
  static GroundTruth from_manifest(const Manifest& m) {
    GroundTruth g;
    for (const auto& e : m.entries) (e.split == Split::kDev ? g.val : g.test).emplace(e.id, e.label);
    return g;
  }
};

// ---------------------------------------------------------------------------
// Journal records

inline nlohmann::ordered_json registration_record(const Team& t, std::int64_t at_ms) {
  return {{"type", "register"}, {"team_id", t.team_id}, {"token", t.token}, {"at", at_ms}};
}

inline nlohmann::ordered_json submission_record(const SubmissionRecord& s) {
  return {{"type", "submission"},
          {"team_id", s.team_id},
          {"seq", s.sequence_no},
          {"at", s.received_at_ms},
          {"track", to_string(s.track)},
          {"auc", s.metrics.auc},
          {"spec_at_80sens", s.metrics.spec_at_80sens},
          {"sens_at_95spec", s.metrics.sens_at_95spec},
          {"n_pos", s.metrics.n_pos},
          {"n_neg", s.metrics.n_neg}};
}

// Pure state: teams, tickets and accepted submissions.
class LeaderboardState {
 public:
  const Team* team_by_token(const std::string& token) const {
    const auto it = token_index_.find(token);
    return it == token_index_.end() ? nullptr : &teams_.at(it->second);
  }
  const Team* team(const std::string& team_id) const {
    const auto it = teams_.find(team_id);
    return it == teams_.end() ? nullptr : &it->second;
  }
  const std::map<std::string, Team>& teams() const noexcept { return teams_; }
  const std::vector<SubmissionRecord>& submissions() const noexcept { return submissions_; }

  std::uint64_t next_sequence(const std::string& team_id) const {
    const auto it = last_seq_.find(team_id);
    return it == last_seq_.end() ? 1 : it->second + 1;
  }

  void apply_registration(const Team& t) {
    if (teams_.count(t.team_id)) {
      throw Error(ErrorCode::kDuplicateName, "team \"" + t.team_id + "\" already registered");
    }
    if (t.token.empty() || token_index_.count(t.token)) {
      throw Error(ErrorCode::kInvalidArgument, "team token missing or reused");
    }
    Team fresh{t.team_id, t.token, kTicketsPerTeam};
    token_index_.emplace(t.token, t.team_id);
    teams_.emplace(t.team_id, std::move(fresh));
  }

  void apply_submission(const SubmissionRecord& s) {
    const auto it = teams_.find(s.team_id);
    if (it == teams_.end()) throw Error(ErrorCode::kAuth, "submission for unknown team \"" + s.team_id + "\"");
    if (it->second.tickets_remaining <= 0) {
      throw Error(ErrorCode::kQuota, "team \"" + s.team_id + "\" has no tickets left");
    }
    if (s.sequence_no != next_sequence(s.team_id)) {
      throw Error(ErrorCode::kInvalidArgument, "out-of-order sequence number for \"" + s.team_id + "\"");
    }
    --it->second.tickets_remaining;
    last_seq_[s.team_id] = s.sequence_no;
    submissions_.push_back(s);
  }

  // Best AUC per team, descending; ties go to whoever reached it first.
  std::vector<LeaderboardRow> rankings(Track track) const {
    struct Best {
      LeaderboardRow row;
      std::size_t order;
    };
    std::map<std::string, Best> best;
    for (std::size_t i = 0; i < submissions_.size(); ++i) {
      const auto& s = submissions_[i];
      if (s.track != track) continue;
      auto it = best.find(s.team_id);
      if (it == best.end() || s.metrics.auc > it->second.row.best_auc) {
        best[s.team_id] = {{s.team_id, s.metrics.auc, s.metrics.spec_at_80sens, s.received_at_ms}, i};
      }
    }
    std::vector<Best> rows;
    for (auto& [_, b] : best) rows.push_back(b);
    std::sort(rows.begin(), rows.end(), [](const Best& a, const Best& b) {
      if (a.row.best_auc != b.row.best_auc) return a.row.best_auc > b.row.best_auc;
      if (a.row.achieved_at_ms != b.row.achieved_at_ms) return a.row.achieved_at_ms < b.row.achieved_at_ms;
      return a.order < b.order;
    });
    std::vector<LeaderboardRow> out;
    for (auto& r : rows) out.push_back(std::move(r.row));
    return out;
  }

  void apply_record(const nlohmann::json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "register") {
      apply_registration({j.at("team_id").get<std::string>(), j.at("token").get<std::string>(),
                          kTicketsPerTeam});
    } else if (type == "submission") {
      SubmissionRecord s;
      s.team_id = j.at("team_id").get<std::string>();
      s.sequence_no = j.at("seq").get<std::uint64_t>();
      s.received_at_ms = j.at("at").get<std::int64_t>();
      s.track = parse_track(j.at("track").get<std::string>());
      s.metrics.auc = j.at("auc").get<double>();
      s.metrics.spec_at_80sens = j.at("spec_at_80sens").get<double>();
      s.metrics.sens_at_95spec = j.at("sens_at_95spec").get<double>();
      s.metrics.n_pos = j.at("n_pos").get<std::size_t>();
      s.metrics.n_neg = j.at("n_neg").get<std::size_t>();
      apply_submission(s);
    } else {
      throw Error(ErrorCode::kCorruptJournal, "unknown record type \"" + type + "\"");
    }
  }

 private:
  std::map<std::string, Team> teams_;
  std::unordered_map<std::string, std::string> token_index_;
  std::unordered_map<std::string, std::uint64_t> last_seq_;
  std::vector<SubmissionRecord> submissions_;
};

struct Recovery {
  LeaderboardState state;
  std::size_t records = 0;
  // Set when replay stopped early; state holds everything before that record.
  std::optional<Error> corruption;
};

// Replays the journal. A missing file is an empty journal.
inline Recovery recover(const std::filesystem::path& journal_path) {
  Recovery r;
  if (!std::filesystem::exists(journal_path)) return r;
  const std::string text = read_file(journal_path);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    const auto nl = text.find('\n', pos);
    const auto fail = [&](const std::string& why) {
      r.corruption = Error(ErrorCode::kCorruptJournal,
                           journal_path.string() + ": record " + std::to_string(line_no) + ": " + why);
    };
    if (nl == std::string::npos) {
      fail("truncated record (no line terminator)");
      return r;
    }
    const std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    try {
      r.state.apply_record(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      fail(e.what());
      return r;
    } catch (const Error& e) {
      fail(e.what());
      return r;
    }
    ++r.records;
  }
  return r;
}

// Line-delimited append-only log. Each append is flushed before returning.
class Journal {
 public:
  explicit Journal(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    file_ = std::fopen(path_.c_str(), "ab");
    if (!file_) throw Error(ErrorCode::kIo, "cannot open journal " + path_.string());
  }
  Journal(const Journal&) = delete;
  Journal& operator=(const Journal&) = delete;
  ~Journal() {
    if (file_) std::fclose(file_);
  }

  void append(const nlohmann::ordered_json& record) {
    const std::string line = record.dump() + "\n";
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0) {
      throw Error(ErrorCode::kIo, "journal append failed");
    }
  }

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
};

struct SubmissionResult {
  MetricsReport metrics;
  int tickets_remaining = 0;
};

// Thread-safe front end. Writers (registration, accepted submissions) are
// serialized; rankings read a consistent snapshot under a shared lock.
class LeaderboardService {
 public:
  using Clock = std::function<std::int64_t()>;

  static std::int64_t system_clock_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  }

  // Replays an existing journal; refuses to start on a corrupt one.
  LeaderboardService(GroundTruth truth, const std::filesystem::path& journal_path,
                     Clock clock = system_clock_ms)
      : truth_(std::move(truth)), clock_(std::move(clock)) {
    Recovery r = recover(journal_path);
    if (r.corruption) throw *r.corruption;
    state_ = std::move(r.state);
    journal_.emplace(journal_path);
  }

  Team register_team(const std::string& name) {
    if (name.empty() || name.size() > 64 ||
        name.find_first_of("\n\r\t \"\\/") != std::string::npos) {
      throw Error(ErrorCode::kMalformed, "team name must be 1-64 characters without whitespace, quotes or slashes");
    }
    std::unique_lock lock(mu_);
    if (state_.team(name)) throw Error(ErrorCode::kDuplicateName, "team \"" + name + "\" already registered");
    Team t{name, fresh_token(), kTicketsPerTeam};
    journal_->append(registration_record(t, clock_()));
    state_.apply_registration(t);
    return t;
  }

  SubmissionResult submit(const std::string& token, Track track, std::string_view score_text) {
    std::string team_id;
    {
      std::shared_lock lock(mu_);
      const Team* t = state_.team_by_token(token);
      if (!t) throw Error(ErrorCode::kAuth, "unknown or missing token");
      if (t->tickets_remaining <= 0) throw Error(ErrorCode::kQuota, "all 25 tickets used");
      team_id = t->team_id;
    }

    ScoreFile scores;
    try {
      scores = parse_score_file(score_text);
    } catch (const Error& e) {
      throw Error(ErrorCode::kMalformed, e.what());
    }
    const LabelMap& labels = truth_.at(track);
    check_id_sets(scores, labels);
    const MetricsReport metrics = evaluate(scores, labels);

    std::unique_lock lock(mu_);
    const Team* t = state_.team(team_id);
    if (t->tickets_remaining <= 0) throw Error(ErrorCode::kQuota, "all 25 tickets used");
    SubmissionRecord rec{team_id, state_.next_sequence(team_id), clock_(), track, metrics};
    journal_->append(submission_record(rec));
    state_.apply_submission(rec);
    return {metrics, state_.team(team_id)->tickets_remaining};
  }

  std::vector<LeaderboardRow> rankings(Track track) const {
    std::shared_lock lock(mu_);
    return state_.rankings(track);
  }

  std::optional<int> tickets_remaining(const std::string& team_id) const {
    std::shared_lock lock(mu_);
    const Team* t = state_.team(team_id);
    return t ? std::optional<int>(t->tickets_remaining) : std::nullopt;
  }

  std::size_t accepted_submissions(const std::string& team_id) const {
    std::shared_lock lock(mu_);
    return static_cast<std::size_t>(std::count_if(
        state_.submissions().begin(), state_.submissions().end(),
        [&](const SubmissionRecord& s) { return s.team_id == team_id; }));
  }

 private:
  static void check_id_sets(const ScoreFile& scores, const LabelMap& labels) {
    std::vector<std::string> missing, extra;
    for (const auto& [id, _] : labels) {
      if (!scores.find(id)) missing.push_back(id);
    }
    for (const auto& e : scores.entries()) {
      if (!labels.count(e.id)) extra.push_back(e.id);
    }
    if (missing.empty() && extra.empty()) return;
    std::sort(missing.begin(), missing.end());
    std::sort(extra.begin(), extra.end());
    const auto list = [](const std::vector<std::string>& ids) {
      std::string s;
      for (std::size_t i = 0; i < ids.size() && i < 10; ++i) s += (i ? ", " : "") + ids[i];
      if (ids.size() > 10) s += ", ... (" + std::to_string(ids.size()) + " total)";
      return s;
    };
    std::string msg = "score file ids do not match the track";
    if (!missing.empty()) msg += "; missing: " + list(missing);
    if (!extra.empty()) msg += "; extra: " + list(extra);
    throw Error(ErrorCode::kIdMismatch, msg);
  }

  std::string fresh_token() {
    std::random_device rd;
    static constexpr char kHex[] = "0123456789abcdef";
    for (;;) {
      std::string token;
      for (int i = 0; i < 8; ++i) {
        const std::uint32_t v = rd();
        for (int b = 0; b < 4; ++b) token.push_back(kHex[(v >> (8 * b + 4)) & 0xf]), token.push_back(kHex[(v >> (8 * b)) & 0xf]);
      }
      if (!state_.team_by_token(token)) return token;
    }
  }

  GroundTruth truth_;
  Clock clock_;
  mutable std::shared_mutex mu_;
  LeaderboardState state_;
  std::optional<Journal> journal_;
};

}  // namespace dicova
