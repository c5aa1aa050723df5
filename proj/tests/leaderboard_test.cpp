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

#include <atomic>
#include <filesystem>
#include <set>
#include <thread>

#include "dicova/leaderboard.hpp"
#include "dicova/leaderboard_http.hpp"

namespace dicova {
namespace {

namespace fs = std::filesystem;

fs::path fresh_journal(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "dicova_leaderboard_test";
  fs::create_directories(dir);
  const auto p = dir / (name + ".jsonl");
  fs::remove(p);
  return p;
}

// Track "test": t0..t9, covid iff index < 3. Track "val": v0..v5, covid iff index < 2.
GroundTruth truth() {
  GroundTruth g;
  for (int i = 0; i < 10; ++i) g.test["t" + std::to_string(i)] = i < 3 ? Label::kCovid : Label::kNonCovid;
  for (int i = 0; i < 6; ++i) g.val["v" + std::to_string(i)] = i < 2 ? Label::kCovid : Label::kNonCovid;
  return g;
}

// Perfect ranking when quality = 1; quality = 0 inverts it.
std::string test_scores(double quality) {
  std::string out;
  for (int i = 0; i < 10; ++i) {
    const double good = i < 3 ? 0.9 - 0.01 * i : 0.1 + 0.01 * i;
    const double s = quality * good + (1 - quality) * (1 - good);
    out += "t" + std::to_string(i) + " " + format_fixed(s, 4) + "\n";
  }
  return out;
}

std::string val_scores() {
  std::string out;
  for (int i = 0; i < 6; ++i) out += "v" + std::to_string(i) + (i < 2 ? " 0.8\n" : " 0.2\n");
  return out;
}

struct Counter {
  std::shared_ptr<std::atomic<std::int64_t>> t = std::make_shared<std::atomic<std::int64_t>>(1000);
  LeaderboardService::Clock clock() const {
    auto p = t;
    return [p] { return p->fetch_add(1); };
  }
};

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kInvalidArgument;
}

TEST(RegisterTest, TicketsAndUniqueness) {
  LeaderboardService svc(truth(), fresh_journal("register"));
  const Team leap = svc.register_team("leap");
  EXPECT_EQ(leap.tickets_remaining, 25);
  EXPECT_EQ(leap.token.size(), 64u);
  EXPECT_EQ(code_of([&] { svc.register_team("leap"); }), ErrorCode::kDuplicateName);
  const Team other = svc.register_team("other");
  EXPECT_NE(leap.token, other.token);
  EXPECT_EQ(code_of([&] { svc.register_team("bad name"); }), ErrorCode::kMalformed);
}

TEST(SubmitTest, PerfectScoresGiveAucOne) {
  LeaderboardService svc(truth(), fresh_journal("perfect"));
  const Team t = svc.register_team("a");
  const auto r = svc.submit(t.token, Track::kTest, test_scores(1.0));
  EXPECT_DOUBLE_EQ(r.metrics.auc, 1.0);
  EXPECT_EQ(r.tickets_remaining, 24);
  const auto v = svc.submit(t.token, Track::kVal, val_scores());
  EXPECT_DOUBLE_EQ(v.metrics.auc, 1.0);
  EXPECT_EQ(v.tickets_remaining, 23);
}

TEST(SubmitTest, QuotaAfterTwentyFive) {
  LeaderboardService svc(truth(), fresh_journal("quota"));
  const Team t = svc.register_team("a");
  for (int i = 0; i < 25; ++i) {
    EXPECT_EQ(svc.submit(t.token, i % 2 ? Track::kVal : Track::kTest, i % 2 ? val_scores() : test_scores(1.0))
                  .tickets_remaining,
              24 - i);
  }
  EXPECT_EQ(code_of([&] { svc.submit(t.token, Track::kTest, test_scores(1.0)); }), ErrorCode::kQuota);
  EXPECT_EQ(svc.tickets_remaining("a"), 0);
  EXPECT_EQ(svc.accepted_submissions("a"), 25u);
}

TEST(SubmitTest, RejectionsKeepTickets) {
  LeaderboardService svc(truth(), fresh_journal("reject"));
  const Team t = svc.register_team("a");
  EXPECT_EQ(code_of([&] { svc.submit("nope", Track::kTest, test_scores(1.0)); }), ErrorCode::kAuth);
  EXPECT_EQ(code_of([&] { svc.submit(t.token, Track::kTest, "t0 abc\n"); }), ErrorCode::kMalformed);
  EXPECT_EQ(code_of([&] { svc.submit(t.token, Track::kTest, "t0 1.5\n"); }), ErrorCode::kMalformed);
  std::string missing = test_scores(1.0);
  missing = missing.substr(missing.find('\n') + 1);  // drop t0
  try {
    svc.submit(t.token, Track::kTest, missing);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIdMismatch);
    EXPECT_NE(std::string(e.what()).find("t0"), std::string::npos);
  }
  EXPECT_EQ(code_of([&] { svc.submit(t.token, Track::kVal, test_scores(1.0)); }), ErrorCode::kIdMismatch);
  EXPECT_EQ(code_of([&] { svc.submit(t.token, Track::kTest, test_scores(1.0) + "extra 0.5\n"); }),
            ErrorCode::kIdMismatch);
  EXPECT_EQ(svc.tickets_remaining("a"), 25);
  EXPECT_EQ(svc.accepted_submissions("a"), 0u);
}

TEST(RankingTest, BestAucThenEarliest) {
  Counter clock;
  LeaderboardService svc(truth(), fresh_journal("rank"), clock.clock());
  EXPECT_TRUE(svc.rankings(Track::kTest).empty());
  const Team a = svc.register_team("A");
  const Team b = svc.register_team("B");
  const Team c = svc.register_team("C");
  svc.submit(b.token, Track::kTest, test_scores(1.0));
  svc.submit(a.token, Track::kTest, test_scores(0.0));
  svc.submit(a.token, Track::kTest, test_scores(1.0));
  svc.submit(c.token, Track::kTest, test_scores(0.0));
  svc.submit(b.token, Track::kTest, test_scores(0.0));  // a worse later result does not lower B
  const auto rows = svc.rankings(Track::kTest);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].team_id, "B");  // tied with A at 1.0, reached it first
  EXPECT_EQ(rows[1].team_id, "A");
  EXPECT_EQ(rows[2].team_id, "C");
  EXPECT_DOUBLE_EQ(rows[0].best_auc, 1.0);
  EXPECT_TRUE(svc.rankings(Track::kVal).empty());
}

TEST(RankingTest, HigherAucFirst) {
  LeaderboardState s;
  s.apply_registration({"A", "ta", 25});
  s.apply_registration({"B", "tb", 25});
  SubmissionRecord r;
  r.track = Track::kTest;
  r.team_id = "B";
  r.sequence_no = 1;
  r.received_at_ms = 1;
  r.metrics.auc = 0.85;
  s.apply_submission(r);
  r.team_id = "A";
  r.received_at_ms = 2;
  r.metrics.auc = 0.87;
  s.apply_submission(r);
  const auto rows = s.rankings(Track::kTest);
  EXPECT_EQ(rows[0].team_id, "A");
  EXPECT_EQ(rows[1].team_id, "B");
}

TEST(RecoveryTest, RestartRestoresTicketsAndRankings) {
  const auto path = fresh_journal("restart");
  std::vector<LeaderboardRow> before;
  {
    Counter clock;
    LeaderboardService svc(truth(), path, clock.clock());
    const Team t = svc.register_team("a");
    const Team u = svc.register_team("b");
    svc.submit(t.token, Track::kTest, test_scores(0.3));
    svc.submit(t.token, Track::kTest, test_scores(0.9));
    svc.submit(t.token, Track::kVal, val_scores());
    svc.submit(u.token, Track::kTest, test_scores(0.7));
    before = svc.rankings(Track::kTest);
  }
  LeaderboardService again(truth(), path);
  EXPECT_EQ(again.tickets_remaining("a"), 22);
  EXPECT_EQ(again.tickets_remaining("b"), 24);
  EXPECT_EQ(again.rankings(Track::kTest), before);
  const Recovery r = recover(path);
  EXPECT_FALSE(r.corruption.has_value());
  EXPECT_EQ(r.records, 6u);
}

TEST(RecoveryTest, EmptyAndMissingJournal) {
  const auto path = fresh_journal("empty");
  Recovery r = recover(path);
  EXPECT_EQ(r.records, 0u);
  EXPECT_TRUE(r.state.teams().empty());
  write_file(path, "");
  r = recover(path);
  EXPECT_EQ(r.records, 0u);
  EXPECT_FALSE(r.corruption.has_value());
}

TEST(RecoveryTest, TruncatedLastLine) {
  const auto path = fresh_journal("truncated");
  {
    LeaderboardService svc(truth(), path);
    const Team t = svc.register_team("a");
    svc.submit(t.token, Track::kTest, test_scores(1.0));
    svc.submit(t.token, Track::kTest, test_scores(1.0));
  }
  std::string text = read_file(path);
  text.resize(text.size() - 10);
  write_file(path, text);
  const Recovery r = recover(path);
  ASSERT_TRUE(r.corruption.has_value());
  EXPECT_EQ(r.corruption->code(), ErrorCode::kCorruptJournal);
  EXPECT_EQ(r.records, 2u);
  EXPECT_EQ(r.state.team("a")->tickets_remaining, 24);
  EXPECT_EQ(code_of([&] { LeaderboardService svc(truth(), path); }), ErrorCode::kCorruptJournal);
}

TEST(ConcurrencyTest, SixteenSubmittersConserveTickets) {
  const auto path = fresh_journal("concurrent");
  std::vector<Team> teams;
  {
    LeaderboardService svc(truth(), path);
    for (int i = 0; i < 4; ++i) teams.push_back(svc.register_team("team" + std::to_string(i)));
    std::atomic<int> accepted{0}, quota{0}, other{0};
    std::atomic<bool> stop_readers{false};
    std::vector<std::thread> threads;
    for (int w = 0; w < 16; ++w) {
      threads.emplace_back([&, w] {
        const Team& t = teams[static_cast<std::size_t>(w % 4)];
        for (int k = 0; k < 10; ++k) {
          try {
            svc.submit(t.token, Track::kTest, test_scores((w + k) % 10 / 10.0));
            ++accepted;
          } catch (const Error& e) {
            (e.code() == ErrorCode::kQuota ? quota : other)++;
          }
        }
      });
    }
    std::thread reader([&] {
      while (!stop_readers) {
        for (const auto& row : svc.rankings(Track::kTest)) {
          EXPECT_GE(row.best_auc, 0.0);
        }
        for (const auto& t : teams) {
          const int left = *svc.tickets_remaining(t.team_id);
          EXPECT_GE(left, 0);
          EXPECT_LE(left, 25);
        }
      }
    });
    for (auto& th : threads) th.join();
    stop_readers = true;
    reader.join();
    // 4 teams x 4 threads x 10 attempts = 40 per team against 25 tickets.
    EXPECT_EQ(accepted.load(), 100);
    EXPECT_EQ(quota.load(), 60);
    EXPECT_EQ(other.load(), 0);
    for (const auto& t : teams) {
      EXPECT_EQ(*svc.tickets_remaining(t.team_id) + static_cast<int>(svc.accepted_submissions(t.team_id)), 25);
      EXPECT_EQ(svc.tickets_remaining(t.team_id), 0);
    }
  }
  const Recovery r = recover(path);
  EXPECT_FALSE(r.corruption.has_value());
  EXPECT_EQ(r.state.submissions().size(), 100u);
}

TEST(HttpTest, EndpointsAndSchemas) {
  LeaderboardService svc(truth(), fresh_journal("http"));
  httplib::Server server;
  mount_leaderboard_routes(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client cli("127.0.0.1", port);
  auto res = cli.Post("/teams", R"({"name":"leap"})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201);
  const auto team = nlohmann::json::parse(res->body);
  EXPECT_EQ(team["tickets_remaining"], 25);
  const std::string token = team["token"];

  res = cli.Post("/teams", R"({"name":"leap"})", "application/json");
  EXPECT_EQ(res->status, 409);

  httplib::Headers auth{{kTokenHeader, token}};
  res = cli.Post("/tracks/test/submissions", auth, test_scores(1.0), "text/plain");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto metrics = nlohmann::json::parse(res->body);
  std::set<std::string> keys;
  for (const auto& [k, _] : metrics.items()) keys.insert(k);
  EXPECT_EQ(keys, (std::set<std::string>{"auc", "spec_at_80sens", "sens_at_95spec", "tickets_remaining"}));
  EXPECT_EQ(metrics["tickets_remaining"], 24);

  res = cli.Post("/tracks/test/submissions", test_scores(1.0), "text/plain");
  EXPECT_EQ(res->status, 401);
  EXPECT_EQ(nlohmann::json::parse(res->body)["error"], "AUTH");
  res = cli.Post("/tracks/test/submissions", auth, "t0 0.5\n", "text/plain");
  EXPECT_EQ(res->status, 422);
  EXPECT_EQ(nlohmann::json::parse(res->body)["error"], "ID_MISMATCH");
  res = cli.Post("/tracks/test/submissions", auth, "garbage", "text/plain");
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(nlohmann::json::parse(res->body)["error"], "MALFORMED");
  res = cli.Post("/tracks/nope/submissions", auth, test_scores(1.0), "text/plain");
  EXPECT_EQ(res->status, 404);

  res = cli.Get("/tracks/test/leaderboard");
  ASSERT_TRUE(res);
  const auto rows = nlohmann::json::parse(res->body);
  ASSERT_EQ(rows.size(), 1u);
  std::set<std::string> row_keys;
  for (const auto& [k, _] : rows[0].items()) row_keys.insert(k);
  EXPECT_EQ(row_keys, (std::set<std::string>{"rank", "team_id", "best_auc", "best_spec_at_80sens"}));
  EXPECT_EQ(rows[0]["team_id"], "leap");
  // No response carries labels or tokens of other parties.
  EXPECT_EQ(res->body.find("covid"), std::string::npos);
  EXPECT_EQ(res->body.find(token), std::string::npos);

  for (int i = 0; i < 24; ++i) cli.Post("/tracks/val/submissions", auth, val_scores(), "text/plain");
  res = cli.Post("/tracks/val/submissions", auth, val_scores(), "text/plain");
  EXPECT_EQ(res->status, 429);
  EXPECT_EQ(nlohmann::json::parse(res->body)["error"], "QUOTA");

  server.stop();
  th.join();
}

}  // namespace
}  // namespace dicova
