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

// HTTP/JSON binding of LeaderboardService:
//
//   POST /teams                          {"name": ...}
//   POST /tracks/{track}/submissions     X-Team-Token header, ScoreFile body
//   GET  /tracks/{track}/leaderboard
//
// Failures return {"error": CODE, "message": ...}.

#pragma once

#include <string>

#include <httplib.h>
#include <json.hpp>

#include "dicova/leaderboard.hpp"

namespace dicova {

inline constexpr const char* kTokenHeader = "X-Team-Token";

inline int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kAuth: return 401;
    case ErrorCode::kQuota: return 429;
    case ErrorCode::kIdMismatch: return 422;
    case ErrorCode::kDuplicateName: return 409;
    case ErrorCode::kUnknownTrack: return 404;
    case ErrorCode::kMalformed:
    case ErrorCode::kParse:
    case ErrorCode::kSingleClass: return 400;
    default: return 500;
  }
}

inline void mount_leaderboard_routes(httplib::Server& server, LeaderboardService& service) {
  const auto send_json = [](httplib::Response& res, int status, const nlohmann::ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };
  const auto send_error = [send_json](httplib::Response& res, const Error& e) {
    // The ground truth never reaches a response, so single-class tracks are
    // reported as a malformed request rather than with details.
    const ErrorCode code = e.code() == ErrorCode::kSingleClass || e.code() == ErrorCode::kParse
                               ? ErrorCode::kMalformed
                               : e.code();
    send_json(res, http_status_for(code),
              {{"error", error_code_name(code)}, {"message", e.what()}});
  };

  server.Post("/teams", [&service, send_json, send_error](const httplib::Request& req,
                                                          httplib::Response& res) {
    try {
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(req.body);
      } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::kMalformed, "request body must be JSON {\"name\": ...}");
      }
      if (!body.is_object() || !body.contains("name") || !body["name"].is_string()) {
        throw Error(ErrorCode::kMalformed, "request body must be JSON {\"name\": ...}");
      }
      const Team t = service.register_team(body["name"].get<std::string>());
      send_json(res, 201,
                {{"team_id", t.team_id}, {"token", t.token}, {"tickets_remaining", t.tickets_remaining}});
    } catch (const Error& e) {
      send_error(res, e);
    }
  });

  server.Post(R"(/tracks/([^/]+)/submissions)",
              [&service, send_json, send_error](const httplib::Request& req, httplib::Response& res) {
                try {
                  const Track track = parse_track(req.matches[1].str());
                  const SubmissionResult r =
                      service.submit(req.get_header_value(kTokenHeader), track, req.body);
                  send_json(res, 200,
                            {{"auc", r.metrics.auc},
                             {"spec_at_80sens", r.metrics.spec_at_80sens},
                             {"sens_at_95spec", r.metrics.sens_at_95spec},
                             {"tickets_remaining", r.tickets_remaining}});
                } catch (const Error& e) {
                  send_error(res, e);
                }
              });

  server.Get(R"(/tracks/([^/]+)/leaderboard)",
             [&service, send_json, send_error](const httplib::Request& req, httplib::Response& res) {
               try {
                 const Track track = parse_track(req.matches[1].str());
                 nlohmann::ordered_json rows = nlohmann::ordered_json::array();
                 int rank = 0;
                 for (const auto& row : service.rankings(track)) {
                   rows.push_back({{"rank", ++rank},
                                   {"team_id", row.team_id},
                                   {"best_auc", row.best_auc},
                                   {"best_spec_at_80sens", row.best_spec_at_80sens}});
                 }
                 send_json(res, 200, rows);
               } catch (const Error& e) {
                 send_error(res, e);
               }
             });
}

}  // namespace dicova
