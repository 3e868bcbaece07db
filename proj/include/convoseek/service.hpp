/*
 * Copyright 2026 The ConvoSeek Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "convoseek/config.hpp"
#include "convoseek/dialogue.hpp"
#include "convoseek/pipeline.hpp"

namespace httplib {
class Server;
}

namespace convoseek {

/// An error with the HTTP status it maps to.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& message) : std::runtime_error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

/// Live sessions over the trained agent. The human is the respondent; every
/// answer goes through the same propose / apply_response pair the simulator
/// uses. Thread-safe: the session table has one lock, each session another.
class SessionService {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  /// `models` may be null, in which case every session call answers 503.
  SessionService(std::shared_ptr<const ModelSet> models, RunConfig config, Clock clock = {});

  nlohmann::json health() const;

  // Request bodies as documented in the README. Each returns the session view.
  nlohmann::json create(const nlohmann::json& body);
  nlohmann::json get(const std::string& id);
  nlohmann::json answer(const std::string& id, const nlohmann::json& body);
  nlohmann::json feedback(const std::string& id, const nlohmann::json& body);
  void remove(const std::string& id);

  /// Drops sessions idle for longer than the TTL. Returns how many went.
  std::size_t evict_expired();
  std::size_t session_count() const;

  const AgentBundle& agent() const;

 private:
  struct Live {
    std::mutex mutex;
    SessionState state;
    Prompt pending;
    std::uint64_t prompt_id = 0;
    std::mt19937_64 rng;
    std::chrono::steady_clock::time_point last_active;
  };

  std::shared_ptr<Live> find(const std::string& id);
  void advance(Live& live);
  nlohmann::json view(const std::string& id, const Live& live) const;
  void check_prompt_id(const Live& live, const nlohmann::json& body) const;
  std::string attribute_name(AttrId id) const;
  std::string item_name(ItemId id) const;

  std::shared_ptr<const ModelSet> models_;
  RunConfig config_;
  Clock clock_;
  AgentBundle agent_;
  std::chrono::steady_clock::duration ttl_;

  mutable std::mutex table_mutex_;
  std::map<std::string, std::shared_ptr<Live>> sessions_;
  std::mt19937_64 id_rng_;
  std::uint64_t created_ = 0;
};

/// REST routes under /api, plus the static UI when serve.static_dir is set.
void mount_routes(httplib::Server& server, SessionService& service, const RunConfig& config);

}  // namespace convoseek
