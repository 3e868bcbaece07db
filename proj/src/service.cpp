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

#include "convoseek/service.hpp"

#include <cstdio>
#include <filesystem>

#include <httplib.h>

#include "convoseek/sets.hpp"

namespace convoseek {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

json error_body(int status, const std::string& message) {
  return {{"code", status}, {"message", message}};
}

template <typename T>
T field(const json& body, const char* key) {
  if (!body.is_object() || !body.contains(key)) {
    throw ServiceError(400, std::string("missing field '") + key + "'");
  }
  try {
    return body.at(key).get<T>();
  } catch (const json::exception&) {
    throw ServiceError(400, std::string("bad value for '") + key + "'");
  }
}

}  // namespace

SessionService::SessionService(std::shared_ptr<const ModelSet> models, RunConfig config, Clock clock)
    : models_(std::move(models)), config_(std::move(config)), clock_(std::move(clock)),
      id_rng_(std::random_device{}()) {
  if (!clock_) clock_ = [] { return std::chrono::steady_clock::now(); };
  ttl_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double, std::ratio<60>>(config_.serve_ttl_minutes));
  if (models_) agent_ = models_->agent(config_.agent, config_);
}

const AgentBundle& SessionService::agent() const {
  if (!models_) throw ServiceError(503, "models not loaded");
  return agent_;
}

json SessionService::health() const {
  json h = {{"status", models_ ? "ok" : "degraded"}, {"version", kVersion}, {"models_loaded", models_ != nullptr}};
  if (models_) {
    h["agent"] = std::string(to_string(agent_.kind));
    h["dim"] = models_->embeds.dim();
    h["users"] = models_->data.catalog.num_users;
    h["items"] = models_->data.catalog.num_items;
    h["attributes"] = models_->data.catalog.num_attributes;
    h["k"] = agent_.k;
    h["max_turns"] = agent_.max_turns;
  }
  h["sessions"] = session_count();
  return h;
}

std::string SessionService::attribute_name(AttrId id) const {
  auto it = models_->attribute_names.find(id);
  return it != models_->attribute_names.end() ? it->second : std::to_string(id);
}

std::string SessionService::item_name(ItemId id) const {
  auto it = models_->item_names.find(id);
  return it != models_->item_names.end() ? it->second : std::to_string(id);
}

void SessionService::advance(Live& live) {
  ++live.prompt_id;
  if (live.state.finished) {
    live.pending = Prompt{};
    return;
  }
  live.pending = propose(live.state, agent_, live.rng);
}

json SessionService::view(const std::string& id, const Live& live) const {
  const SessionState& s = live.state;
  json v;
  v["session_id"] = id;
  v["user_id"] = s.cold_start ? json(nullptr) : json(s.user);
  v["cold_start"] = s.cold_start;
  // The turn being played; a fresh session is on turn 1.
  v["turn"] = s.finished ? s.turn : s.turn + 1;
  v["turns_completed"] = s.turn;
  v["max_turns"] = agent_.max_turns;
  v["candidate_attribute_count"] = s.candidate_attrs.size();
  v["candidate_item_count"] = s.candidate_items.size();
  json prefs = json::array();
  for (AttrId p : s.prefs_accepted) prefs.push_back({{"id", p}, {"name", attribute_name(p)}});
  v["prefs_accepted"] = prefs;

  json prompt;
  prompt["prompt_id"] = live.prompt_id;
  if (s.finished) {
    std::vector<ItemId> accepted;
    if (!s.history.empty()) accepted = s.history.back().accepted_items;
    prompt["kind"] = "finished";
    prompt["summary"] = {{"success", s.success},
                         {"turns", s.turn},
                         {"accepted_items", accepted},
                         {"final_list", s.final_list}};
  } else if (live.pending.action == Action::ask) {
    AttrId p = *live.pending.attribute;
    prompt["kind"] = "ask";
    prompt["attribute"] = {{"id", p}, {"name", attribute_name(p)}};
  } else {
    prompt["kind"] = "recommend";
    json items = json::array();
    for (std::size_t i = 0; i < live.pending.items.size(); ++i) {
      ItemId item = live.pending.items[i];
      items.push_back({{"rank", i + 1}, {"id", item}, {"name", item_name(item)}});
    }
    prompt["items"] = items;
  }
  v["prompt"] = prompt;

  json trace = json::array();
  for (const auto& t : s.history) {
    json e = {{"turn", t.turn},
              {"action", to_string(t.action)},
              {"response", to_string(t.response)},
              {"accepted_items", t.accepted_items},
              {"reward", t.reward}};
    if (t.attribute) e["attribute"] = *t.attribute;
    if (t.action == Action::recommend) e["items"] = t.items;
    trace.push_back(e);
  }
  v["trace"] = trace;
  return v;
}

json SessionService::create(const json& body) {
  const AgentBundle& agent = this->agent();
  if (!body.is_null() && !body.is_object()) throw ServiceError(400, "body must be a JSON object");
  std::optional<UserId> user;
  std::optional<AttrId> opening;
  if (body.is_object() && body.contains("user_id") && !body["user_id"].is_null()) {
    auto raw = field<std::int64_t>(body, "user_id");
    if (raw >= 0 && static_cast<std::uint64_t>(raw) < agent.split->num_users()) user = static_cast<UserId>(raw);
  }
  if (body.is_object() && body.contains("attribute_id") && !body["attribute_id"].is_null()) {
    auto raw = field<std::int64_t>(body, "attribute_id");
    if (raw < 0 || static_cast<std::uint64_t>(raw) >= agent.catalog->num_attributes) {
      throw ServiceError(400, "unknown attribute " + std::to_string(raw));
    }
    opening = static_cast<AttrId>(raw);
  }
  if (!user && !opening) throw ServiceError(400, "unknown user and no seed attribute");

  auto live = std::make_shared<Live>();
  try {
    live->state = start_live_session(user, opening, agent);
  } catch (const InputError& e) {
    throw ServiceError(400, e.what());
  }
  std::string id;
  {
    std::lock_guard lock(table_mutex_);
    live->rng.seed(config_.seed ^ (++created_ * 0x9e3779b97f4a7c15ULL));
    do {
      char buf[24];
      std::snprintf(buf, sizeof buf, "s%016llx", static_cast<unsigned long long>(id_rng_()));
      id = buf;
    } while (sessions_.count(id) != 0);
  }
  std::lock_guard session_lock(live->mutex);
  live->last_active = clock_();
  advance(*live);
  json out = view(id, *live);
  {
    std::lock_guard lock(table_mutex_);
    sessions_[id] = live;
  }
  return out;
}

std::shared_ptr<SessionService::Live> SessionService::find(const std::string& id) {
  agent();
  evict_expired();
  std::lock_guard lock(table_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "unknown session " + id);
  return it->second;
}

json SessionService::get(const std::string& id) {
  auto live = find(id);
  std::lock_guard lock(live->mutex);
  live->last_active = clock_();
  return view(id, *live);
}

void SessionService::check_prompt_id(const Live& live, const json& body) const {
  if (body.contains("prompt_id") && !body["prompt_id"].is_null()) {
    if (field<std::uint64_t>(body, "prompt_id") != live.prompt_id) {
      throw ServiceError(409, "prompt " + std::to_string(live.prompt_id) + " is pending");
    }
  }
}

json SessionService::answer(const std::string& id, const json& body) {
  if (!body.is_object()) throw ServiceError(400, "body must be a JSON object");
  auto live = find(id);
  std::lock_guard lock(live->mutex);
  live->last_active = clock_();
  if (live->state.finished) throw ServiceError(410, "session finished");
  if (live->pending.action != Action::ask) throw ServiceError(409, "a recommendation is pending");
  check_prompt_id(*live, body);
  auto attribute = field<std::int64_t>(body, "attribute_id");
  bool liked = field<bool>(body, "liked");
  if (attribute != static_cast<std::int64_t>(*live->pending.attribute)) {
    throw ServiceError(409, "attribute " + std::to_string(*live->pending.attribute) + " is pending");
  }
  Response response;
  response.attribute_liked = liked;
  apply_response(live->state, agent_, live->pending, response);
  advance(*live);
  return view(id, *live);
}

json SessionService::feedback(const std::string& id, const json& body) {
  if (!body.is_object()) throw ServiceError(400, "body must be a JSON object");
  auto live = find(id);
  std::lock_guard lock(live->mutex);
  live->last_active = clock_();
  if (live->state.finished) throw ServiceError(410, "session finished");
  if (live->pending.action != Action::recommend) throw ServiceError(409, "an attribute question is pending");
  check_prompt_id(*live, body);
  auto accepted = field<std::vector<std::int64_t>>(body, "accepted_item_ids");
  Response response;
  for (auto v : accepted) {
    if (v < 0 || std::find(live->pending.items.begin(), live->pending.items.end(), static_cast<ItemId>(v)) ==
                     live->pending.items.end()) {
      throw ServiceError(400, "item " + std::to_string(v) + " was not shown");
    }
    response.accepted_items.push_back(static_cast<ItemId>(v));
  }
  apply_response(live->state, agent_, live->pending, response);
  advance(*live);
  return view(id, *live);
}

void SessionService::remove(const std::string& id) {
  agent();
  std::lock_guard lock(table_mutex_);
  if (sessions_.erase(id) == 0) throw ServiceError(404, "unknown session " + id);
}

std::size_t SessionService::evict_expired() {
  auto now = clock_();
  std::lock_guard lock(table_mutex_);
  std::size_t dropped = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    std::unique_lock session_lock(it->second->mutex, std::try_to_lock);
    // A session busy with a request is active by definition.
    if (session_lock.owns_lock() && now - it->second->last_active > ttl_) {
      session_lock.unlock();
      it = sessions_.erase(it);
      ++dropped;
    } else {
      ++it;
    }
  }
  return dropped;
}

std::size_t SessionService::session_count() const {
  std::lock_guard lock(table_mutex_);
  return sessions_.size();
}

void mount_routes(httplib::Server& server, SessionService& service, const RunConfig& config) {
  auto reply = [](httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  };
  auto guarded = [reply](httplib::Response& res, const std::function<json()>& fn, int ok = 200) {
    try {
      reply(res, ok, fn());
    } catch (const ServiceError& e) {
      reply(res, e.status(), error_body(e.status(), e.what()));
    } catch (const InputError& e) {
      reply(res, 400, error_body(400, e.what()));
    } catch (const std::exception& e) {
      reply(res, 500, error_body(500, e.what()));
    }
  };
  auto parse = [](const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
      return json::parse(req.body);
    } catch (const json::exception&) {
      throw ServiceError(400, "body is not valid JSON");
    }
  };

  server.Get("/api/health", [&service, guarded](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { return service.health(); });
  });
  server.Post("/api/sessions", [&service, guarded, parse](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return service.create(parse(req)); });
  });
  server.Get(R"(/api/sessions/([A-Za-z0-9]+))",
             [&service, guarded](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] { return service.get(req.matches[1]); });
             });
  server.Delete(R"(/api/sessions/([A-Za-z0-9]+))",
                [&service, guarded](const httplib::Request& req, httplib::Response& res) {
                  guarded(res, [&] {
                    service.remove(req.matches[1]);
                    return json{{"deleted", std::string(req.matches[1])}};
                  });
                });
  server.Post(R"(/api/sessions/([A-Za-z0-9]+)/answer)",
              [&service, guarded, parse](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] { return service.answer(req.matches[1], parse(req)); });
              });
  server.Post(R"(/api/sessions/([A-Za-z0-9]+)/feedback)",
              [&service, guarded, parse](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] { return service.feedback(req.matches[1], parse(req)); });
              });
  if (!config.serve_static_dir.empty()) {
    if (!std::filesystem::is_directory(config.serve_static_dir)) {
      throw InputError("missing artifact: " + config.serve_static_dir.string());
    }
    server.set_mount_point("/", config.serve_static_dir.string());
  }
}

}  // namespace convoseek
