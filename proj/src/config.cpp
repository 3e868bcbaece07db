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

#include "convoseek/config.hpp"

#include <cstdlib>
#include <fstream>

namespace convoseek {

using nlohmann::json;

namespace {

std::string norm_name(HitRateNorm n) { return n == HitRateNorm::by_k ? "k" : "min_k_gt"; }

HitRateNorm parse_norm(const std::string& s) {
  if (s == "k") return HitRateNorm::by_k;
  if (s == "min_k_gt") return HitRateNorm::by_min_k_gt;
  throw InputError("config: hit_rate_norm must be \"k\" or \"min_k_gt\"");
}

std::string scale_name(FrequencyScale f) { return f == FrequencyScale::share ? "share" : "max_count"; }

FrequencyScale parse_scale(const std::string& s) {
  if (s == "share") return FrequencyScale::share;
  if (s == "max_count") return FrequencyScale::max_count;
  throw InputError("config: fm.frequency_scale must be \"share\" or \"max_count\"");
}

// Walks a dotted key through nested objects.
json* find_key(json& doc, const std::string& dotted) {
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = dotted.find('.', start);
    std::string part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) return nullptr;
    node = &(*node)[part];
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
}

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) {
    if (a.is_number_float()) return true;
    if (b.is_number_float()) return false;
    return !(a.is_number_unsigned() && b.get<std::int64_t>() < 0);
  }
  return a.type() == b.type();
}

// Overlays `patch` on `base`, rejecting keys `base` does not have.
void overlay(json& base, const json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw InputError("config: '" + prefix + "' must be an object");
  for (const auto& [key, value] : patch.items()) {
    std::string name = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw InputError("config: unknown key '" + name + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      overlay(slot, value, name);
    } else {
      if (!same_kind(slot, value)) throw InputError("config: wrong type for '" + name + "'");
      slot = value;
    }
  }
}

template <typename T>
T take(const json& doc, const char* section, const char* key) {
  try {
    return section == nullptr ? doc.at(key).get<T>() : doc.at(section).at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(std::string("config: bad value for '") + (section ? std::string(section) + "." : "") +
                     key + "'");
  }
}

}  // namespace

void RunConfig::sync() {
  fm.dim = dim;
  fm.seed = seed;
  refiner.seed = seed + 1;
  refiner.max_turns = max_turns;
  policy.seed = seed + 2;
}

void RunConfig::validate() const {
  if (dim == 0) throw InputError("config: dim must be > 0");
  if (max_turns < 2) throw InputError("config: max_turns must be >= 2");
  if (k == 0) throw InputError("config: k must be >= 1");
  if (serve_port < 0 || serve_port > 65535) throw InputError("config: serve.port out of range");
  if (!(serve_ttl_minutes > 0.0)) throw InputError("config: serve.ttl_minutes must be > 0");
  if (synth_users == 0 || synth_attributes < 5 || synth_items < 2 * synth_attributes) {
    throw InputError("config: synth needs users >= 1, attributes >= 5, items >= 2 x attributes");
  }
  fm.validate();
  refiner.validate();
  policy.validate();
  rewards.validate();
}

json RunConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["paths"] = {{"data_dir", data_dir.string()},
                {"model_dir", model_dir.string()},
                {"report_dir", report_dir.string()}};
  j["input"] = {{"interactions", input_interactions.string()},
                {"attributes", input_attributes.string()},
                {"attribute_names", input_attribute_names.string()},
                {"item_names", input_item_names.string()},
                {"min_user_interactions", min_user_interactions}};
  j["synth"] = {{"users", synth_users}, {"items", synth_items}, {"attributes", synth_attributes}};
  j["dim"] = dim;
  j["max_turns"] = max_turns;
  j["k"] = k;
  j["hit_rate_norm"] = norm_name(hit_rate_norm);
  j["fm"] = {{"n1", fm.n1},
             {"n2", fm.n2},
             {"lambda", fm.lambda_reg},
             {"learning_rate", fm.learning_rate},
             {"epochs", fm.epochs},
             {"negatives", fm.negatives_per_positive},
             {"batch_size", fm.batch_size},
             {"frequency_scale", scale_name(frequency_scale)}};
  j["refiner"] = {{"learning_rate", refiner.learning_rate},
                  {"lambda", refiner.lambda_reg},
                  {"epochs", refiner.epochs},
                  {"samples_per_user", refiner.samples_per_user},
                  {"batch_size", refiner.batch_size},
                  {"jaccard", refiner.jaccard_threshold}};
  j["policy"] = {{"hidden", policy.hidden},
                 {"replay", policy.replay_capacity},
                 {"batch_size", policy.batch_size},
                 {"gamma", policy.gamma},
                 {"learning_rate", policy.learning_rate},
                 {"epsilon_start", policy.epsilon_start},
                 {"epsilon_end", policy.epsilon_end},
                 {"epsilon_decay_fraction", policy.epsilon_decay_fraction},
                 {"target_sync", policy.target_sync},
                 {"episodes", policy.episodes}};
  j["rewards"] = {{"ask_success", rewards.ask_success},
                  {"ask_fail", rewards.ask_fail},
                  {"rec_fail", rewards.rec_fail},
                  {"stop", rewards.stop},
                  {"rec_success_scale", rewards.rec_success_scale}};
  j["agent"] = std::string(to_string(agent));
  j["maxent_threshold_factor"] = maxent_threshold_factor;
  j["serve"] = {{"host", serve_host},
                {"port", serve_port},
                {"ttl_minutes", serve_ttl_minutes},
                {"static_dir", serve_static_dir.string()}};
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  c.seed = take<std::uint64_t>(j, nullptr, "seed");
  c.data_dir = take<std::string>(j, "paths", "data_dir");
  c.model_dir = take<std::string>(j, "paths", "model_dir");
  c.report_dir = take<std::string>(j, "paths", "report_dir");
  c.input_interactions = take<std::string>(j, "input", "interactions");
  c.input_attributes = take<std::string>(j, "input", "attributes");
  c.input_attribute_names = take<std::string>(j, "input", "attribute_names");
  c.input_item_names = take<std::string>(j, "input", "item_names");
  c.min_user_interactions = take<std::size_t>(j, "input", "min_user_interactions");
  c.synth_users = take<std::size_t>(j, "synth", "users");
  c.synth_items = take<std::size_t>(j, "synth", "items");
  c.synth_attributes = take<std::size_t>(j, "synth", "attributes");
  c.dim = take<std::size_t>(j, nullptr, "dim");
  c.max_turns = take<std::size_t>(j, nullptr, "max_turns");
  c.k = take<std::size_t>(j, nullptr, "k");
  c.hit_rate_norm = parse_norm(take<std::string>(j, nullptr, "hit_rate_norm"));
  c.fm.n1 = take<double>(j, "fm", "n1");
  c.fm.n2 = take<double>(j, "fm", "n2");
  c.fm.lambda_reg = take<double>(j, "fm", "lambda");
  c.fm.learning_rate = take<double>(j, "fm", "learning_rate");
  c.fm.epochs = take<std::size_t>(j, "fm", "epochs");
  c.fm.negatives_per_positive = take<std::size_t>(j, "fm", "negatives");
  c.fm.batch_size = take<std::size_t>(j, "fm", "batch_size");
  c.frequency_scale = parse_scale(take<std::string>(j, "fm", "frequency_scale"));
  c.refiner.learning_rate = take<double>(j, "refiner", "learning_rate");
  c.refiner.lambda_reg = take<double>(j, "refiner", "lambda");
  c.refiner.epochs = take<std::size_t>(j, "refiner", "epochs");
  c.refiner.samples_per_user = take<std::size_t>(j, "refiner", "samples_per_user");
  c.refiner.batch_size = take<std::size_t>(j, "refiner", "batch_size");
  c.refiner.jaccard_threshold = take<double>(j, "refiner", "jaccard");
  c.policy.hidden = take<std::size_t>(j, "policy", "hidden");
  c.policy.replay_capacity = take<std::size_t>(j, "policy", "replay");
  c.policy.batch_size = take<std::size_t>(j, "policy", "batch_size");
  c.policy.gamma = take<double>(j, "policy", "gamma");
  c.policy.learning_rate = take<double>(j, "policy", "learning_rate");
  c.policy.epsilon_start = take<double>(j, "policy", "epsilon_start");
  c.policy.epsilon_end = take<double>(j, "policy", "epsilon_end");
  c.policy.epsilon_decay_fraction = take<double>(j, "policy", "epsilon_decay_fraction");
  c.policy.target_sync = take<std::size_t>(j, "policy", "target_sync");
  c.policy.episodes = take<std::size_t>(j, "policy", "episodes");
  c.rewards.ask_success = take<double>(j, "rewards", "ask_success");
  c.rewards.ask_fail = take<double>(j, "rewards", "ask_fail");
  c.rewards.rec_fail = take<double>(j, "rewards", "rec_fail");
  c.rewards.stop = take<double>(j, "rewards", "stop");
  c.rewards.rec_success_scale = take<double>(j, "rewards", "rec_success_scale");
  c.agent = parse_agent_kind(take<std::string>(j, nullptr, "agent"));
  c.maxent_threshold_factor = take<std::size_t>(j, nullptr, "maxent_threshold_factor");
  c.serve_host = take<std::string>(j, "serve", "host");
  c.serve_port = take<int>(j, "serve", "port");
  c.serve_ttl_minutes = take<double>(j, "serve", "ttl_minutes");
  c.serve_static_dir = take<std::string>(j, "serve", "static_dir");
  c.sync();
  return c;
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& file,
                         std::span<const std::string> overrides) {
  json doc = RunConfig{}.to_json();
  if (file) {
    std::ifstream in(*file);
    if (!in) throw InputError("missing config file: " + file->string());
    json patch;
    try {
      patch = json::parse(in);
    } catch (const json::exception& e) {
      throw InputError(file->string() + ": " + e.what());
    }
    overlay(doc, patch, "");
  }
  for (const auto& item : overrides) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("--set expects key=value, got '" + item + "'");
    std::string key = item.substr(0, eq);
    std::string raw = item.substr(eq + 1);
    json* slot = find_key(doc, key);
    if (slot == nullptr || slot->is_object()) throw InputError("config: unknown key '" + key + "'");
    json value;
    if (slot->is_string()) {
      value = raw;
    } else {
      try {
        value = json::parse(raw);
      } catch (const json::exception&) {
        throw InputError("config: cannot parse value for '" + key + "': " + raw);
      }
    }
    if (!same_kind(*slot, value)) throw InputError("config: wrong type for '" + key + "'");
    *slot = value;
  }
  if (const char* env = std::getenv("CONVOSEEK_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      unsigned long long seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing");
      doc["seed"] = seed;
    } catch (const std::exception&) {
      throw InputError("CONVOSEEK_SEED must be a non-negative integer");
    }
  }
  RunConfig config = RunConfig::from_json(doc);
  config.validate();
  return config;
}

void write_config(const std::filesystem::path& path, const RunConfig& config) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << config.to_json().dump(2) << '\n';
}

}  // namespace convoseek
