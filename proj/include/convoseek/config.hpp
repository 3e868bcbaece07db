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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "convoseek/dialogue.hpp"
#include "convoseek/embed.hpp"
#include "convoseek/policy.hpp"
#include "convoseek/policy_training.hpp"
#include "convoseek/refiner.hpp"

namespace convoseek {

/// Every knob of a run. Files and `--set` overrides are JSON objects keyed by
/// the dotted names in `to_json()`, e.g. `fm.epochs` or `paths.model_dir`.
struct RunConfig {
  std::uint64_t seed = 2026;

  std::filesystem::path data_dir = "data";
  std::filesystem::path model_dir = "models";
  std::filesystem::path report_dir = "reports";

  // Raw inputs for `ingest` (user<TAB>item, item<TAB>attr,attr,...).
  std::filesystem::path input_interactions;
  std::filesystem::path input_attributes;
  std::filesystem::path input_attribute_names;
  std::filesystem::path input_item_names;
  std::size_t min_user_interactions = kMinUserInteractions;

  std::size_t synth_users = 200;
  std::size_t synth_items = 500;
  std::size_t synth_attributes = 30;

  std::size_t dim = 64;
  std::size_t max_turns = 15;
  std::size_t k = 10;
  HitRateNorm hit_rate_norm = HitRateNorm::by_k;

  FMHyper fm;
  FrequencyScale frequency_scale = FrequencyScale::share;
  RefinerHyper refiner;
  PolicyHyper policy;
  RewardSchedule rewards;

  AgentKind agent = AgentKind::upsrec;
  std::size_t maxent_threshold_factor = 10;

  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  double serve_ttl_minutes = 30.0;
  std::filesystem::path serve_static_dir;

  /// Copies the shared settings (seed, d, T) into the per-module blocks.
  void sync();
  void validate() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& doc);
};

/// Defaults <- file <- `key=value` overrides <- CONVOSEEK_SEED.
/// Unknown keys and mistyped values are InputErrors.
RunConfig resolve_config(const std::optional<std::filesystem::path>& file,
                         std::span<const std::string> overrides);

/// Pretty JSON with sorted keys, so equal configs give equal bytes.
void write_config(const std::filesystem::path& path, const RunConfig& config);

}  // namespace convoseek
