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

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "convoseek/config.hpp"
#include "convoseek/corpus.hpp"
#include "convoseek/dialogue.hpp"
#include "convoseek/embed.hpp"
#include "convoseek/metrics.hpp"
#include "convoseek/policy.hpp"
#include "convoseek/refiner.hpp"

namespace convoseek {

// Artifact names inside the configured directories.
inline constexpr const char* kInteractionsFile = "interactions.tsv";
inline constexpr const char* kItemAttributesFile = "item_attributes.tsv";
inline constexpr const char* kSplitFile = "split.json";
inline constexpr const char* kPlantedFile = "planted.json";
inline constexpr const char* kUserIdsFile = "user_ids.tsv";
inline constexpr const char* kAttributeNamesFile = "attribute_names.tsv";
inline constexpr const char* kItemNamesFile = "item_names.tsv";
inline constexpr const char* kEmbedsFile = "embeds.bin";
inline constexpr const char* kRefinerFile = "refiner.bin";
inline constexpr const char* kPolicyFile = "policy.bin";
inline constexpr const char* kPolicyLogFile = "policy_log.csv";
inline constexpr const char* kFmLogFile = "fm_log.csv";
inline constexpr const char* kReportJsonFile = "report.json";
inline constexpr const char* kReportCsvFile = "report.csv";
inline constexpr const char* kCurvesFile = "curves.csv";
inline constexpr const char* kTracesFile = "traces.jsonl";
inline constexpr const char* kConfigFile = "config.json";

/// Throws InputError naming `path` when it does not exist.
void require_artifact(const std::filesystem::path& path);

/// Dataset views shared by every stage after ingest.
struct Dataset {
  Catalog catalog;
  InteractionSplit split;
  AdjacencyIndex adjacency;
  ItemStats stats;
};

Dataset load_dataset(const RunConfig& config);

/// Trained models, each optional. The agent bundle points into this struct,
/// so keep it alive (and unmoved) while the bundle is in use.
struct ModelSet {
  Dataset data;
  EmbeddingSet embeds;
  std::optional<RefinerParams> refiner;
  std::optional<QNetwork> policy;
  std::map<std::uint32_t, std::string> attribute_names;
  std::map<std::uint32_t, std::string> item_names;

  /// Agent of the given kind; throws InputError naming the missing model file.
  AgentBundle agent(AgentKind kind, const RunConfig& config) const;
};

/// Loads the dataset plus every model the agent kind needs (others when present).
std::unique_ptr<ModelSet> load_models(const RunConfig& config, AgentKind kind);

/// Reads an `id<TAB>name` sidecar; empty map if the file is absent.
std::map<std::uint32_t, std::string> read_names(const std::filesystem::path& path);

// Stages. Each reads its declared inputs, writes its artifacts plus the
// resolved config beside them, and logs progress to `log`.
void stage_ingest(const RunConfig& config, std::ostream& log);
void stage_synth(const RunConfig& config, std::ostream& log);
void stage_train_fm(const RunConfig& config, std::ostream& log);
void stage_train_refiner(const RunConfig& config, std::ostream& log);
void stage_train_policy(const RunConfig& config, std::ostream& log);
/// Simulated sessions only: writes traces.jsonl for the agent.
void stage_simulate(const RunConfig& config, AgentKind kind, std::ostream& log);
/// Full benchmark: report.json, report.csv, curves.csv and traces.jsonl
/// under report_dir/<agent>/.
BenchmarkReport stage_evaluate(const RunConfig& config, AgentKind kind, std::ostream& log);
/// Compares the agents evaluated so far; writes report_dir/summary.csv.
void stage_report(const RunConfig& config, std::ostream& out);
/// ingest (or synth when no input files are configured), all training
/// stages, evaluation of every agent, then report.
void stage_pipeline(const RunConfig& config, std::ostream& log);

std::filesystem::path agent_report_dir(const RunConfig& config, AgentKind kind);

}  // namespace convoseek
