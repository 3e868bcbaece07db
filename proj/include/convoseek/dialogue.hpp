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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convoseek/corpus.hpp"
#include "convoseek/embed.hpp"
#include "convoseek/metrics.hpp"
#include "convoseek/policy.hpp"
#include "convoseek/refiner.hpp"
#include "convoseek/turn.hpp"
#include "convoseek/types.hpp"

namespace convoseek {

enum class AgentKind {
  upsrec,  // Q-network policy, greedy NDCG selector, refined user vector
  maxent,  // rule-based trigger, max-entropy selector, attribute filtering
  mf,      // recommends once from r_u0, never asks
};

enum class DecisionRule {
  q_network,
  candidate_threshold,  // recommend once |V_cand| <= factor·k or attributes run out
  always_ask,
  always_recommend,
};

std::string_view to_string(AgentKind kind);
AgentKind parse_agent_kind(std::string_view name);

/// Everything an agent needs: frozen models, the dataset views the
/// selectors consult, and conversation settings. Pointers are non-owning.
struct AgentBundle {
  AgentKind kind = AgentKind::upsrec;
  DecisionRule decision = DecisionRule::q_network;
  const Catalog* catalog = nullptr;
  const InteractionSplit* split = nullptr;
  const AdjacencyIndex* adjacency = nullptr;
  const EmbeddingSet* embeds = nullptr;
  const RefinerParams* refiner = nullptr;
  const QNetwork* policy = nullptr;
  std::size_t k = 10;
  std::size_t max_turns = 15;
  std::size_t maxent_threshold_factor = 10;
  HitRateNorm hit_rate_norm = HitRateNorm::by_k;
  RewardSchedule rewards;
  double epsilon = 0.0;

  /// Throws InputError if a model the agent kind relies on is missing.
  void validate() const;
};

enum class SessionMode {
  train,  // groundtruth = validation items, V_cand excludes training items
  eval,   // groundtruth = test items, V_cand excludes training + validation items
  live,   // no groundtruth; a person answers
};

/// One conversation. The groundtruth is only read by simulated respondents.
struct SessionState {
  UserId user = 0;
  SessionMode mode = SessionMode::eval;
  bool cold_start = false;
  ItemSet groundtruth;
  std::vector<AttrId> prefs_accepted;  // acceptance order, opening attribute first
  AttrSet candidate_attrs;
  ItemSet candidate_items;
  std::size_t turn = 0;  // completed turns
  Vector r_u0;
  Vector r_ut;
  std::vector<TurnRecord> history;
  ItemSet valid_items;  // selector groundtruth
  ItemSet train_items;  // selector exclusions
  std::optional<AttrId> first_attribute;
  bool finished = false;
  bool success = false;
  std::vector<ItemId> final_list;
};

/// The agent's move for the next turn.
struct Prompt {
  Action action = Action::ask;
  std::optional<AttrId> attribute;
  std::vector<ItemId> items;
  bool converted = false;  // policy chose ask but no attribute was worth asking
};

struct Response {
  bool attribute_liked = false;
  std::vector<ItemId> accepted_items;
};

/// Who answers the agent: the simulator in benchmarks, a person in the service.
class Respondent {
 public:
  virtual ~Respondent() = default;
  virtual bool answer_attribute(const SessionState& state, AttrId attribute) = 0;
  virtual std::vector<ItemId> judge_recommendation(const SessionState& state,
                                                   std::span<const ItemId> items) = 0;
};

/// Multi-groundtruth simulated user: accepts an attribute iff any groundtruth
/// item carries it, accepts exactly the groundtruth items of a list.
class SimulatedUser final : public Respondent {
 public:
  explicit SimulatedUser(const Catalog& catalog) : catalog_(&catalog) {}
  bool answer_attribute(const SessionState& state, AttrId attribute) override;
  std::vector<ItemId> judge_recommendation(const SessionState& state,
                                           std::span<const ItemId> items) override;

 private:
  const Catalog* catalog_;
};

/// Replays the responses of a recorded trace, in order.
class ScriptedRespondent final : public Respondent {
 public:
  explicit ScriptedRespondent(std::vector<TurnRecord> trace) : trace_(std::move(trace)) {}
  bool answer_attribute(const SessionState& state, AttrId attribute) override;
  std::vector<ItemId> judge_recommendation(const SessionState& state,
                                           std::span<const ItemId> items) override;

 private:
  const TurnRecord& next(Action expected);
  std::vector<TurnRecord> trace_;
  std::size_t cursor_ = 0;
};

/// Attributes carried by any of the given items.
AttrSet groundtruth_attributes(const Catalog& catalog, std::span<const ItemId> items);

/// Opens a simulated session: the user names one attribute drawn uniformly
/// (seeded by `seed` and the user id) from their groundtruth attributes.
SessionState start_session(UserId user, const AgentBundle& agent, SessionMode mode,
                           std::uint64_t seed);

/// Opens a live session for a known user, an unknown user with an opening
/// attribute (r_u0 = mean user vector), or a known user with both.
SessionState start_live_session(std::optional<UserId> user, std::optional<AttrId> opening,
                                const AgentBundle& agent);

Prompt propose(const SessionState& state, const AgentBundle& agent, std::mt19937_64& rng);

/// Applies a response to the prompt and closes the turn.
TurnRecord apply_response(SessionState& state, const AgentBundle& agent, const Prompt& prompt,
                          const Response& response);

TurnRecord step(SessionState& state, const AgentBundle& agent, Respondent& respondent,
                std::mt19937_64& rng);

SessionOutcome run_session(SessionState& state, const AgentBundle& agent, Respondent& respondent,
                           std::mt19937_64& rng);

SessionOutcome outcome_of(const SessionState& state);

/// Users with groundtruth in both the validation and test splits.
std::vector<UserId> benchmark_users(const InteractionSplit& split);

/// One eval-mode session per user.
std::vector<SessionOutcome> run_benchmark(std::span<const UserId> users, const AgentBundle& agent,
                                          std::uint64_t seed);

struct ForcedDiagnostics {
  std::vector<CurvePoint> curve;         // turn 1..T
  std::vector<SessionOutcome> sessions;  // the ask-only traces behind the curve
};

/// Forced-recommendation diagnostic: per user, asks with the agent's
/// selector and measures the list it would recommend at every turn t.
ForcedDiagnostics forced_recommendation_curve(std::span<const UserId> users,
                                              const AgentBundle& agent, std::uint64_t seed);

/// Item AUC of a user vector: groundtruth items vs. every item the user has
/// not interacted with in any split.
double groundtruth_item_auc(const EmbeddingSet& embeds, const InteractionSplit& split,
                            UserId user, const Vector& user_vec);

/// The accepted-attribute prefix after `turns` completed turns.
std::vector<AttrId> accepted_prefix(const SessionOutcome& outcome, std::size_t turns);

/// Fills every report field. Per-turn AUC replays each trace's accepted
/// attributes through the refiner; turn 0 is the unrefined r_u0.
BenchmarkReport assemble_report(std::span<const SessionOutcome> outcomes,
                                const ForcedDiagnostics& forced, const AgentBundle& agent);

// JSON-lines traces: one object per turn, then one outcome summary object.
void write_trace_jsonl(std::ostream& out, const SessionOutcome& outcome);
void write_traces(const std::filesystem::path& path, std::span<const SessionOutcome> outcomes);
std::vector<SessionOutcome> read_traces(const std::filesystem::path& path);

}  // namespace convoseek
