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

#include "convoseek/dialogue.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "convoseek/selector.hpp"
#include "convoseek/sets.hpp"

namespace convoseek {

namespace {

using nlohmann::json;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ItemSet all_items_except(std::size_t num_items, std::span<const ItemId> excluded_sorted) {
  ItemSet out;
  out.reserve(num_items);
  for (ItemId v = 0; v < num_items; ++v) {
    if (!std::binary_search(excluded_sorted.begin(), excluded_sorted.end(), v)) out.push_back(v);
  }
  return out;
}

void keep_items_with(ItemSet& items, const Catalog& catalog, AttrId attribute, bool with) {
  std::erase_if(items, [&](ItemId v) {
    return sets::contains(catalog.attributes_of(v), attribute) != with;
  });
}

SelectorContext selector_context(const SessionState& s) {
  SelectorContext ctx;
  ctx.user = s.user;
  ctx.r_u0 = s.r_u0;
  ctx.r_ut = s.r_ut;
  ctx.prefs_accepted = s.prefs_accepted;
  ctx.candidates = s.candidate_attrs;
  ctx.valid_groundtruth = s.valid_items;
  ctx.excluded_items = s.train_items;
  return ctx;
}

std::optional<AttrId> choose_attribute(const SessionState& s, const AgentBundle& agent) {
  if (s.candidate_attrs.empty()) return std::nullopt;
  SelectorContext ctx = selector_context(s);
  if (agent.kind == AgentKind::upsrec && !s.valid_items.empty()) {
    return greedy_ndcg_select(ctx, *agent.embeds, *agent.refiner, agent.k);
  }
  // Max-entropy: the baseline's selector, and the fallback for users with no
  // validation items to measure NDCG gain on.
  return max_entropy_select(ctx, *agent.catalog, s.candidate_items);
}

Vector ranking_vector(const SessionState& s, const AgentBundle& agent) {
  switch (agent.kind) {
    case AgentKind::upsrec:
      return s.r_ut;
    case AgentKind::maxent: {
      // FM score with the accepted attributes: r_v·(r_u + Σ r_p).
      Vector v = s.r_u0;
      for (AttrId p : s.prefs_accepted) v += agent.embeds->attr_vecs.row(p).transpose();
      return v;
    }
    case AgentKind::mf:
      return s.r_u0;
  }
  return s.r_u0;
}

std::vector<ItemId> recommendation_list(const SessionState& s, const AgentBundle& agent) {
  if (s.candidate_items.empty()) return {};
  std::vector<ItemId> out;
  for (const auto& scored : rank_items(*agent.embeds, ranking_vector(s, agent), s.candidate_items, agent.k)) {
    out.push_back(scored.item);
  }
  return out;
}

void refresh_user_vector(SessionState& s, const AgentBundle& agent) {
  if (agent.kind == AgentKind::upsrec && !s.prefs_accepted.empty()) {
    s.r_ut = refine(*agent.refiner, s.r_u0, s.prefs_accepted, agent.embeds->attr_vecs);
  } else {
    s.r_ut = s.r_u0;
  }
}

void accept_attribute(SessionState& s, const AgentBundle& agent, AttrId p) {
  if (std::find(s.prefs_accepted.begin(), s.prefs_accepted.end(), p) == s.prefs_accepted.end()) {
    s.prefs_accepted.push_back(p);
  }
  sets::erase(s.candidate_attrs, p);
  if (agent.kind == AgentKind::maxent) keep_items_with(s.candidate_items, *agent.catalog, p, true);
  refresh_user_vector(s, agent);
}

}  // namespace

std::string_view to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::upsrec: return "upsrec";
    case AgentKind::maxent: return "maxent";
    case AgentKind::mf: return "mf";
  }
  return "?";
}

AgentKind parse_agent_kind(std::string_view name) {
  if (name == "upsrec") return AgentKind::upsrec;
  if (name == "maxent") return AgentKind::maxent;
  if (name == "mf") return AgentKind::mf;
  throw InputError("unknown agent '" + std::string(name) + "' (expected upsrec, maxent or mf)");
}

void AgentBundle::validate() const {
  if (catalog == nullptr || split == nullptr || adjacency == nullptr || embeds == nullptr) {
    throw InputError("agent: catalog, split, adjacency and embeddings are required");
  }
  if (kind == AgentKind::upsrec && refiner == nullptr) throw InputError("agent: upsrec needs a refiner");
  if (kind == AgentKind::upsrec && decision == DecisionRule::q_network && policy == nullptr) {
    throw InputError("agent: q-network decisions need a policy");
  }
  if (k == 0) throw InputError("agent: k must be >= 1");
  if (max_turns < 2) throw InputError("agent: max turns must be >= 2");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InputError("agent: epsilon must be in [0, 1]");
  if (policy != nullptr && decision == DecisionRule::q_network &&
      policy->input_dim() != embeds->dim() + max_turns) {
    throw InputError("agent: policy input size does not match d + T");
  }
}

bool SimulatedUser::answer_attribute(const SessionState& state, AttrId attribute) {
  for (ItemId v : state.groundtruth) {
    if (sets::contains(catalog_->attributes_of(v), attribute)) return true;
  }
  return false;
}

std::vector<ItemId> SimulatedUser::judge_recommendation(const SessionState& state,
                                                        std::span<const ItemId> items) {
  std::vector<ItemId> accepted;
  for (ItemId v : items) {
    if (sets::contains(state.groundtruth, v)) accepted.push_back(v);
  }
  sets::normalize(accepted);
  return accepted;
}

const TurnRecord& ScriptedRespondent::next(Action expected) {
  if (cursor_ >= trace_.size()) throw RuntimeFailure("scripted respondent: trace exhausted");
  const TurnRecord& t = trace_[cursor_++];
  if (t.action != expected) throw RuntimeFailure("scripted respondent: trace diverged from replay");
  return t;
}

bool ScriptedRespondent::answer_attribute(const SessionState&, AttrId attribute) {
  const TurnRecord& t = next(Action::ask);
  if (t.attribute != attribute) throw RuntimeFailure("scripted respondent: different attribute asked");
  return t.response == TurnOutcome::ask_accepted;
}

std::vector<ItemId> ScriptedRespondent::judge_recommendation(const SessionState&,
                                                             std::span<const ItemId>) {
  return next(Action::recommend).accepted_items;
}

AttrSet groundtruth_attributes(const Catalog& catalog, std::span<const ItemId> items) {
  AttrSet out;
  for (ItemId v : items) {
    const auto& attrs = catalog.attributes_of(v);
    out.insert(out.end(), attrs.begin(), attrs.end());
  }
  sets::normalize(out);
  return out;
}

SessionState start_session(UserId user, const AgentBundle& agent, SessionMode mode,
                           std::uint64_t seed) {
  agent.validate();
  if (mode == SessionMode::live) throw InputError("start_session: use start_live_session for live mode");
  const InteractionSplit& split = *agent.split;
  const Catalog& catalog = *agent.catalog;
  if (user >= split.num_users()) throw InputError("session: user id out of range");

  SessionState s;
  s.user = user;
  s.mode = mode;
  s.groundtruth = mode == SessionMode::eval ? split.test_items[user] : split.valid_items[user];
  if (s.groundtruth.empty()) {
    throw InputError("session: user " + std::to_string(user) + " has no groundtruth items");
  }
  s.train_items = split.train_items[user];
  s.valid_items = split.valid_items[user];
  s.r_u0 = agent.embeds->user_vecs.row(user).transpose();

  AttrSet gt_attrs = groundtruth_attributes(catalog, s.groundtruth);
  std::mt19937_64 rng(mix_seed(seed, user));
  AttrId opening = gt_attrs[std::uniform_int_distribution<std::size_t>(0, gt_attrs.size() - 1)(rng)];
  s.first_attribute = opening;

  ItemSet excluded = s.train_items;
  if (mode == SessionMode::eval) {
    excluded = sets::set_union<ItemId>(s.train_items, s.valid_items);
  }
  s.candidate_items = all_items_except(catalog.num_items, excluded);
  s.candidate_attrs = agent.adjacency->adjacent.at(user);
  accept_attribute(s, agent, opening);
  return s;
}

SessionState start_live_session(std::optional<UserId> user, std::optional<AttrId> opening,
                                const AgentBundle& agent) {
  agent.validate();
  const Catalog& catalog = *agent.catalog;
  SessionState s;
  s.mode = SessionMode::live;
  if (opening && *opening >= catalog.num_attributes) throw InputError("session: unknown attribute");
  if (user && *user < agent.split->num_users()) {
    s.user = *user;
    s.r_u0 = agent.embeds->user_vecs.row(*user).transpose();
    s.train_items = agent.split->train_items[*user];
    s.valid_items = agent.split->valid_items[*user];
    s.candidate_attrs = agent.adjacency->adjacent.at(*user);
    ItemSet excluded = sets::set_union<ItemId>(s.train_items, s.valid_items);
    s.candidate_items = all_items_except(catalog.num_items, excluded);
  } else {
    if (!opening) throw InputError("session: unknown user and no opening attribute");
    s.cold_start = true;
    s.r_u0 = agent.embeds->user_vecs.colwise().mean().transpose();
    for (AttrId p = 0; p < catalog.num_attributes; ++p) s.candidate_attrs.push_back(p);
    s.candidate_items = all_items_except(catalog.num_items, {});
  }
  s.r_ut = s.r_u0;
  if (opening) {
    s.first_attribute = *opening;
    accept_attribute(s, agent, *opening);
  }
  return s;
}

Prompt propose(const SessionState& state, const AgentBundle& agent, std::mt19937_64& rng) {
  if (state.finished) throw InputError("session already finished");
  if (state.turn >= agent.max_turns) throw InputError("session reached the turn limit");

  Action action = Action::recommend;
  if (agent.kind != AgentKind::mf) {
    switch (agent.decision) {
      case DecisionRule::q_network:
        action = select_action(*agent.policy, encode_state(state.r_u0, state.history, agent.max_turns),
                               agent.epsilon, rng);
        break;
      case DecisionRule::candidate_threshold:
        action = state.candidate_items.size() <= agent.maxent_threshold_factor * agent.k ||
                         state.candidate_attrs.empty()
                     ? Action::recommend
                     : Action::ask;
        break;
      case DecisionRule::always_ask:
        action = Action::ask;
        break;
      case DecisionRule::always_recommend:
        action = Action::recommend;
        break;
    }
  }

  Prompt prompt;
  if (action == Action::ask) {
    prompt.attribute = choose_attribute(state, agent);
    if (prompt.attribute) {
      prompt.action = Action::ask;
      return prompt;
    }
    prompt.converted = true;
  }
  prompt.action = Action::recommend;
  prompt.items = recommendation_list(state, agent);
  return prompt;
}

TurnRecord apply_response(SessionState& state, const AgentBundle& agent, const Prompt& prompt,
                          const Response& response) {
  if (state.finished) throw InputError("session already finished");
  TurnRecord record;
  record.action = prompt.action;

  if (prompt.action == Action::ask) {
    if (!prompt.attribute || !sets::contains(state.candidate_attrs, *prompt.attribute)) {
      throw InputError("apply: asked attribute is not a candidate");
    }
    AttrId p = *prompt.attribute;
    record.attribute = p;
    if (response.attribute_liked) {
      accept_attribute(state, agent, p);
      record.response = TurnOutcome::ask_accepted;
      record.reward = reward_of({RewardEventKind::ask_accept}, agent.rewards);
    } else {
      sets::erase(state.candidate_attrs, p);
      if (agent.kind == AgentKind::maxent) {
        keep_items_with(state.candidate_items, *agent.catalog, p, false);
      }
      record.response = TurnOutcome::ask_rejected;
      record.reward = reward_of({RewardEventKind::ask_reject}, agent.rewards);
    }
  } else {
    for (ItemId v : prompt.items) {
      if (!sets::contains(state.candidate_items, v)) {
        throw InputError("apply: recommended item " + std::to_string(v) + " is not a candidate");
      }
    }
    record.items = prompt.items;
    std::vector<ItemId> accepted = response.accepted_items;
    sets::normalize(accepted);
    for (ItemId v : accepted) {
      if (std::find(prompt.items.begin(), prompt.items.end(), v) == prompt.items.end()) {
        throw InputError("apply: accepted item " + std::to_string(v) + " was not recommended");
      }
    }
    record.accepted_items = accepted;
    state.final_list = prompt.items;
    if (!accepted.empty()) {
      record.response = TurnOutcome::rec_accepted;
      std::span<const ItemId> judged = state.groundtruth.empty()
                                           ? std::span<const ItemId>(accepted)
                                           : std::span<const ItemId>(state.groundtruth);
      record.reward = reward_of({RewardEventKind::rec_success, ndcg_at_k(prompt.items, judged, agent.k)},
                                agent.rewards);
      state.finished = true;
      state.success = true;
    } else {
      record.response = TurnOutcome::rec_rejected;
      record.reward = reward_of({RewardEventKind::rec_reject}, agent.rewards);
      ItemSet shown(prompt.items.begin(), prompt.items.end());
      sets::normalize(shown);
      state.candidate_items = sets::set_difference<ItemId>(state.candidate_items, shown);
      if (agent.kind == AgentKind::mf) state.finished = true;
    }
  }

  ++state.turn;
  record.turn = state.turn;
  if (!state.finished && state.turn >= agent.max_turns) {
    state.finished = true;
    state.success = false;
    record.reward = reward_of({RewardEventKind::max_turns}, agent.rewards);
  }
  state.history.push_back(record);
  return record;
}

TurnRecord step(SessionState& state, const AgentBundle& agent, Respondent& respondent,
                std::mt19937_64& rng) {
  Prompt prompt = propose(state, agent, rng);
  Response response;
  if (prompt.action == Action::ask) {
    response.attribute_liked = respondent.answer_attribute(state, *prompt.attribute);
  } else {
    response.accepted_items = respondent.judge_recommendation(state, prompt.items);
  }
  return apply_response(state, agent, prompt, response);
}

SessionOutcome outcome_of(const SessionState& state) {
  SessionOutcome o;
  o.user = state.user;
  o.success = state.success;
  o.final_list = state.final_list;
  o.groundtruth = state.groundtruth;
  o.turns = state.turn;
  o.first_attribute = state.first_attribute.value_or(0);
  o.trace = state.history;
  return o;
}

SessionOutcome run_session(SessionState& state, const AgentBundle& agent, Respondent& respondent,
                           std::mt19937_64& rng) {
  while (!state.finished) step(state, agent, respondent, rng);
  return outcome_of(state);
}

std::vector<UserId> benchmark_users(const InteractionSplit& split) {
  std::vector<UserId> users;
  for (UserId u = 0; u < split.num_users(); ++u) {
    if (!split.valid_items[u].empty() && !split.test_items[u].empty()) users.push_back(u);
  }
  return users;
}

std::vector<SessionOutcome> run_benchmark(std::span<const UserId> users, const AgentBundle& agent,
                                          std::uint64_t seed) {
  agent.validate();
  SimulatedUser simulator(*agent.catalog);
  std::vector<SessionOutcome> outcomes;
  outcomes.reserve(users.size());
  for (UserId u : users) {
    SessionState state = start_session(u, agent, SessionMode::eval, seed);
    std::mt19937_64 rng(mix_seed(seed ^ 0xa5a5a5a5ULL, u));
    outcomes.push_back(run_session(state, agent, simulator, rng));
  }
  return outcomes;
}

ForcedDiagnostics forced_recommendation_curve(std::span<const UserId> users,
                                              const AgentBundle& agent, std::uint64_t seed) {
  agent.validate();
  SimulatedUser simulator(*agent.catalog);
  ForcedDiagnostics out;
  out.curve.resize(agent.max_turns);
  for (std::size_t t = 0; t < agent.max_turns; ++t) out.curve[t].turn = t + 1;
  if (users.empty()) return out;

  for (UserId u : users) {
    SessionState state = start_session(u, agent, SessionMode::eval, seed);
    for (std::size_t t = 1; t <= agent.max_turns; ++t) {
      std::vector<ItemId> list = recommendation_list(state, agent);
      out.curve[t - 1].ndcg += ndcg_at_k(list, state.groundtruth, agent.k);
      out.curve[t - 1].ht += ht_at_k(list, state.groundtruth, agent.k, agent.hit_rate_norm);
      if (t == agent.max_turns || agent.kind == AgentKind::mf) continue;
      std::optional<AttrId> p = choose_attribute(state, agent);
      if (!p) continue;  // nothing worth asking: the list stays as is
      Prompt prompt;
      prompt.action = Action::ask;
      prompt.attribute = p;
      Response response;
      response.attribute_liked = simulator.answer_attribute(state, *p);
      apply_response(state, agent, prompt, response);
    }
    out.sessions.push_back(outcome_of(state));
  }
  for (auto& point : out.curve) {
    point.ndcg /= static_cast<double>(users.size());
    point.ht /= static_cast<double>(users.size());
  }
  return out;
}

double groundtruth_item_auc(const EmbeddingSet& embeds, const InteractionSplit& split, UserId user,
                            const Vector& user_vec) {
  const ItemSet& positives = split.test_items.at(user);
  ItemSet negatives;
  for (ItemId v = 0; v < static_cast<std::size_t>(embeds.item_vecs.rows()); ++v) {
    if (!sets::contains(split.train_items[user], v) && !sets::contains(split.valid_items[user], v) &&
        !sets::contains(positives, v)) {
      negatives.push_back(v);
    }
  }
  Vector scores = embeds.item_vecs * user_vec;
  return auc_pairs(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())),
                   positives, negatives);
}

std::vector<AttrId> accepted_prefix(const SessionOutcome& outcome, std::size_t turns) {
  std::vector<AttrId> prefs;
  prefs.push_back(outcome.first_attribute);
  for (const auto& t : outcome.trace) {
    if (t.turn > turns) break;
    if (t.response == TurnOutcome::ask_accepted && t.attribute) prefs.push_back(*t.attribute);
  }
  return prefs;
}

BenchmarkReport assemble_report(std::span<const SessionOutcome> outcomes,
                                const ForcedDiagnostics& forced, const AgentBundle& agent) {
  agent.validate();
  BenchmarkReport r;
  r.agent = std::string(to_string(agent.kind));
  r.k = agent.k;
  r.max_turns = agent.max_turns;
  r.per_turn = forced.curve;
  r.ask_frequency = ask_frequency(outcomes, agent.catalog->num_attributes);

  for (const auto& o : outcomes) {
    UserRow row;
    row.user = o.user;
    row.success = o.success;
    row.turns = o.success ? o.turns : agent.max_turns;
    if (o.success) {
      row.ndcg = ndcg_at_k(o.final_list, o.groundtruth, agent.k);
      row.ht = ht_at_k(o.final_list, o.groundtruth, agent.k, agent.hit_rate_norm);
    }
    r.rows.push_back(row);
  }
  if (!r.rows.empty()) {
    double ndcg = 0.0;
    double ht = 0.0;
    for (const auto& row : r.rows) {
      ndcg += row.ndcg;
      ht += row.ht;
    }
    r.ndcg_at_k = ndcg / static_cast<double>(r.rows.size());
    r.ht_at_k = ht / static_cast<double>(r.rows.size());
    if (agent.kind != AgentKind::mf) r.average_turns = average_turns(outcomes, agent.max_turns);
  }

  const std::size_t turns = agent.max_turns;
  std::vector<double> item_sum(turns + 1, 0.0), attr_sum(turns + 1, 0.0);
  std::vector<std::size_t> item_n(turns + 1, 0), attr_n(turns + 1, 0);
  for (const auto& o : outcomes) {
    if (agent.split->test_items.at(o.user).empty()) continue;
    Vector r_u0 = agent.embeds->user_vecs.row(o.user).transpose();
    std::vector<AttrId> last_prefix;
    Vector vec = r_u0;
    for (std::size_t t = 0; t <= turns; ++t) {
      if (t > 0 && agent.refiner != nullptr) {
        std::vector<AttrId> prefix = accepted_prefix(o, t);
        if (prefix != last_prefix) {
          vec = refine(*agent.refiner, r_u0, prefix, agent.embeds->attr_vecs);
          last_prefix = std::move(prefix);
        }
      }
      item_sum[t] += groundtruth_item_auc(*agent.embeds, *agent.split, o.user, vec);
      ++item_n[t];
      AttrSet gt_attrs = groundtruth_attributes(*agent.catalog, o.groundtruth);
      if (gt_attrs.size() < agent.catalog->num_attributes) {
        attr_sum[t] += auc_attributes(vec, agent.embeds->attr_vecs, o.groundtruth, *agent.catalog);
        ++attr_n[t];
      }
    }
  }
  for (std::size_t t = 0; t <= turns; ++t) {
    r.auc_item_by_turn.push_back(item_n[t] ? item_sum[t] / item_n[t] : 0.0);
    r.auc_attr_by_turn.push_back(attr_n[t] ? attr_sum[t] / attr_n[t] : 0.0);
  }
  return r;
}

void write_trace_jsonl(std::ostream& out, const SessionOutcome& o) {
  for (const auto& t : o.trace) {
    json line;
    line["user"] = o.user;
    line["turn"] = t.turn;
    line["action"] = to_string(t.action);
    if (t.action == Action::ask) {
      line["payload"] = {{"attribute", t.attribute.value_or(0)}};
    } else {
      line["payload"] = {{"items", t.items}};
    }
    line["response"] = to_string(t.response);
    line["accepted_items"] = t.accepted_items;
    line["reward"] = t.reward;
    out << line.dump() << '\n';
  }
  json summary;
  summary["outcome"] = {{"user", o.user},
                        {"success", o.success},
                        {"turns", o.turns},
                        {"first_attribute", o.first_attribute},
                        {"final_list", o.final_list},
                        {"groundtruth", o.groundtruth}};
  out << summary.dump() << '\n';
}

void write_traces(const std::filesystem::path& path, std::span<const SessionOutcome> outcomes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& o : outcomes) write_trace_jsonl(out, o);
}

std::vector<SessionOutcome> read_traces(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<SessionOutcome> outcomes;
  SessionOutcome current;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (doc.contains("outcome")) {
      const json& o = doc["outcome"];
      current.user = o.at("user").get<UserId>();
      current.success = o.at("success").get<bool>();
      current.turns = o.at("turns").get<std::size_t>();
      current.first_attribute = o.at("first_attribute").get<AttrId>();
      current.final_list = o.at("final_list").get<std::vector<ItemId>>();
      current.groundtruth = o.at("groundtruth").get<ItemSet>();
      outcomes.push_back(std::move(current));
      current = SessionOutcome{};
      continue;
    }
    TurnRecord t;
    t.turn = doc.at("turn").get<std::size_t>();
    std::string action = doc.at("action").get<std::string>();
    t.action = action == "ask" ? Action::ask : Action::recommend;
    if (t.action == Action::ask) {
      t.attribute = doc.at("payload").at("attribute").get<AttrId>();
    } else {
      t.items = doc.at("payload").at("items").get<std::vector<ItemId>>();
    }
    std::string response = doc.at("response").get<std::string>();
    if (response == "attr-accept") t.response = TurnOutcome::ask_accepted;
    else if (response == "attr-reject") t.response = TurnOutcome::ask_rejected;
    else if (response == "rec-accept") t.response = TurnOutcome::rec_accepted;
    else if (response == "rec-reject") t.response = TurnOutcome::rec_rejected;
    else throw InputError(path.string() + ":" + std::to_string(line_no) + ": unknown response");
    t.accepted_items = doc.at("accepted_items").get<std::vector<ItemId>>();
    t.reward = doc.at("reward").get<double>();
    current.trace.push_back(std::move(t));
  }
  return outcomes;
}

}  // namespace convoseek
