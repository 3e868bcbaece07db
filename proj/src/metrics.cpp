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

#include "convoseek/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <string>

#include <json.hpp>

#include "convoseek/sets.hpp"

namespace convoseek {

namespace {

using nlohmann::json;

bool in_set(std::span<const ItemId> groundtruth, ItemId item) {
  // Groundtruth sets are small; accept unsorted input too.
  return std::find(groundtruth.begin(), groundtruth.end(), item) != groundtruth.end();
}

std::ofstream create_or_throw(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

}  // namespace

double ndcg_at_k(std::span<const ItemId> ranked, std::span<const ItemId> groundtruth,
                 std::size_t k) {
  if (k == 0) throw InputError("ndcg: k must be >= 1");
  if (groundtruth.empty()) return 0.0;
  double dcg = 0.0;
  std::size_t depth = std::min(k, ranked.size());
  for (std::size_t i = 0; i < depth; ++i) {
    if (in_set(groundtruth, ranked[i])) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  double idcg = 0.0;
  std::size_t ideal = std::min(k, groundtruth.size());
  for (std::size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return dcg / idcg;
}

double ht_at_k(std::span<const ItemId> recommended, std::span<const ItemId> groundtruth,
               std::size_t k, HitRateNorm norm) {
  if (k == 0) throw InputError("ht: k must be >= 1");
  std::size_t depth = std::min(k, recommended.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < depth; ++i) {
    if (in_set(groundtruth, recommended[i])) ++hits;
  }
  std::size_t denom = k;
  if (norm == HitRateNorm::by_min_k_gt) {
    if (groundtruth.empty()) return 0.0;
    denom = std::min(k, groundtruth.size());
  }
  return static_cast<double>(hits) / static_cast<double>(denom);
}

double average_turns(std::span<const SessionOutcome> outcomes, std::size_t max_turns) {
  if (outcomes.empty()) throw InputError("average turns: no sessions");
  double total = 0.0;
  for (const auto& o : outcomes) {
    total += static_cast<double>(o.success ? std::min(o.turns, max_turns) : max_turns);
  }
  return total / static_cast<double>(outcomes.size());
}

double auc_pairs(std::span<const double> scores, std::span<const ItemId> positives,
                 std::span<const ItemId> negatives) {
  if (positives.empty() || negatives.empty()) throw InputError("auc: empty positive or negative set");
  struct Entry {
    double score;
    bool positive;
  };
  std::vector<Entry> entries;
  entries.reserve(positives.size() + negatives.size());
  for (ItemId p : positives) {
    if (p >= scores.size()) throw InputError("auc: id out of range");
    entries.push_back({scores[p], true});
  }
  for (ItemId n : negatives) {
    if (n >= scores.size()) throw InputError("auc: id out of range");
    entries.push_back({scores[n], false});
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.score < b.score; });
  // Mann-Whitney U with mid-ranks for ties.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < entries.size()) {
    std::size_t j = i;
    std::size_t positives_in_block = 0;
    while (j < entries.size() && entries[j].score == entries[i].score) {
      if (entries[j].positive) ++positives_in_block;
      ++j;
    }
    double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    positive_rank_sum += mid_rank * static_cast<double>(positives_in_block);
    i = j;
  }
  const auto np = static_cast<double>(positives.size());
  const auto nn = static_cast<double>(negatives.size());
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double auc_attributes(const Vector& user_vec, const Matrix& attr_vecs,
                      std::span<const ItemId> groundtruth, const Catalog& catalog) {
  if (groundtruth.empty()) throw InputError("attribute auc: empty groundtruth");
  AttrSet positives;
  for (ItemId v : groundtruth) {
    const auto& attrs = catalog.attributes_of(v);
    positives.insert(positives.end(), attrs.begin(), attrs.end());
  }
  sets::normalize(positives);
  AttrSet negatives;
  for (AttrId p = 0; p < catalog.num_attributes; ++p) {
    if (!sets::contains(positives, p)) negatives.push_back(p);
  }
  if (negatives.empty()) throw InputError("attribute auc: every attribute is positive");
  Vector scores = attr_vecs * user_vec;
  std::span<const double> view(scores.data(), static_cast<std::size_t>(scores.size()));
  return auc_pairs(view, positives, negatives);
}

std::vector<AskFrequency> ask_frequency(std::span<const SessionOutcome> outcomes,
                                        std::size_t num_attributes) {
  std::vector<double> counts(num_attributes, 0.0);
  for (const auto& o : outcomes) {
    AttrSet asked;
    for (const auto& t : o.trace) {
      if (t.action == Action::ask && t.attribute) asked.push_back(*t.attribute);
    }
    sets::normalize(asked);
    for (AttrId p : asked) {
      if (p < num_attributes) counts[p] += 1.0;
    }
  }
  std::vector<AskFrequency> out(num_attributes);
  const double n = outcomes.empty() ? 1.0 : static_cast<double>(outcomes.size());
  for (AttrId p = 0; p < num_attributes; ++p) out[p] = {p, counts[p] / n};
  std::stable_sort(out.begin(), out.end(), [](const AskFrequency& a, const AskFrequency& b) {
    return a.likelihood > b.likelihood;
  });
  return out;
}

double paired_sign_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("sign test: unpaired samples");
  std::size_t wins = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    ++n;
    if (a[i] > b[i]) ++wins;
  }
  if (n == 0) return 1.0;
  auto log_pmf = [n](std::size_t k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) -
           static_cast<double>(n) * std::log(2.0);
  };
  std::size_t tail_start = std::min(wins, n - wins);
  double tail = 0.0;
  for (std::size_t k = 0; k <= tail_start; ++k) tail += std::exp(log_pmf(k));
  return std::min(1.0, 2.0 * tail);
}

void write_report_json(const std::filesystem::path& path, const BenchmarkReport& r) {
  json doc;
  doc["agent"] = r.agent;
  doc["k"] = r.k;
  doc["max_turns"] = r.max_turns;
  doc["sessions"] = r.rows.size();
  doc["ndcg_at_k"] = r.ndcg_at_k;
  doc["ht_at_k"] = r.ht_at_k;
  doc["average_turns"] = r.average_turns ? json(*r.average_turns) : json(nullptr);
  json curve = json::array();
  for (const auto& c : r.per_turn) curve.push_back({{"turn", c.turn}, {"ndcg", c.ndcg}, {"ht", c.ht}});
  doc["per_turn"] = curve;
  json asks = json::array();
  for (const auto& a : r.ask_frequency) {
    asks.push_back({{"attribute", a.attribute}, {"likelihood", a.likelihood}});
  }
  doc["ask_frequency"] = asks;
  doc["auc_item_by_turn"] = r.auc_item_by_turn;
  doc["auc_attr_by_turn"] = r.auc_attr_by_turn;
  json rows = json::array();
  for (const auto& u : r.rows) {
    rows.push_back({{"user", u.user}, {"success", u.success}, {"turns", u.turns},
                    {"ndcg", u.ndcg}, {"ht", u.ht}});
  }
  doc["users"] = rows;
  auto out = create_or_throw(path);
  out << doc.dump(2) << '\n';
}

BenchmarkReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  BenchmarkReport r;
  r.agent = doc.at("agent").get<std::string>();
  r.k = doc.at("k").get<std::size_t>();
  r.max_turns = doc.at("max_turns").get<std::size_t>();
  r.ndcg_at_k = doc.at("ndcg_at_k").get<double>();
  r.ht_at_k = doc.at("ht_at_k").get<double>();
  if (!doc.at("average_turns").is_null()) r.average_turns = doc["average_turns"].get<double>();
  for (const auto& c : doc.at("per_turn")) {
    r.per_turn.push_back({c.at("turn").get<std::size_t>(), c.at("ndcg").get<double>(),
                          c.at("ht").get<double>()});
  }
  for (const auto& a : doc.at("ask_frequency")) {
    r.ask_frequency.push_back({a.at("attribute").get<AttrId>(), a.at("likelihood").get<double>()});
  }
  r.auc_item_by_turn = doc.at("auc_item_by_turn").get<std::vector<double>>();
  r.auc_attr_by_turn = doc.at("auc_attr_by_turn").get<std::vector<double>>();
  for (const auto& u : doc.at("users")) {
    r.rows.push_back({u.at("user").get<UserId>(), u.at("success").get<bool>(),
                      u.at("turns").get<std::size_t>(), u.at("ndcg").get<double>(),
                      u.at("ht").get<double>()});
  }
  return r;
}

void write_report_csv(const std::filesystem::path& path, const BenchmarkReport& r) {
  auto out = create_or_throw(path);
  out << std::setprecision(17);
  out << "user,success,turns,ndcg,ht\n";
  for (const auto& u : r.rows) {
    out << u.user << ',' << (u.success ? 1 : 0) << ',';
    if (r.average_turns) {
      out << u.turns;
    } else {
      out << "NA";
    }
    out << ',' << u.ndcg << ',' << u.ht << '\n';
  }
}

void write_curves_csv(const std::filesystem::path& path, const BenchmarkReport& r) {
  auto out = create_or_throw(path);
  out << std::setprecision(17);
  out << "turn,ndcg,ht,auc_item,auc_attr\n";
  std::size_t rows = std::max({r.per_turn.size() + 1, r.auc_item_by_turn.size(),
                               r.auc_attr_by_turn.size()});
  for (std::size_t t = 0; t < rows; ++t) {
    out << t << ',';
    if (t >= 1 && t <= r.per_turn.size()) {
      out << r.per_turn[t - 1].ndcg << ',' << r.per_turn[t - 1].ht;
    } else {
      out << "NA,NA";
    }
    out << ',';
    if (t < r.auc_item_by_turn.size()) out << r.auc_item_by_turn[t]; else out << "NA";
    out << ',';
    if (t < r.auc_attr_by_turn.size()) out << r.auc_attr_by_turn[t]; else out << "NA";
    out << '\n';
  }
}

}  // namespace convoseek
