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

#include "convoseek/corpus.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "convoseek/sets.hpp"

namespace convoseek {

namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

template <typename T>
bool parse_integer(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

[[noreturn]] void fail_line(const std::filesystem::path& path, std::size_t line_no,
                            const std::string& what) {
  throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

std::ofstream create_or_throw(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::vector<AttrSet> parse_item_attributes(const std::filesystem::path& path,
                                           std::size_t& num_attributes) {
  auto in = open_or_throw(path);
  std::map<ItemId, AttrSet> rows;
  std::string line;
  std::size_t line_no = 0;
  AttrId max_attr = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    auto tab = view.find('\t');
    if (tab == std::string_view::npos) fail_line(path, line_no, "expected item_id<TAB>attr_ids");
    ItemId item = 0;
    if (!parse_integer(view.substr(0, tab), item)) fail_line(path, line_no, "bad item id");
    if (rows.contains(item)) fail_line(path, line_no, "duplicate item " + std::to_string(item));
    AttrSet attrs;
    std::string_view rest = view.substr(tab + 1);
    while (!rest.empty()) {
      auto comma = rest.find(',');
      std::string_view token = rest.substr(0, comma);
      AttrId attr = 0;
      if (!parse_integer(token, attr)) fail_line(path, line_no, "bad attribute id");
      attrs.push_back(attr);
      max_attr = std::max(max_attr, attr);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (attrs.empty()) fail_line(path, line_no, "item has no attributes");
    sets::normalize(attrs);
    rows.emplace(item, std::move(attrs));
  }
  if (rows.empty()) throw InputError(path.string() + ": empty attribute file");
  std::size_t num_items = static_cast<std::size_t>(rows.rbegin()->first) + 1;
  std::vector<AttrSet> out(num_items);
  for (auto& [item, attrs] : rows) out[item] = std::move(attrs);
  for (std::size_t i = 0; i < num_items; ++i) {
    if (out[i].empty()) {
      throw InputError(path.string() + ": item " + std::to_string(i) + " has no attribute line");
    }
  }
  num_attributes = static_cast<std::size_t>(max_attr) + 1;
  return out;
}

// Largest-remainder apportionment of n into 7:2:1, each part >= 1.
std::array<std::size_t, 3> split_counts(std::size_t n) {
  constexpr std::array<double, 3> kRatio = {0.7, 0.2, 0.1};
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    // Scale by 10 in integers so 0.7 * 10 is exactly 7.
    std::size_t exact_tenths = n * static_cast<std::size_t>(std::lround(kRatio[s] * 10));
    counts[s] = exact_tenths / 10;
    remainder[s] = static_cast<double>(exact_tenths % 10);
    assigned += counts[s];
  }
  while (assigned < n) {
    std::size_t best = 0;
    for (std::size_t s = 1; s < 3; ++s) {
      if (remainder[s] > remainder[best]) best = s;
    }
    ++counts[best];
    remainder[best] = -1.0;
    ++assigned;
  }
  for (std::size_t s = 1; s < 3; ++s) {
    if (counts[s] == 0) {
      --counts[0];
      ++counts[s];
    }
  }
  return counts;
}

// Efraimidis-Spirakis weighted sampling without replacement.
std::vector<std::size_t> weighted_sample(std::span<const double> weights, std::size_t count,
                                         std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<double, std::size_t>> keys;
  keys.reserve(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    double u = unit(rng);
    if (weights[i] <= 0.0) continue;
    keys.emplace_back(std::log(std::max(u, 1e-300)) / weights[i], i);
  }
  count = std::min(count, keys.size());
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(count), keys.end(),
                    [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first : a.second < b.second;
                    });
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(keys[i].second);
  return out;
}

json pairs_to_json(std::span<const Interaction> pairs) {
  json arr = json::array();
  for (const auto& p : pairs) arr.push_back({p.user, p.item});
  return arr;
}

std::vector<Interaction> pairs_from_json(const json& arr, const std::string& name) {
  if (!arr.is_array()) throw InputError("split: '" + name + "' is not an array");
  std::vector<Interaction> out;
  out.reserve(arr.size());
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2) throw InputError("split: malformed pair in '" + name + "'");
    out.push_back({p[0].get<UserId>(), p[1].get<ItemId>()});
  }
  return out;
}

}  // namespace

Catalog Catalog::make(std::size_t num_users, std::vector<AttrSet> item_attributes,
                      std::size_t num_attributes) {
  Catalog c;
  c.num_users = num_users;
  c.num_items = item_attributes.size();
  c.num_attributes = num_attributes;
  c.item_attributes = std::move(item_attributes);
  c.attribute_items.assign(num_attributes, {});
  for (ItemId v = 0; v < c.num_items; ++v) {
    sets::normalize(c.item_attributes[v]);
    for (AttrId p : c.item_attributes[v]) {
      if (p >= num_attributes) {
        throw InputError("item " + std::to_string(v) + " references attribute " +
                         std::to_string(p) + " >= " + std::to_string(num_attributes));
      }
      c.attribute_items[p].push_back(v);
    }
  }
  return c;
}

void Catalog::validate() const {
  if (item_attributes.size() != num_items) throw InputError("catalog: item count mismatch");
  if (attribute_items.size() != num_attributes) throw InputError("catalog: attribute count mismatch");
  std::vector<ItemSet> inverse(num_attributes);
  for (ItemId v = 0; v < num_items; ++v) {
    const auto& attrs = item_attributes[v];
    if (attrs.empty()) throw InputError("catalog: item " + std::to_string(v) + " has no attributes");
    if (!std::is_sorted(attrs.begin(), attrs.end()) ||
        std::adjacent_find(attrs.begin(), attrs.end()) != attrs.end()) {
      throw InputError("catalog: attributes of item " + std::to_string(v) + " not a sorted set");
    }
    for (AttrId p : attrs) {
      if (p >= num_attributes) throw InputError("catalog: attribute id out of range");
      inverse[p].push_back(v);
    }
  }
  if (inverse != attribute_items) throw InputError("catalog: attribute index is not the inverse");
}

RawCorpus load_catalog(const std::filesystem::path& interactions_path,
                       const std::filesystem::path& attributes_path,
                       std::size_t min_interactions) {
  std::size_t num_attributes = 0;
  auto item_attributes = parse_item_attributes(attributes_path, num_attributes);
  const std::size_t num_items = item_attributes.size();

  auto in = open_or_throw(interactions_path);
  std::map<std::int64_t, ItemSet> by_user;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    auto tab = view.find('\t');
    if (tab == std::string_view::npos) fail_line(interactions_path, line_no, "expected user_id<TAB>item_id");
    std::int64_t user = 0;
    std::int64_t item = 0;
    if (!parse_integer(view.substr(0, tab), user) || user < 0) {
      fail_line(interactions_path, line_no, "bad user id");
    }
    if (!parse_integer(view.substr(tab + 1), item) || item < 0) {
      fail_line(interactions_path, line_no, "bad item id");
    }
    if (static_cast<std::size_t>(item) >= num_items) {
      fail_line(interactions_path, line_no,
                "item " + std::to_string(item) + " missing from " + attributes_path.string());
    }
    by_user[user].push_back(static_cast<ItemId>(item));
  }
  if (by_user.empty()) throw InputError(interactions_path.string() + ": empty interaction file");

  RawCorpus out;
  for (auto& [original, items] : by_user) {
    sets::normalize(items);
    if (items.size() < min_interactions) continue;
    auto dense = static_cast<UserId>(out.original_user_ids.size());
    out.original_user_ids.push_back(original);
    for (ItemId v : items) out.interactions.push_back({dense, v});
  }
  if (out.original_user_ids.empty()) {
    throw InputError("no user has at least " + std::to_string(min_interactions) + " interactions");
  }
  out.catalog = Catalog::make(out.original_user_ids.size(), std::move(item_attributes), num_attributes);
  return out;
}

InteractionSplit InteractionSplit::from_pairs(std::size_t num_users, std::uint64_t seed,
                                              std::vector<Interaction> train,
                                              std::vector<Interaction> valid,
                                              std::vector<Interaction> test) {
  InteractionSplit s;
  s.seed = seed;
  s.train = std::move(train);
  s.valid = std::move(valid);
  s.test = std::move(test);
  auto view = [num_users](const std::vector<Interaction>& pairs) {
    std::vector<ItemSet> per_user(num_users);
    for (const auto& p : pairs) {
      if (p.user >= num_users) throw InputError("split: user id out of range");
      per_user[p.user].push_back(p.item);
    }
    for (auto& items : per_user) sets::normalize(items);
    return per_user;
  };
  s.train_items = view(s.train);
  s.valid_items = view(s.valid);
  s.test_items = view(s.test);
  return s;
}

void InteractionSplit::validate() const {
  for (std::size_t u = 0; u < num_users(); ++u) {
    if (train_items[u].empty()) {
      throw InputError("split: user " + std::to_string(u) + " has no training interactions");
    }
    std::span<const ItemId> tr = train_items[u], va = valid_items[u], te = test_items[u];
    if (!sets::set_intersection(tr, va).empty() || !sets::set_intersection(tr, te).empty() ||
        !sets::set_intersection(va, te).empty()) {
      throw InputError("split: splits overlap for user " + std::to_string(u));
    }
  }
}

InteractionSplit split_interactions(std::span<const Interaction> interactions,
                                    std::size_t num_users, std::uint64_t seed) {
  std::vector<ItemSet> per_user(num_users);
  for (const auto& p : interactions) {
    if (p.user >= num_users) throw InputError("split: user id out of range");
    per_user[p.user].push_back(p.item);
  }
  std::mt19937_64 rng(seed);
  std::vector<Interaction> train, valid, test;
  for (UserId u = 0; u < num_users; ++u) {
    auto& items = per_user[u];
    sets::normalize(items);
    if (items.size() < 3) {
      throw InputError("split: user " + std::to_string(u) + " has " + std::to_string(items.size()) +
                       " interactions; need at least 3");
    }
    std::shuffle(items.begin(), items.end(), rng);
    auto counts = split_counts(items.size());
    std::size_t pos = 0;
    for (std::size_t i = 0; i < counts[0]; ++i) train.push_back({u, items[pos++]});
    for (std::size_t i = 0; i < counts[1]; ++i) valid.push_back({u, items[pos++]});
    for (std::size_t i = 0; i < counts[2]; ++i) test.push_back({u, items[pos++]});
  }
  auto by_pair = [](std::vector<Interaction>& v) { std::sort(v.begin(), v.end()); };
  by_pair(train);
  by_pair(valid);
  by_pair(test);
  return InteractionSplit::from_pairs(num_users, seed, std::move(train), std::move(valid),
                                      std::move(test));
}

ItemStats compute_item_frequency(const InteractionSplit& split, std::size_t num_items,
                                 FrequencyScale scale) {
  std::vector<double> counts(num_items, 0.0);
  for (const auto& p : split.train) {
    if (p.item >= num_items) throw InputError("frequency: item id out of range");
    counts[p.item] += 1.0;
  }
  const double total = scale == FrequencyScale::share
                            ? static_cast<double>(split.train.size())
                            : (counts.empty() ? 0.0 : *std::max_element(counts.begin(), counts.end()));
  ItemStats stats;
  stats.frequency.resize(num_items, 0.0);
  if (total > 0.0) {
    for (std::size_t i = 0; i < num_items; ++i) stats.frequency[i] = counts[i] / total;
  }
  return stats;
}

AdjacencyIndex build_adjacency(const Catalog& catalog, const InteractionSplit& split) {
  AdjacencyIndex index;
  index.adjacent.resize(split.num_users());
  for (std::size_t u = 0; u < split.num_users(); ++u) {
    auto& adj = index.adjacent[u];
    for (ItemId v : split.train_items[u]) {
      const auto& attrs = catalog.attributes_of(v);
      adj.insert(adj.end(), attrs.begin(), attrs.end());
    }
    sets::normalize(adj);
  }
  return index;
}

SyntheticCorpus generate_synthetic(std::size_t num_users, std::size_t num_items,
                                   std::size_t num_attributes, std::uint64_t seed) {
  if (num_attributes < 5) throw InputError("synthetic: need at least 5 attributes");
  if (num_users == 0) throw InputError("synthetic: need at least one user");
  if (num_items < 2 * num_attributes) throw InputError("synthetic: need at least 2 items per attribute");

  constexpr std::size_t kMinTastes = 2;
  constexpr std::size_t kMaxTastes = 4;
  constexpr std::size_t kMinCount = 20;
  constexpr std::size_t kMaxCount = 50;
  constexpr double kTasteShare = 0.9;

  std::mt19937_64 rng(seed);

  // Zipf-like attribute popularity over a random permutation of ids.
  std::vector<std::size_t> order(num_attributes);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<double> attr_weight(num_attributes);
  for (std::size_t rank = 0; rank < num_attributes; ++rank) {
    attr_weight[order[rank]] = 1.0 / std::pow(static_cast<double>(rank + 1), 0.8);
  }

  std::uniform_int_distribution<std::size_t> attr_count(1, 5);
  std::vector<AttrSet> item_attributes(num_items);
  for (auto& attrs : item_attributes) {
    for (std::size_t p : weighted_sample(attr_weight, attr_count(rng), rng)) {
      attrs.push_back(static_cast<AttrId>(p));
    }
    sets::normalize(attrs);
  }
  // Give every attribute at least one item.
  {
    std::vector<std::size_t> coverage(num_attributes, 0);
    for (const auto& attrs : item_attributes) {
      for (AttrId p : attrs) ++coverage[p];
    }
    std::uniform_int_distribution<std::size_t> any_item(0, num_items - 1);
    for (AttrId p = 0; p < num_attributes; ++p) {
      while (coverage[p] < 2) {
        auto& attrs = item_attributes[any_item(rng)];
        if (attrs.size() >= 5 || sets::contains(attrs, p)) continue;
        sets::insert(attrs, p);
        ++coverage[p];
      }
    }
  }
  Catalog catalog = Catalog::make(num_users, std::move(item_attributes), num_attributes);

  std::lognormal_distribution<double> appeal_dist(0.0, 0.75);
  std::vector<double> appeal(num_items);
  for (auto& a : appeal) a = appeal_dist(rng);

  std::uniform_int_distribution<std::size_t> taste_count(kMinTastes, kMaxTastes);
  std::uniform_int_distribution<std::size_t> interaction_count(kMinCount, kMaxCount);
  std::vector<double> uniform_attr(num_attributes, 1.0);

  SyntheticCorpus out;
  out.planted.resize(num_users);
  for (UserId u = 0; u < num_users; ++u) {
    AttrSet tastes;
    ItemSet pool;
    std::size_t count = 0;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 1000) throw InputError("synthetic: cannot build a feasible taste profile");
      tastes.clear();
      for (std::size_t p : weighted_sample(uniform_attr, taste_count(rng), rng)) {
        tastes.push_back(static_cast<AttrId>(p));
      }
      sets::normalize(tastes);
      pool.clear();
      for (AttrId p : tastes) {
        const auto& items = catalog.attribute_items[p];
        pool.insert(pool.end(), items.begin(), items.end());
      }
      sets::normalize(pool);
      count = interaction_count(rng);
      std::size_t taste_needed = static_cast<std::size_t>(std::ceil(kTasteShare * count));
      if (pool.size() >= taste_needed && num_items - pool.size() >= count - taste_needed) break;
    }
    const std::size_t taste_needed = static_cast<std::size_t>(std::ceil(kTasteShare * count));

    // Items matching several tastes are more likely to be consumed.
    std::vector<double> pool_weight(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      std::span<const AttrId> attrs = catalog.attributes_of(pool[i]);
      double matches = static_cast<double>(sets::set_intersection<AttrId>(attrs, tastes).size());
      pool_weight[i] = appeal[pool[i]] * matches;
    }
    ItemSet chosen;
    for (std::size_t i : weighted_sample(pool_weight, taste_needed, rng)) chosen.push_back(pool[i]);

    ItemSet outside;
    for (ItemId v = 0; v < num_items; ++v) {
      if (!sets::contains(pool, v)) outside.push_back(v);
    }
    std::vector<double> outside_weight(outside.size());
    for (std::size_t i = 0; i < outside.size(); ++i) outside_weight[i] = appeal[outside[i]];
    for (std::size_t i : weighted_sample(outside_weight, count - taste_needed, rng)) {
      chosen.push_back(outside[i]);
    }
    sets::normalize(chosen);
    for (ItemId v : chosen) out.interactions.push_back({u, v});
    out.planted[u] = std::move(tastes);
  }
  out.catalog = std::move(catalog);
  out.split = split_interactions(out.interactions, num_users, seed);
  return out;
}

double jaccard_similarity(std::span<const AttrId> a, std::span<const AttrId> b) {
  std::size_t inter = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++inter;
      ++ia;
      ++ib;
    }
  }
  std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

void write_interactions(const std::filesystem::path& path,
                        std::span<const Interaction> interactions) {
  auto out = create_or_throw(path);
  for (const auto& p : interactions) out << p.user << '\t' << p.item << '\n';
}

void write_item_attributes(const std::filesystem::path& path, const Catalog& catalog) {
  auto out = create_or_throw(path);
  for (ItemId v = 0; v < catalog.num_items; ++v) {
    out << v << '\t';
    const auto& attrs = catalog.item_attributes[v];
    for (std::size_t i = 0; i < attrs.size(); ++i) out << (i ? "," : "") << attrs[i];
    out << '\n';
  }
}

void write_split(const std::filesystem::path& path, const InteractionSplit& split) {
  json doc;
  doc["seed"] = split.seed;
  doc["train"] = pairs_to_json(split.train);
  doc["valid"] = pairs_to_json(split.valid);
  doc["test"] = pairs_to_json(split.test);
  auto out = create_or_throw(path);
  out << doc.dump() << '\n';
}

InteractionSplit read_split(const std::filesystem::path& path, std::size_t num_users) {
  auto in = open_or_throw(path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  auto split = InteractionSplit::from_pairs(
      num_users, doc.value("seed", std::uint64_t{0}), pairs_from_json(doc.at("train"), "train"),
      pairs_from_json(doc.at("valid"), "valid"), pairs_from_json(doc.at("test"), "test"));
  split.validate();
  return split;
}

void write_planted(const std::filesystem::path& path, std::span<const AttrSet> planted) {
  json doc = json::object();
  for (std::size_t u = 0; u < planted.size(); ++u) doc[std::to_string(u)] = planted[u];
  auto out = create_or_throw(path);
  out << doc.dump() << '\n';
}

std::vector<AttrSet> read_planted(const std::filesystem::path& path, std::size_t num_users) {
  auto in = open_or_throw(path);
  json doc;
  in >> doc;
  std::vector<AttrSet> planted(num_users);
  for (auto& [key, value] : doc.items()) {
    std::size_t u = std::stoul(key);
    if (u >= num_users) throw InputError("planted: user id out of range");
    planted[u] = value.get<AttrSet>();
  }
  return planted;
}

}  // namespace convoseek
