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


#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

#include "convoseek/corpus.hpp"
#include "convoseek/sets.hpp"
#include "support/fixtures.hpp"

using namespace convoseek;

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

std::vector<Interaction> user_pairs(UserId user, std::size_t count) {
  std::vector<Interaction> out;
  for (ItemId v = 0; v < count; ++v) out.push_back({user, v});
  return out;
}

}  // namespace

TEST_CASE("catalog index is the inverse of item attributes") {
  Catalog c = Catalog::make(1, {{2, 0}, {1}, {0, 1, 2}}, 3);
  CHECK_NOTHROW(c.validate());
  CHECK(c.item_attributes[0] == AttrSet{0, 2});
  CHECK(c.attribute_items[0] == ItemSet{0, 2});
  CHECK(c.attribute_items[1] == ItemSet{1, 2});
  CHECK(c.attribute_items[2] == ItemSet{0, 2});
  CHECK_THROWS_AS(Catalog::make(1, {{5}}, 3), InputError);

  c.attribute_items[1].push_back(0);
  CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("catalog rejects items without attributes") {
  Catalog c = Catalog::make(1, {{0}, {}}, 1);
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("no attributes"), InputError);
}

TEST_CASE("load_catalog drops users below the interaction floor") {
  fixture::TempDir dir("corpus");
  std::string inter;
  for (int v = 0; v < 12; ++v) inter += "7\t" + std::to_string(v) + "\n";
  for (int v = 0; v < 3; ++v) inter += "9\t" + std::to_string(v) + "\n";
  std::string attrs;
  for (int v = 0; v < 12; ++v) attrs += std::to_string(v) + "\t" + std::to_string(v % 4) + "\n";
  write_text(dir / "i.tsv", inter);
  write_text(dir / "a.tsv", attrs);

  RawCorpus raw = load_catalog(dir / "i.tsv", dir / "a.tsv");
  CHECK(raw.catalog.num_users == 1);
  CHECK(raw.catalog.num_items == 12);
  CHECK(raw.catalog.num_attributes == 4);
  CHECK(raw.original_user_ids == std::vector<std::int64_t>{7});
  CHECK(raw.interactions.size() == 12);
  CHECK_NOTHROW(raw.catalog.validate());
}

TEST_CASE("load_catalog reports the offending line") {
  fixture::TempDir dir("corpus");
  write_text(dir / "a.tsv", "0\t1\n1\t0,1\n");
  write_text(dir / "i.tsv", "0\t0\n0\tbanana\n");
  CHECK_THROWS_WITH_AS(load_catalog(dir / "i.tsv", dir / "a.tsv", 1), doctest::Contains("i.tsv:2"),
                       InputError);

  write_text(dir / "i.tsv", "0\t0\n0\t5\n");
  CHECK_THROWS_WITH_AS(load_catalog(dir / "i.tsv", dir / "a.tsv", 1), doctest::Contains("missing"),
                       InputError);

  write_text(dir / "i.tsv", "");
  CHECK_THROWS_WITH_AS(load_catalog(dir / "i.tsv", dir / "a.tsv", 1), doctest::Contains("empty"),
                       InputError);

  write_text(dir / "a.tsv", "0\t1\n1\tx\n");
  write_text(dir / "i.tsv", "0\t0\n");
  CHECK_THROWS_WITH_AS(load_catalog(dir / "i.tsv", dir / "a.tsv", 1), doctest::Contains("a.tsv:2"),
                       InputError);
}

TEST_CASE("split sizes follow 7:2:1") {
  std::vector<Interaction> pairs = user_pairs(0, 10);
  auto more = user_pairs(1, 20);
  pairs.insert(pairs.end(), more.begin(), more.end());
  InteractionSplit s = split_interactions(pairs, 2, 11);
  CHECK(s.train_items[0].size() == 7);
  CHECK(s.valid_items[0].size() == 2);
  CHECK(s.test_items[0].size() == 1);
  CHECK(s.train_items[1].size() == 14);
  CHECK(s.valid_items[1].size() == 4);
  CHECK(s.test_items[1].size() == 2);
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("split is a pure function of pairs and seed") {
  auto corpus = generate_synthetic(30, 200, 10, 5);
  InteractionSplit a = split_interactions(corpus.interactions, 30, 99);
  InteractionSplit b = split_interactions(corpus.interactions, 30, 99);
  CHECK(a.train == b.train);
  CHECK(a.valid == b.valid);
  CHECK(a.test == b.test);
  InteractionSplit c = split_interactions(corpus.interactions, 30, 100);
  CHECK((a.train != c.train || a.valid != c.valid));
}

TEST_CASE("split partitions every user's items") {
  auto corpus = generate_synthetic(40, 300, 12, 3);
  const auto& s = corpus.split;
  std::map<UserId, std::set<ItemId>> all;
  for (const auto& p : corpus.interactions) all[p.user].insert(p.item);
  for (UserId u = 0; u < 40; ++u) {
    std::set<ItemId> seen;
    for (const auto* part : {&s.train_items[u], &s.valid_items[u], &s.test_items[u]}) {
      CHECK_FALSE(part->empty());
      for (ItemId v : *part) CHECK(seen.insert(v).second);
    }
    CHECK(seen == all[u]);
    const double n = static_cast<double>(all[u].size());
    CHECK(std::abs(static_cast<double>(s.train_items[u].size()) - 0.7 * n) < 1.0 + 1e-9);
    CHECK(std::abs(static_cast<double>(s.valid_items[u].size()) - 0.2 * n) < 1.0 + 1e-9);
  }
}

TEST_CASE("split rejects users that cannot fill three parts") {
  CHECK_THROWS_AS(split_interactions(user_pairs(0, 2), 1, 1), InputError);
}

TEST_CASE("item frequency, max-count scale") {
  // counts a:4 b:2 c:1, item 3 never seen
  std::vector<Interaction> train;
  for (UserId u = 0; u < 4; ++u) train.push_back({u, 0});
  for (UserId u = 0; u < 2; ++u) train.push_back({u, 1});
  train.push_back({0, 2});
  auto split = InteractionSplit::from_pairs(4, 0, train, {}, {});
  ItemStats st = compute_item_frequency(split, 4, FrequencyScale::max_count);
  CHECK(st.frequency[0] == 1.0);
  CHECK(st.frequency[1] == 0.5);
  CHECK(st.frequency[2] == 0.25);
  CHECK(st.frequency[3] == 0.0);

  ItemStats share = compute_item_frequency(split, 4);
  CHECK(share.frequency[0] == doctest::Approx(4.0 / 7.0));
  CHECK(share.frequency[3] == 0.0);
  double total = 0.0;
  for (double f : share.frequency) total += f;
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("item in every training pair has max-count frequency one") {
  std::vector<Interaction> train{{0, 1}, {1, 1}, {2, 1}};
  auto split = InteractionSplit::from_pairs(3, 0, train, {}, {});
  CHECK(compute_item_frequency(split, 2, FrequencyScale::max_count).frequency[1] == 1.0);
  CHECK(compute_item_frequency(split, 2).frequency[1] == 1.0);
}

TEST_CASE("adjacency is exactly the union of training-item attributes") {
  Catalog c = Catalog::make(2, {{1, 2}, {2, 3}, {4}, {0}}, 5);
  auto split = InteractionSplit::from_pairs(2, 0, {{0, 0}, {0, 1}, {1, 2}}, {{0, 3}}, {});
  AdjacencyIndex adj = build_adjacency(c, split);
  CHECK(adj.adjacent[0] == AttrSet{1, 2, 3});  // validation item 3 does not leak
  CHECK(adj.adjacent[1] == AttrSet{4});
}

TEST_CASE("adjacency soundness and completeness on a generated corpus") {
  auto corpus = generate_synthetic(50, 300, 15, 17);
  AdjacencyIndex adj = build_adjacency(corpus.catalog, corpus.split);
  for (UserId u = 0; u < 50; ++u) {
    for (AttrId p = 0; p < 15; ++p) {
      bool reachable = false;
      for (ItemId v : corpus.split.train_items[u]) {
        reachable = reachable || sets::contains(corpus.catalog.attributes_of(v), p);
      }
      CHECK(reachable == sets::contains(adj.adjacent[u], p));
    }
  }
}

TEST_CASE("jaccard similarity") {
  CHECK(jaccard_similarity(AttrSet{1, 2}, AttrSet{1, 2}) == 1.0);
  CHECK(jaccard_similarity(AttrSet{1}, AttrSet{2}) == 0.0);
  CHECK(jaccard_similarity(AttrSet{0, 1}, AttrSet{1, 2}) == doctest::Approx(1.0 / 3.0));
  CHECK(jaccard_similarity(AttrSet{}, AttrSet{}) == 0.0);
}

TEST_CASE("synthetic corpus invariants") {
  auto a = generate_synthetic(200, 500, 30, 7);
  auto b = generate_synthetic(200, 500, 30, 7);
  CHECK_NOTHROW(a.catalog.validate());
  CHECK_NOTHROW(a.split.validate());
  CHECK(a.interactions == b.interactions);
  CHECK(a.catalog.item_attributes == b.catalog.item_attributes);
  CHECK(a.planted == b.planted);

  for (const auto& attrs : a.catalog.item_attributes) {
    CHECK(attrs.size() >= 1);
    CHECK(attrs.size() <= 5);
  }
  std::vector<std::size_t> touching(200, 0), total(200, 0);
  for (const auto& p : a.interactions) {
    ++total[p.user];
    const auto& attrs = a.catalog.attributes_of(p.item);
    if (!sets::set_intersection<AttrId>(attrs, a.planted[p.user]).empty()) ++touching[p.user];
  }
  for (UserId u = 0; u < 200; ++u) {
    CHECK(a.planted[u].size() >= 2);
    CHECK(a.planted[u].size() <= 4);
    for (AttrId p : a.planted[u]) CHECK(p < 30);
    CHECK(total[u] >= 10);
    CHECK(static_cast<double>(touching[u]) >= 0.8 * static_cast<double>(total[u]));
  }
}

TEST_CASE("synthetic corpus rejects infeasible sizes") {
  CHECK_THROWS_AS(generate_synthetic(10, 100, 4, 1), InputError);
  CHECK_THROWS_AS(generate_synthetic(0, 100, 10, 1), InputError);
  CHECK_THROWS_AS(generate_synthetic(10, 15, 10, 1), InputError);
}

TEST_CASE("text formats round-trip") {
  fixture::TempDir dir("corpus");
  auto corpus = generate_synthetic(20, 120, 8, 21);
  write_interactions(dir / "i.tsv", corpus.interactions);
  write_item_attributes(dir / "a.tsv", corpus.catalog);
  write_split(dir / "split.json", corpus.split);
  write_planted(dir / "planted.json", corpus.planted);

  RawCorpus raw = load_catalog(dir / "i.tsv", dir / "a.tsv", 1);
  CHECK(raw.catalog.item_attributes == corpus.catalog.item_attributes);
  CHECK(raw.catalog.attribute_items == corpus.catalog.attribute_items);
  CHECK(raw.interactions == corpus.interactions);

  InteractionSplit s = read_split(dir / "split.json", 20);
  CHECK(s.train == corpus.split.train);
  CHECK(s.valid == corpus.split.valid);
  CHECK(s.test == corpus.split.test);
  CHECK(s.seed == corpus.split.seed);
  CHECK(read_planted(dir / "planted.json", 20) == corpus.planted);
}
