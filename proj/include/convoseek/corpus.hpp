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
#include <span>
#include <vector>

#include "convoseek/types.hpp"

namespace convoseek {

struct Interaction {
  UserId user = 0;
  ItemId item = 0;

  friend bool operator==(const Interaction&, const Interaction&) = default;
  friend auto operator<=>(const Interaction&, const Interaction&) = default;
};

/// Users, items and the item -> attribute relation, with its inverse.
///
/// Ids are dense and 0-based. `attribute_items` is always the exact inverse
/// of `item_attributes`; build catalogs through `Catalog::make` so the two
/// cannot drift apart.
struct Catalog {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::size_t num_attributes = 0;
  std::vector<AttrSet> item_attributes;
  std::vector<ItemSet> attribute_items;

  static Catalog make(std::size_t num_users, std::vector<AttrSet> item_attributes,
                      std::size_t num_attributes);

  const AttrSet& attributes_of(ItemId item) const { return item_attributes.at(item); }

  /// Throws InputError naming the first broken invariant.
  void validate() const;
};

/// Output of `load_catalog`: the filtered catalog plus the interactions
/// re-indexed to dense user ids. `original_user_ids[u]` is the id the user
/// had in the input file.
struct RawCorpus {
  Catalog catalog;
  std::vector<Interaction> interactions;
  std::vector<std::int64_t> original_user_ids;
};

inline constexpr std::size_t kMinUserInteractions = 10;

RawCorpus load_catalog(const std::filesystem::path& interactions_path,
                       const std::filesystem::path& attributes_path,
                       std::size_t min_interactions = kMinUserInteractions);

/// Train/validation/test partition of the implicit-feedback pairs.
struct InteractionSplit {
  std::uint64_t seed = 0;
  std::vector<Interaction> train;
  std::vector<Interaction> valid;
  std::vector<Interaction> test;
  // Per-user views, sorted item ids.
  std::vector<ItemSet> train_items;
  std::vector<ItemSet> valid_items;
  std::vector<ItemSet> test_items;

  std::size_t num_users() const { return train_items.size(); }

  /// Rebuilds the per-user views from the three pair lists.
  static InteractionSplit from_pairs(std::size_t num_users, std::uint64_t seed,
                                     std::vector<Interaction> train,
                                     std::vector<Interaction> valid,
                                     std::vector<Interaction> test);

  void validate() const;
};

/// Per-user 7:2:1 split. Counts use floor-then-largest-remainder so that a
/// user with 10 interactions gets exactly 7/2/1; every split gets at least
/// one item. Users with fewer than 3 interactions are rejected.
InteractionSplit split_interactions(std::span<const Interaction> interactions,
                                    std::size_t num_users, std::uint64_t seed);

/// Per-item interaction frequency f_i over the training split.
struct ItemStats {
  std::vector<double> frequency;
};

enum class FrequencyScale {
  share,      // count / number of training pairs (sums to 1)
  max_count,  // count / count of the most interacted item (peak is 1)
};

/// With `max_count`, popular items get f near 1, and e^{-n1 f} then mutes
/// their ranking term almost entirely. `share` keeps f small on any corpus
/// and is the default.
ItemStats compute_item_frequency(const InteractionSplit& split, std::size_t num_items,
                                 FrequencyScale scale = FrequencyScale::share);

/// Attributes reachable from each user's training items.
struct AdjacencyIndex {
  std::vector<AttrSet> adjacent;
};

AdjacencyIndex build_adjacency(const Catalog& catalog, const InteractionSplit& split);

struct SyntheticCorpus {
  Catalog catalog;
  std::vector<Interaction> interactions;
  InteractionSplit split;
  std::vector<AttrSet> planted;  // hidden taste attributes per user
};

/// Generates a corpus with planted per-user tastes. Attribute popularity is
/// Zipf-like, items carry 1-5 attributes, and each user has 2-4 taste
/// attributes with at least 80% of their interactions touching one of them.
SyntheticCorpus generate_synthetic(std::size_t num_users, std::size_t num_items,
                                   std::size_t num_attributes, std::uint64_t seed);

/// |a ∩ b| / |a ∪ b| for sorted sets; 0 when both are empty.
double jaccard_similarity(std::span<const AttrId> a, std::span<const AttrId> b);

// Text formats. See README for the exact layouts.
void write_interactions(const std::filesystem::path& path,
                        std::span<const Interaction> interactions);
void write_item_attributes(const std::filesystem::path& path, const Catalog& catalog);
void write_split(const std::filesystem::path& path, const InteractionSplit& split);
InteractionSplit read_split(const std::filesystem::path& path, std::size_t num_users);
void write_planted(const std::filesystem::path& path, std::span<const AttrSet> planted);
std::vector<AttrSet> read_planted(const std::filesystem::path& path, std::size_t num_users);

}  // namespace convoseek
