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
#include <optional>
#include <span>
#include <vector>

#include "convoseek/corpus.hpp"
#include "convoseek/embed.hpp"
#include "convoseek/refiner.hpp"
#include "convoseek/types.hpp"

namespace convoseek {

/// What an attribute selector sees at one turn.
struct SelectorContext {
  UserId user = 0;
  Vector r_u0;
  Vector r_ut;
  std::vector<AttrId> prefs_accepted;  // in acceptance order
  AttrSet candidates;                  // unasked adjacent attributes
  ItemSet valid_groundtruth;
  ItemSet excluded_items;  // the user's training items
};

/// NDCG@k of `user_vec`'s ranking over every non-excluded item, judged
/// against the validation items.
double validation_ndcg(const EmbeddingSet& embeds, const Vector& user_vec,
                       const SelectorContext& ctx, std::size_t k);

/// Greedy NDCG attribute selection. For each candidate p, refines r_u0 with
/// prefs ∪ {p} and measures the validation NDCG gain over r_ut; returns the
/// candidate with the largest strictly positive gain (lowest id on ties), or
/// nothing when no candidate improves.
std::optional<AttrId> greedy_ndcg_select(const SelectorContext& ctx, const EmbeddingSet& embeds,
                                         const RefinerParams& refiner, std::size_t k);

/// Binary entropy (bits) of attribute coverage over the candidate items.
double attribute_entropy(const Catalog& catalog, AttrId attribute,
                         std::span<const ItemId> candidate_items);

/// Maximum-entropy baseline: the candidate attribute that best splits the
/// remaining items; nothing when no candidate has positive entropy.
std::optional<AttrId> max_entropy_select(const SelectorContext& ctx, const Catalog& catalog,
                                         std::span<const ItemId> candidate_items);

}  // namespace convoseek
