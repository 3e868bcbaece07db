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

#include "convoseek/selector.hpp"

#include <cmath>

#include "convoseek/metrics.hpp"
#include "convoseek/sets.hpp"

namespace convoseek {

namespace {

ItemSet rankable_items(std::size_t num_items, const ItemSet& excluded) {
  ItemSet out;
  out.reserve(num_items);
  for (ItemId v = 0; v < num_items; ++v) {
    if (!sets::contains(excluded, v)) out.push_back(v);
  }
  return out;
}

double ndcg_of_scores(std::span<const ItemId> items, std::span<const double> scores,
                      const ItemSet& groundtruth, std::size_t k) {
  std::vector<ScoredItem> top = top_k(items, scores, k);
  std::vector<ItemId> ranked;
  ranked.reserve(top.size());
  for (const auto& s : top) ranked.push_back(s.item);
  return ndcg_at_k(ranked, groundtruth, k);
}

}  // namespace

double validation_ndcg(const EmbeddingSet& embeds, const Vector& user_vec,
                       const SelectorContext& ctx, std::size_t k) {
  if (ctx.valid_groundtruth.empty()) throw InputError("selector: user has no validation items");
  ItemSet items = rankable_items(static_cast<std::size_t>(embeds.item_vecs.rows()),
                                 ctx.excluded_items);
  std::vector<ScoredItem> top = rank_items(embeds, user_vec, items, k);
  std::vector<ItemId> ranked;
  ranked.reserve(top.size());
  for (const auto& s : top) ranked.push_back(s.item);
  return ndcg_at_k(ranked, ctx.valid_groundtruth, k);
}

std::optional<AttrId> greedy_ndcg_select(const SelectorContext& ctx, const EmbeddingSet& embeds,
                                         const RefinerParams& refiner, std::size_t k) {
  if (ctx.candidates.empty()) return std::nullopt;
  if (ctx.valid_groundtruth.empty()) throw InputError("selector: user has no validation items");

  const double baseline = validation_ndcg(embeds, ctx.r_ut, ctx, k);

  // One refined vector per candidate, stacked as columns, so every item score
  // comes out of a single matrix product.
  const auto d = static_cast<Eigen::Index>(embeds.dim());
  const auto m = static_cast<Eigen::Index>(ctx.candidates.size());
  Matrix refined(d, m);
  std::vector<AttrId> prefs = ctx.prefs_accepted;
  prefs.push_back(0);
  for (Eigen::Index j = 0; j < m; ++j) {
    prefs.back() = ctx.candidates[static_cast<std::size_t>(j)];
    refined.col(j) = refine(refiner, ctx.r_u0, prefs, embeds.attr_vecs);
  }

  ItemSet items = rankable_items(static_cast<std::size_t>(embeds.item_vecs.rows()),
                                 ctx.excluded_items);
  Matrix item_rows(static_cast<Eigen::Index>(items.size()), d);
  for (std::size_t i = 0; i < items.size(); ++i) {
    item_rows.row(static_cast<Eigen::Index>(i)) = embeds.item_vecs.row(items[i]);
  }
  Eigen::MatrixXd scores = item_rows * refined;  // column-major: one column per candidate

  std::optional<AttrId> best;
  double best_gain = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    std::span<const double> column(scores.col(j).data(), items.size());
    double gain = ndcg_of_scores(items, column, ctx.valid_groundtruth, k) - baseline;
    if (gain > best_gain) {
      best_gain = gain;
      best = ctx.candidates[static_cast<std::size_t>(j)];
    }
  }
  return best;
}

double attribute_entropy(const Catalog& catalog, AttrId attribute,
                         std::span<const ItemId> candidate_items) {
  if (candidate_items.empty()) return 0.0;
  std::size_t covered = 0;
  for (ItemId v : candidate_items) {
    if (sets::contains(catalog.attributes_of(v), attribute)) ++covered;
  }
  const std::size_t n = candidate_items.size();
  // H(q) = H(1 − q); evaluate on the smaller side so both give identical bits.
  std::size_t minority = std::min(covered, n - covered);
  if (minority == 0) return 0.0;
  double q = static_cast<double>(minority) / static_cast<double>(n);
  return -q * std::log2(q) - (1.0 - q) * std::log2(1.0 - q);
}

std::optional<AttrId> max_entropy_select(const SelectorContext& ctx, const Catalog& catalog,
                                         std::span<const ItemId> candidate_items) {
  if (candidate_items.empty()) return std::nullopt;
  std::optional<AttrId> best;
  double best_entropy = 0.0;
  for (AttrId p : ctx.candidates) {
    double h = attribute_entropy(catalog, p, candidate_items);
    if (h > best_entropy) {
      best_entropy = h;
      best = p;
    }
  }
  return best;
}

}  // namespace convoseek
