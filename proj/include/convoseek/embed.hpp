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

#include "convoseek/corpus.hpp"
#include "convoseek/types.hpp"

namespace convoseek {

/// Latent representations of users, items and attributes (one row each).
struct EmbeddingSet {
  Matrix user_vecs;
  Matrix item_vecs;
  Matrix attr_vecs;

  std::size_t dim() const { return static_cast<std::size_t>(user_vecs.cols()); }

  /// i.i.d. uniform in [-scale, scale].
  static EmbeddingSet random(std::size_t num_users, std::size_t num_items,
                             std::size_t num_attributes, std::size_t dim, std::uint64_t seed,
                             double scale = 0.01);

  void validate() const;
  void validate_against(const Catalog& catalog) const;

  /// FNV-1a over the raw bytes of all three matrices.
  std::uint64_t fingerprint() const;
};

struct FMHyper {
  std::size_t dim = 64;
  double n1 = 7.0;
  double n2 = 8.0;
  double lambda_reg = 0.001;
  double learning_rate = 0.05;
  std::size_t epochs = 100;
  std::size_t negatives_per_positive = 4;
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One BPR sample: the user prefers `pos` over `neg` given `prefs`.
struct FMSample {
  UserId user = 0;
  ItemId pos = 0;
  ItemId neg = 0;
  AttrSet prefs;
};

/// r_u·r_v + Σ_{p ∈ prefs} r_v·r_p.
double fm_score(const EmbeddingSet& embeds, UserId user, ItemId item, std::span<const AttrId> prefs);

/// Frequency-weighted BPR loss of one sample:
///   e^{-n1 f} · (−ln σ(y(v) − y(v′))) + e^{n2 f}·‖r_v‖² + λ(‖r_u‖² + ‖r_v′‖² + Σ‖r_p‖²)
/// where f is the positive item's frequency.
double fm_pair_loss(const EmbeddingSet& embeds, const FMSample& sample, const ItemStats& stats,
                    const FMHyper& hyper);

/// Full analytic gradient of `fm_pair_loss` with respect to every touched row.
struct FMGradient {
  Vector user;
  Vector pos;
  Vector neg;
  std::vector<Vector> attrs;  // parallel to sample.prefs
};

FMGradient fm_pair_gradient(const EmbeddingSet& embeds, const FMSample& sample,
                            const ItemStats& stats, const FMHyper& hyper);

/// One SGD step over a batch. Per-sample gradients are evaluated at the
/// incoming parameters and summed. The ranking term moves each row by
/// −lr·∇; the quadratic penalties are applied as the matching proximal
/// shrink row /= (1 + 2·lr·c), which is the exact minimizer for the
/// penalty and keeps the e^{n2 f} item penalty stable at any learning rate.
/// Returns the summed loss of the batch before the update.
double fm_grad_step(EmbeddingSet& embeds, std::span<const FMSample> batch, const ItemStats& stats,
                    const FMHyper& hyper);

struct FMTrainLog {
  std::vector<double> epoch_loss;  // mean sample loss per epoch
};

/// Trains the factorization machine on the training split. Each positive
/// pair (u, v) uses prefs = attrs(v) and negatives drawn uniformly from
/// items outside u's training set.
EmbeddingSet train_fm(const Catalog& catalog, const InteractionSplit& split,
                      const ItemStats& stats, const FMHyper& hyper, FMTrainLog* log = nullptr);

struct ScoredItem {
  ItemId item = 0;
  double score = 0.0;

  friend bool operator==(const ScoredItem&, const ScoredItem&) = default;
};

/// Strict ranking order: higher score first, ascending id on ties.
inline bool ranks_before(const ScoredItem& a, const ScoredItem& b) {
  return a.score != b.score ? a.score > b.score : a.item < b.item;
}

/// Top-min(k, |candidates|) candidates by user_vec·item_vec.
std::vector<ScoredItem> rank_items(const EmbeddingSet& embeds, const Vector& user_vec,
                                   std::span<const ItemId> candidates, std::size_t k);

/// Same selection over precomputed scores (scores[i] belongs to candidates[i]).
std::vector<ScoredItem> top_k(std::span<const ItemId> candidates, std::span<const double> scores,
                              std::size_t k);

void save_embeddings(const std::filesystem::path& path, const EmbeddingSet& embeds);
EmbeddingSet load_embeddings(const std::filesystem::path& path);

}  // namespace convoseek
