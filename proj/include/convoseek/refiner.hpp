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
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "convoseek/corpus.hpp"
#include "convoseek/embed.hpp"
#include "convoseek/types.hpp"

namespace convoseek {

/// Parameters of the user representation refiner.
///
///   self-attention over the accepted attributes:  H = softmax(QKᵀ/√d) V,
///     Q = R·wq, K = R·wk, V = R·wv  (R stacks the attribute vectors as rows)
///   user-queried weights:  α = softmax_i( r_u0 · tanh(wc·r_pi + b1) )
///   aggregate:             z = Σ α_i H_i
///   update layer:          r̂ = w·[z ; r_u0] + b2
struct RefinerParams {
  Matrix wq;  // d×d
  Matrix wk;  // d×d
  Matrix wv;  // d×d
  Matrix wc;  // d×d
  Vector b1;  // d
  Matrix w;   // d×2d
  Vector b2;  // d

  std::size_t dim() const { return static_cast<std::size_t>(b2.size()); }

  static RefinerParams zeros(std::size_t dim);
  /// Xavier-uniform projections, zero biases; the update layer starts as
  /// [small noise | I] so an untrained refiner passes r_u0 through.
  static RefinerParams initialize(std::size_t dim, std::uint64_t seed);

  void validate() const;
  std::size_t num_parameters() const;
  double squared_norm() const;

  /// Parameters in declaration order, row-major.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
};

Matrix gather_rows(const Matrix& table, std::span<const AttrId> ids);

/// Row-wise softmax((R wq)(R wk)ᵀ/√d)(R wv).
Matrix self_attend(const RefinerParams& params, const Matrix& pref_matrix);

/// Probability vector over the rows of `pref_matrix`.
Vector attention_weights(const RefinerParams& params, const Vector& user_vec,
                         const Matrix& pref_matrix);

/// z = Σ α_i · self_attend(R)_i.
Vector aggregate_preferences(const RefinerParams& params, const Vector& user_vec,
                             const Matrix& pref_matrix);

/// Refined user vector. `prefs` must be non-empty; callers keep r_u0 until
/// the first accepted attribute.
Vector refine(const RefinerParams& params, const Vector& user_vec, std::span<const AttrId> prefs,
              const Matrix& attr_vecs);
Vector refine_rows(const RefinerParams& params, const Vector& user_vec, const Matrix& pref_matrix);

double refined_score(const RefinerParams& params, const Vector& user_vec,
                     std::span<const AttrId> prefs, const Matrix& attr_vecs,
                     const Vector& item_vec);

struct PairwiseInstance {
  UserId user = 0;
  ItemId pos_item = 0;
  ItemId neg_item = 0;
  AttrSet prefs;
};

/// Draws `count` training instances for one user: a random training item,
/// a random non-empty subset of its attributes (size 1..min(T−1, |attrs|)),
/// and a non-interacted item whose attributes have Jaccard similarity below
/// `jaccard_threshold` with that subset. Instances whose negative cannot be
/// found within 1,000 draws are skipped; `skipped` counts them.
std::vector<PairwiseInstance> sample_instances(const Catalog& catalog,
                                               const InteractionSplit& split, UserId user,
                                               std::size_t count, std::size_t max_turns,
                                               double jaccard_threshold, std::mt19937_64& rng,
                                               std::size_t* skipped = nullptr);

/// −ln σ(ŷ(v) − ŷ(v′)) + λ‖θ‖² with ŷ(x) = r̂ᵀ·r_x.
double refiner_loss(const RefinerParams& params, const PairwiseInstance& instance,
                    const EmbeddingSet& embeds, double lambda_reg);

/// Analytic gradient of `refiner_loss`, shaped like the parameters.
RefinerParams refiner_gradient(const RefinerParams& params, const PairwiseInstance& instance,
                               const EmbeddingSet& embeds, double lambda_reg,
                               double* loss = nullptr);

using RefinerGradientFn = std::function<RefinerParams(
    const RefinerParams&, const PairwiseInstance&, const EmbeddingSet&, double)>;

/// Largest relative error between the analytic gradient and central finite
/// differences (step h) over every parameter entry. Relative error is
/// |a − n| / max(|a|, |n|, 1e−6).
double grad_check(const RefinerParams& params, const PairwiseInstance& instance,
                  const EmbeddingSet& embeds, double lambda_reg = 0.002, double h = 1e-5,
                  const RefinerGradientFn& analytic = {});

struct RefinerHyper {
  double learning_rate = 1e-3;
  double lambda_reg = 0.002;
  std::size_t epochs = 1;
  std::size_t samples_per_user = 15000;
  std::size_t batch_size = 64;
  double jaccard_threshold = 0.33;
  std::size_t max_turns = 15;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RefinerTrainLog {
  std::vector<double> epoch_loss;
  std::size_t skipped_instances = 0;
};

/// Adam (β1 0.9, β2 0.999, ε 1e−8) on mini-batches of sampled instances.
/// A fresh instance set is drawn each epoch. `embeds` is read only.
RefinerParams train_refiner(const Catalog& catalog, const InteractionSplit& split,
                            const EmbeddingSet& embeds, const RefinerHyper& hyper,
                            RefinerTrainLog* log = nullptr);

void save_refiner(const std::filesystem::path& path, const RefinerParams& params);
RefinerParams load_refiner(const std::filesystem::path& path);

}  // namespace convoseek
