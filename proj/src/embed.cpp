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

#include "convoseek/embed.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "convoseek/binio.hpp"
#include "convoseek/sets.hpp"

namespace convoseek {

namespace {

constexpr binio::Magic kEmbedMagic = {'C', 'S', 'E', 'M'};

double log_sigmoid(double x) {
  // log σ(x) without overflow for large |x|.
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

void check_ids(const EmbeddingSet& e, UserId user, ItemId item) {
  if (user >= static_cast<std::size_t>(e.user_vecs.rows())) {
    throw InputError("user id " + std::to_string(user) + " out of range");
  }
  if (item >= static_cast<std::size_t>(e.item_vecs.rows())) {
    throw InputError("item id " + std::to_string(item) + " out of range");
  }
}

void check_attr(const EmbeddingSet& e, AttrId p) {
  if (p >= static_cast<std::size_t>(e.attr_vecs.rows())) {
    throw InputError("attribute id " + std::to_string(p) + " out of range");
  }
}

// Shared pieces of the loss and its gradient.
struct PairTerms {
  Vector context;     // r_u + Σ r_p
  double margin = 0;  // y(v) − y(v′)
  double weight = 1;  // e^{−n1 f}
  double item_reg = 1;  // e^{n2 f}
};

PairTerms pair_terms(const EmbeddingSet& e, const FMSample& s, const ItemStats& stats,
                     const FMHyper& hyper) {
  check_ids(e, s.user, s.pos);
  check_ids(e, s.user, s.neg);
  PairTerms t;
  t.context = e.user_vecs.row(s.user).transpose();
  for (AttrId p : s.prefs) {
    check_attr(e, p);
    t.context += e.attr_vecs.row(p).transpose();
  }
  t.margin = (e.item_vecs.row(s.pos) - e.item_vecs.row(s.neg)).dot(t.context);
  double f = s.pos < stats.frequency.size() ? stats.frequency[s.pos] : 0.0;
  t.weight = std::exp(-hyper.n1 * f);
  t.item_reg = std::exp(hyper.n2 * f);
  return t;
}

}  // namespace

EmbeddingSet EmbeddingSet::random(std::size_t num_users, std::size_t num_items,
                                  std::size_t num_attributes, std::size_t dim,
                                  std::uint64_t seed, double scale) {
  if (dim == 0) throw InputError("embedding dimension must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  auto fill = [&](std::size_t rows) {
    Matrix m(rows, dim);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
    }
    return m;
  };
  EmbeddingSet e;
  e.user_vecs = fill(num_users);
  e.item_vecs = fill(num_items);
  e.attr_vecs = fill(num_attributes);
  return e;
}

void EmbeddingSet::validate() const {
  if (user_vecs.cols() == 0) throw InputError("embeddings: dimension is zero");
  if (item_vecs.cols() != user_vecs.cols() || attr_vecs.cols() != user_vecs.cols()) {
    throw InputError("embeddings: dimension mismatch between tables");
  }
  if (!user_vecs.allFinite() || !item_vecs.allFinite() || !attr_vecs.allFinite()) {
    throw InputError("embeddings: non-finite entry");
  }
}

void EmbeddingSet::validate_against(const Catalog& catalog) const {
  validate();
  if (static_cast<std::size_t>(user_vecs.rows()) != catalog.num_users ||
      static_cast<std::size_t>(item_vecs.rows()) != catalog.num_items ||
      static_cast<std::size_t>(attr_vecs.rows()) != catalog.num_attributes) {
    throw InputError("embeddings do not match catalog sizes");
  }
}

std::uint64_t EmbeddingSet::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const Matrix& m) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
    for (std::size_t i = 0; i < static_cast<std::size_t>(m.size()) * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  mix(user_vecs);
  mix(item_vecs);
  mix(attr_vecs);
  return h;
}

void FMHyper::validate() const {
  if (dim == 0) throw InputError("fm: dim must be positive");
  if (lambda_reg < 0) throw InputError("fm: lambda must be >= 0");
  if (!(learning_rate > 0)) throw InputError("fm: learning rate must be > 0");
  if (batch_size == 0) throw InputError("fm: batch size must be positive");
  if (negatives_per_positive == 0) throw InputError("fm: need at least one negative per positive");
}

double fm_score(const EmbeddingSet& embeds, UserId user, ItemId item,
                std::span<const AttrId> prefs) {
  check_ids(embeds, user, item);
  auto v = embeds.item_vecs.row(item);
  double score = embeds.user_vecs.row(user).dot(v);
  for (AttrId p : prefs) {
    check_attr(embeds, p);
    score += v.dot(embeds.attr_vecs.row(p));
  }
  return score;
}

double fm_pair_loss(const EmbeddingSet& embeds, const FMSample& sample, const ItemStats& stats,
                    const FMHyper& hyper) {
  PairTerms t = pair_terms(embeds, sample, stats, hyper);
  double loss = -t.weight * log_sigmoid(t.margin);
  loss += t.item_reg * embeds.item_vecs.row(sample.pos).squaredNorm();
  double penalty = embeds.user_vecs.row(sample.user).squaredNorm() +
                   embeds.item_vecs.row(sample.neg).squaredNorm();
  for (AttrId p : sample.prefs) penalty += embeds.attr_vecs.row(p).squaredNorm();
  return loss + hyper.lambda_reg * penalty;
}

FMGradient fm_pair_gradient(const EmbeddingSet& embeds, const FMSample& sample,
                            const ItemStats& stats, const FMHyper& hyper) {
  if (sample.pos == sample.neg) throw InputError("fm: positive and negative item coincide");
  PairTerms t = pair_terms(embeds, sample, stats, hyper);
  // d/dmargin of −w·ln σ(margin)
  double g = t.weight * (sigmoid(t.margin) - 1.0);
  Vector diff = (embeds.item_vecs.row(sample.pos) - embeds.item_vecs.row(sample.neg)).transpose();
  const double lambda2 = 2.0 * hyper.lambda_reg;

  FMGradient grad;
  grad.user = g * diff + lambda2 * embeds.user_vecs.row(sample.user).transpose();
  grad.pos = g * t.context + 2.0 * t.item_reg * embeds.item_vecs.row(sample.pos).transpose();
  grad.neg = -g * t.context + lambda2 * embeds.item_vecs.row(sample.neg).transpose();
  grad.attrs.reserve(sample.prefs.size());
  for (AttrId p : sample.prefs) {
    grad.attrs.push_back(g * diff + lambda2 * embeds.attr_vecs.row(p).transpose());
  }
  return grad;
}

double fm_grad_step(EmbeddingSet& embeds, std::span<const FMSample> batch, const ItemStats& stats,
                    const FMHyper& hyper) {
  if (batch.empty()) throw InputError("fm: empty batch");

  // Accumulated ranking gradient and penalty coefficient per touched row.
  struct RowUpdate {
    Vector grad;
    double penalty = 0.0;
  };
  enum Table { kUser = 0, kItem = 1, kAttr = 2 };
  std::map<std::pair<int, std::uint32_t>, RowUpdate> updates;
  auto touch = [&](int table, std::uint32_t row, const Vector& g, double penalty) {
    auto [it, fresh] = updates.try_emplace({table, row});
    if (fresh) it->second.grad = Vector::Zero(static_cast<Eigen::Index>(embeds.dim()));
    it->second.grad += g;
    it->second.penalty += penalty;
  };

  double total_loss = 0.0;
  for (const auto& sample : batch) {
    if (sample.pos == sample.neg) throw InputError("fm: positive and negative item coincide");
    PairTerms t = pair_terms(embeds, sample, stats, hyper);
    total_loss += fm_pair_loss(embeds, sample, stats, hyper);
    double g = t.weight * (sigmoid(t.margin) - 1.0);
    Vector diff = (embeds.item_vecs.row(sample.pos) - embeds.item_vecs.row(sample.neg)).transpose();
    touch(kUser, sample.user, g * diff, hyper.lambda_reg);
    touch(kItem, sample.pos, g * t.context, t.item_reg);
    touch(kItem, sample.neg, -g * t.context, hyper.lambda_reg);
    for (AttrId p : sample.prefs) touch(kAttr, p, g * diff, hyper.lambda_reg);
  }

  const double lr = hyper.learning_rate;
  for (auto& [key, update] : updates) {
    if (!update.grad.allFinite()) {
      throw RuntimeFailure("fm: non-finite gradient (training diverged)");
    }
    Matrix& table = key.first == kUser ? embeds.user_vecs
                    : key.first == kItem ? embeds.item_vecs
                                         : embeds.attr_vecs;
    auto row = table.row(key.second);
    row = (row - lr * update.grad.transpose()) / (1.0 + 2.0 * lr * update.penalty);
  }
  return total_loss;
}

EmbeddingSet train_fm(const Catalog& catalog, const InteractionSplit& split,
                      const ItemStats& stats, const FMHyper& hyper, FMTrainLog* log) {
  hyper.validate();
  catalog.validate();
  EmbeddingSet embeds = EmbeddingSet::random(catalog.num_users, catalog.num_items,
                                             catalog.num_attributes, hyper.dim, hyper.seed);
  if (hyper.epochs == 0) return embeds;

  std::mt19937_64 rng(hyper.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<ItemId> any_item(0, static_cast<ItemId>(catalog.num_items - 1));
  std::vector<Interaction> order = split.train;
  std::vector<FMSample> batch;
  batch.reserve(hyper.batch_size);

  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t samples = 0;
    auto flush = [&] {
      if (batch.empty()) return;
      epoch_loss += fm_grad_step(embeds, batch, stats, hyper);
      samples += batch.size();
      batch.clear();
    };
    for (const auto& pair : order) {
      const ItemSet& seen = split.train_items[pair.user];
      if (seen.size() >= catalog.num_items) continue;
      for (std::size_t n = 0; n < hyper.negatives_per_positive; ++n) {
        ItemId neg = any_item(rng);
        while (sets::contains(seen, neg)) neg = any_item(rng);
        batch.push_back({pair.user, pair.item, neg, catalog.attributes_of(pair.item)});
        if (batch.size() == hyper.batch_size) flush();
      }
    }
    flush();
    if (log != nullptr) log->epoch_loss.push_back(samples ? epoch_loss / samples : 0.0);
  }
  return embeds;
}

std::vector<ScoredItem> top_k(std::span<const ItemId> candidates, std::span<const double> scores,
                              std::size_t k) {
  if (candidates.empty()) throw InputError("rank: empty candidate set");
  if (k == 0) throw InputError("rank: k must be >= 1");
  std::vector<ScoredItem> scored(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) scored[i] = {candidates[i], scores[i]};
  std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                    scored.end(), ranks_before);
  scored.resize(keep);
  return scored;
}

std::vector<ScoredItem> rank_items(const EmbeddingSet& embeds, const Vector& user_vec,
                                   std::span<const ItemId> candidates, std::size_t k) {
  if (candidates.empty()) throw InputError("rank: empty candidate set");
  if (static_cast<std::size_t>(user_vec.size()) != embeds.dim()) {
    throw InputError("rank: user vector dimension mismatch");
  }
  std::vector<double> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i] >= static_cast<std::size_t>(embeds.item_vecs.rows())) {
      throw InputError("rank: item id out of range");
    }
    scores[i] = embeds.item_vecs.row(candidates[i]).dot(user_vec);
  }
  return top_k(candidates, scores, k);
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingSet& embeds) {
  binio::Writer out(path, kEmbedMagic);
  out.u32(static_cast<std::uint32_t>(embeds.dim()));
  out.u32(static_cast<std::uint32_t>(embeds.user_vecs.rows()));
  out.u32(static_cast<std::uint32_t>(embeds.item_vecs.rows()));
  out.u32(static_cast<std::uint32_t>(embeds.attr_vecs.rows()));
  out.tensor(embeds.user_vecs);
  out.tensor(embeds.item_vecs);
  out.tensor(embeds.attr_vecs);
  out.finish();
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  binio::Reader in(path, kEmbedMagic);
  std::uint32_t d = in.u32();
  std::uint32_t users = in.u32();
  std::uint32_t items = in.u32();
  std::uint32_t attrs = in.u32();
  EmbeddingSet e;
  e.user_vecs.resize(users, d);
  e.item_vecs.resize(items, d);
  e.attr_vecs.resize(attrs, d);
  in.tensor(e.user_vecs);
  in.tensor(e.item_vecs);
  in.tensor(e.attr_vecs);
  in.expect_end();
  e.validate();
  return e;
}

}  // namespace convoseek
