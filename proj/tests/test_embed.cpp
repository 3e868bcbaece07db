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

#include <cmath>
#include <fstream>

#include "convoseek/corpus.hpp"
#include "convoseek/embed.hpp"
#include "convoseek/metrics.hpp"
#include "convoseek/sets.hpp"
#include "support/fixtures.hpp"

using namespace convoseek;

namespace {

EmbeddingSet zero_embeddings(std::size_t users, std::size_t items, std::size_t attrs, std::size_t d) {
  EmbeddingSet e;
  e.user_vecs = Matrix::Zero(static_cast<Eigen::Index>(users), static_cast<Eigen::Index>(d));
  e.item_vecs = Matrix::Zero(static_cast<Eigen::Index>(items), static_cast<Eigen::Index>(d));
  e.attr_vecs = Matrix::Zero(static_cast<Eigen::Index>(attrs), static_cast<Eigen::Index>(d));
  return e;
}

}  // namespace

TEST_CASE("fm_score examples") {
  EmbeddingSet z = zero_embeddings(1, 2, 1, 3);
  CHECK(fm_score(z, 0, 1, AttrSet{0}) == 0.0);

  EmbeddingSet e = zero_embeddings(1, 1, 1, 2);
  e.user_vecs.row(0) << 1.0, 0.0;
  e.item_vecs.row(0) << 0.5, 0.5;
  e.attr_vecs.row(0) << 1.0, 1.0;
  CHECK(fm_score(e, 0, 0, AttrSet{}) == 0.5);
  CHECK(fm_score(e, 0, 0, AttrSet{0}) == 1.5);
  CHECK_THROWS(fm_score(e, 0, 3, AttrSet{}));
}

TEST_CASE("fm_score matches the oracle and is additive over disjoint preference sets") {
  std::mt19937_64 rng(3);
  EmbeddingSet e = fixture::random_embeddings(3, 10, 6, 5, rng);
  for (ItemId v = 0; v < 10; ++v) {
    oracle::Mat prefs{oracle::row_of(e.attr_vecs, 1), oracle::row_of(e.attr_vecs, 4)};
    double ref = oracle::fm_score(oracle::row_of(e.user_vecs, 2), oracle::row_of(e.item_vecs, v), prefs);
    CHECK(fm_score(e, 2, v, AttrSet{1, 4}) == doctest::Approx(ref).epsilon(1e-12));
    double joint = fm_score(e, 2, v, AttrSet{0, 1, 4, 5});
    double none = fm_score(e, 2, v, AttrSet{});
    double sum = fm_score(e, 2, v, AttrSet{0, 5}) + fm_score(e, 2, v, AttrSet{1, 4});
    CHECK(joint + none == doctest::Approx(sum).epsilon(1e-12));
  }
}

TEST_CASE("fm_pair_loss examples") {
  ItemStats stats{{0.0, 0.0}};
  FMHyper h;
  h.n1 = 0.0;
  EmbeddingSet z = zero_embeddings(1, 2, 1, 4);
  FMSample s{0, 0, 1, {0}};
  CHECK(fm_pair_loss(z, s, stats, h) == doctest::Approx(0.693147).epsilon(1e-6));

  // f = 0: weight 1 and plain λ-style item penalty
  std::mt19937_64 rng(9);
  EmbeddingSet e = fixture::random_embeddings(1, 2, 1, 4, rng);
  h.n1 = 7.0;
  h.n2 = 8.0;
  double margin = fm_score(e, 0, 0, s.prefs) - fm_score(e, 0, 1, s.prefs);
  double expected = std::log1p(std::exp(-margin)) + e.item_vecs.row(0).squaredNorm() +
                    h.lambda_reg * (e.user_vecs.row(0).squaredNorm() + e.item_vecs.row(1).squaredNorm() +
                                    e.attr_vecs.row(0).squaredNorm());
  CHECK(fm_pair_loss(e, s, stats, h) == doctest::Approx(expected).epsilon(1e-12));

  // Higher frequency lowers the ranking weight.
  FMHyper only_rank = h;
  only_rank.n2 = 0.0;
  only_rank.lambda_reg = 0.0;
  double item_norm = e.item_vecs.row(0).squaredNorm();
  double prev = 1e300;
  for (double f : {0.0, 0.1, 0.5, 1.0}) {
    ItemStats st{{f, 0.0}};
    double rank_part = fm_pair_loss(e, s, st, only_rank) - item_norm;
    CHECK(rank_part < prev);
    prev = rank_part;
  }
}

TEST_CASE("fm gradient matches central differences") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t d = 1 + seed % 8;
    EmbeddingSet e = fixture::random_embeddings(2, 5, 4, d, rng);
    ItemStats stats{{0.3, 0.05, 0.0, 0.2, 0.1}};
    FMHyper h;
    h.lambda_reg = 0.01;
    FMSample s{1, static_cast<ItemId>(seed % 5), static_cast<ItemId>((seed + 2) % 5), {0, 3}};
    std::vector<double> analytic = fixture::fm_flat_gradient(fm_pair_gradient(e, s, stats, h));
    std::vector<double> numeric = fixture::numeric_gradient(
        [&](const std::vector<double>& x) {
          EmbeddingSet copy = e;
          fixture::fm_scatter(copy, s, x);
          return fm_pair_loss(copy, s, stats, h);
        },
        fixture::fm_touched(e, s));
    CHECK(fixture::max_relative_error(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("fm_grad_step moves along the negative gradient") {
  std::mt19937_64 rng(5);
  EmbeddingSet e = fixture::random_embeddings(2, 6, 3, 4, rng);
  ItemStats stats{{0.2, 0.1, 0.0, 0.0, 0.3, 0.05}};
  FMHyper h;
  h.lambda_reg = 0.01;
  FMSample s{0, 1, 4, {2}};

  FMHyper frozen = h;
  frozen.learning_rate = 0.0;
  EmbeddingSet same = e;
  fm_grad_step(same, std::span<const FMSample>(&s, 1), stats, frozen);
  CHECK(same.user_vecs == e.user_vecs);
  CHECK(same.item_vecs == e.item_vecs);
  CHECK(same.attr_vecs == e.attr_vecs);

  // The penalty is applied as an exact proximal shrink, which agrees with
  // plain gradient descent to first order in the step size.
  h.learning_rate = 1e-7;
  EmbeddingSet moved = e;
  fm_grad_step(moved, std::span<const FMSample>(&s, 1), stats, h);
  std::vector<double> before = fixture::fm_touched(e, s);
  std::vector<double> after = fixture::fm_touched(moved, s);
  std::vector<double> grad = fixture::fm_flat_gradient(fm_pair_gradient(e, s, stats, h));
  for (std::size_t i = 0; i < grad.size(); ++i) {
    CHECK((before[i] - after[i]) / h.learning_rate == doctest::Approx(grad[i]).epsilon(1e-4));
  }
  CHECK(moved.user_vecs.row(1) == e.user_vecs.row(1));
  CHECK(moved.item_vecs.row(0) == e.item_vecs.row(0));
}

TEST_CASE("fm_grad_step on disjoint samples equals separate steps") {
  std::mt19937_64 rng(8);
  EmbeddingSet e = fixture::random_embeddings(2, 6, 4, 3, rng);
  ItemStats stats{{0.1, 0.2, 0.0, 0.05, 0.0, 0.4}};
  FMHyper h;
  std::vector<FMSample> batch{{0, 0, 1, {0}}, {1, 2, 3, {2, 3}}};
  EmbeddingSet together = e;
  fm_grad_step(together, batch, stats, h);
  EmbeddingSet apart = e;
  fm_grad_step(apart, std::span<const FMSample>(&batch[0], 1), stats, h);
  EmbeddingSet second = e;
  fm_grad_step(second, std::span<const FMSample>(&batch[1], 1), stats, h);
  apart.user_vecs.row(1) = second.user_vecs.row(1);
  apart.item_vecs.row(2) = second.item_vecs.row(2);
  apart.item_vecs.row(3) = second.item_vecs.row(3);
  apart.attr_vecs.row(2) = second.attr_vecs.row(2);
  apart.attr_vecs.row(3) = second.attr_vecs.row(3);
  CHECK(together.user_vecs == apart.user_vecs);
  CHECK(together.item_vecs == apart.item_vecs);
  CHECK(together.attr_vecs == apart.attr_vecs);
}

TEST_CASE("train_fm: zero epochs, determinism, learning signal") {
  auto corpus = generate_synthetic(200, 500, 30, 7);
  ItemStats stats = compute_item_frequency(corpus.split, 500);
  FMHyper h;
  h.dim = 16;
  h.seed = 4;
  h.epochs = 0;
  EmbeddingSet init = train_fm(corpus.catalog, corpus.split, stats, h);
  EmbeddingSet random = EmbeddingSet::random(200, 500, 30, 16, 4);
  CHECK(init.user_vecs == random.user_vecs);
  CHECK(init.item_vecs == random.item_vecs);
  CHECK(init.attr_vecs == random.attr_vecs);
  CHECK(init.user_vecs.cwiseAbs().maxCoeff() <= 0.01);

  h.epochs = 30;
  FMTrainLog log;
  EmbeddingSet a = train_fm(corpus.catalog, corpus.split, stats, h, &log);
  EmbeddingSet b = train_fm(corpus.catalog, corpus.split, stats, h);
  CHECK(a.fingerprint() == b.fingerprint());
  REQUIRE(log.epoch_loss.size() == 30);
  CHECK(log.epoch_loss.back() < log.epoch_loss.front());

  // Validation AUC: held-out items against items the user never touched,
  // scored by r_u·r_v and counted pair by pair.
  double total = 0.0;
  for (UserId u = 0; u < 200; ++u) {
    oracle::Vec scores(500);
    for (ItemId v = 0; v < 500; ++v) scores[v] = a.user_vecs.row(u).dot(a.item_vecs.row(v));
    std::vector<ItemId> neg;
    for (ItemId v = 0; v < 500; ++v) {
      if (!sets::contains(corpus.split.train_items[u], v) && !sets::contains(corpus.split.valid_items[u], v) &&
          !sets::contains(corpus.split.test_items[u], v)) {
        neg.push_back(v);
      }
    }
    total += oracle::auc(scores, corpus.split.valid_items[u], neg);
  }
  const double auc = total / 200.0;
  MESSAGE("validation AUC after 30 epochs: " << auc);
  CHECK(auc > 0.75);
}

TEST_CASE("rank_items examples and tie-breaking") {
  EmbeddingSet e = zero_embeddings(1, 20, 1, 3);
  Vector zero = Vector::Zero(3);
  ItemSet all;
  for (ItemId v = 0; v < 20; ++v) all.push_back(v);
  auto top = rank_items(e, zero, all, 5);
  REQUIRE(top.size() == 5);
  for (ItemId i = 0; i < 5; ++i) CHECK(top[i].item == i);

  EmbeddingSet s = zero_embeddings(1, 3, 1, 1);
  s.item_vecs << 2.0, 5.0, 1.0;
  Vector one = Vector::Ones(1);
  auto best = rank_items(s, one, ItemSet{0, 1, 2}, 2);
  REQUIRE(best.size() == 2);
  CHECK(best[0] == ScoredItem{1, 5.0});
  CHECK(best[1] == ScoredItem{0, 2.0});
  CHECK(rank_items(s, one, ItemSet{0, 1, 2}, 10).size() == 3);
  CHECK_THROWS_AS(rank_items(s, one, ItemSet{}, 2), InputError);
  CHECK_THROWS_AS(rank_items(s, one, ItemSet{0}, 0), InputError);
}

TEST_CASE("rank_items equals a full sort on random fixtures") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    EmbeddingSet e = fixture::random_embeddings(1, 60, 1, 3, rng);
    // Coarse values so exact ties actually occur.
    e.item_vecs = (e.item_vecs * 2.0).array().round().matrix();
    Vector user = Vector::Ones(3);
    ItemSet cands;
    for (ItemId v = 0; v < 60; ++v) {
      if (rng() % 3 != 0) cands.push_back(v);
    }
    if (cands.empty()) continue;
    const std::size_t k = 1 + seed % 15;
    oracle::Vec scores;
    for (ItemId v : cands) scores.push_back(oracle::dot(oracle::row_of(e.item_vecs, v), {1.0, 1.0, 1.0}));
    auto expected = oracle::full_sort_top(cands, scores, k);
    auto got = rank_items(e, user, cands, k);
    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].item == expected[i]);
  }
}

TEST_CASE("embedding files round-trip at float precision") {
  fixture::TempDir dir("embed");
  std::mt19937_64 rng(1);
  EmbeddingSet e = fixture::random_embeddings(4, 7, 3, 5, rng);
  save_embeddings(dir / "e.bin", e);
  EmbeddingSet back = load_embeddings(dir / "e.bin");
  CHECK(back.user_vecs.isApprox(e.user_vecs, 1e-6));
  CHECK(back.item_vecs.isApprox(e.item_vecs, 1e-6));
  CHECK(back.attr_vecs.isApprox(e.attr_vecs, 1e-6));
  save_embeddings(dir / "f.bin", back);
  CHECK(load_embeddings(dir / "f.bin").fingerprint() == back.fingerprint());

  std::ofstream(dir / "bad.bin") << "nope";
  CHECK_THROWS_AS(load_embeddings(dir / "bad.bin"), InputError);
  CHECK_THROWS_AS(load_embeddings(dir / "missing.bin"), InputError);
}
