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


// Fixture builders shared by the unit tests and the acceptance runner.
#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "convoseek/corpus.hpp"
#include "convoseek/dialogue.hpp"
#include "convoseek/embed.hpp"
#include "convoseek/policy.hpp"
#include "convoseek/refiner.hpp"
#include "convoseek/selector.hpp"
#include "convoseek/sets.hpp"
#include "support/oracle.hpp"

namespace fixture {

using namespace convoseek;

inline oracle::Refiner to_oracle(const RefinerParams& p) {
  return {oracle::to_mat(p.wq), oracle::to_mat(p.wk), oracle::to_mat(p.wv),
          oracle::to_mat(p.wc), oracle::to_mat(p.w),  oracle::to_vec(p.b1),
          oracle::to_vec(p.b2)};
}

inline oracle::QNet to_oracle(const QNetwork& n) {
  return {oracle::to_mat(n.w1), oracle::to_mat(n.w2), oracle::to_vec(n.b1), oracle::to_vec(n.b2)};
}

inline void fill_normal(Matrix& m, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = g(rng);
  }
}

inline void fill_normal(Vector& v, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = g(rng);
}

inline EmbeddingSet random_embeddings(std::size_t users, std::size_t items, std::size_t attrs,
                                      std::size_t d, std::mt19937_64& rng, double scale = 0.5) {
  EmbeddingSet e;
  const auto dd = static_cast<Eigen::Index>(d);
  e.user_vecs = Matrix(static_cast<Eigen::Index>(users), dd);
  e.item_vecs = Matrix(static_cast<Eigen::Index>(items), dd);
  e.attr_vecs = Matrix(static_cast<Eigen::Index>(attrs), dd);
  fill_normal(e.user_vecs, rng, scale);
  fill_normal(e.item_vecs, rng, scale);
  fill_normal(e.attr_vecs, rng, scale);
  return e;
}

/// Every tensor random, so no gradient path is trivially zero.
inline RefinerParams random_refiner(std::size_t d, std::mt19937_64& rng, double scale = 0.4) {
  RefinerParams p = RefinerParams::zeros(d);
  fill_normal(p.wq, rng, scale);
  fill_normal(p.wk, rng, scale);
  fill_normal(p.wv, rng, scale);
  fill_normal(p.wc, rng, scale);
  fill_normal(p.b1, rng, scale);
  fill_normal(p.w, rng, scale);
  fill_normal(p.b2, rng, scale);
  return p;
}

inline QNetwork random_qnet(std::size_t in, std::size_t hidden, std::mt19937_64& rng,
                            double scale = 0.5) {
  QNetwork n = QNetwork::zeros(in, hidden);
  fill_normal(n.w1, rng, scale);
  fill_normal(n.b1, rng, scale);
  fill_normal(n.w2, rng, scale);
  fill_normal(n.b2, rng, scale);
  return n;
}

/// Items with 1..max_attrs random attributes; every attribute used at least once.
inline Catalog random_catalog(std::size_t users, std::size_t items, std::size_t attrs,
                              std::mt19937_64& rng, std::size_t max_attrs = 4) {
  std::uniform_int_distribution<std::size_t> count(1, max_attrs);
  std::uniform_int_distribution<AttrId> any(0, static_cast<AttrId>(attrs - 1));
  std::vector<AttrSet> ia(items);
  for (auto& s : ia) {
    std::size_t n = count(rng);
    for (std::size_t i = 0; i < n; ++i) s.push_back(any(rng));
    sets::normalize(s);
  }
  for (AttrId p = 0; p < attrs; ++p) sets::insert(ia[p % items], p);
  return Catalog::make(users, std::move(ia), attrs);
}

/// Central difference of f at every coordinate of x.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// max_i |a−n| / max(|a|, |n|, 1e−6)
inline double max_relative_error(const std::vector<double>& analytic,
                                 const std::vector<double>& numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-6});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("convoseek-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Random greedy-selector instance, in library and oracle form.
struct SelectorFixture {
  EmbeddingSet embeds;
  RefinerParams refiner;
  SelectorContext ctx;
  std::size_t k = 10;
  oracle::SelectorCase reference;
  oracle::Refiner reference_refiner;
};

inline SelectorFixture selector_fixture(std::uint64_t seed, std::size_t max_candidates = 12,
                                        std::size_t max_items = 50, std::size_t max_valid = 5) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  SelectorFixture f;
  const std::size_t d = pick(2, 6);
  const std::size_t items = pick(12, max_items);
  const std::size_t attrs = pick(3, max_candidates + 3);
  f.k = pick(1, 10);
  f.embeds = random_embeddings(1, items, attrs, d, rng, 1.0);
  f.refiner = random_refiner(d, rng, 0.6);

  std::vector<AttrId> attr_order(attrs);
  for (AttrId a = 0; a < attrs; ++a) attr_order[a] = a;
  std::shuffle(attr_order.begin(), attr_order.end(), rng);
  const std::size_t accepted = pick(0, std::min<std::size_t>(3, attrs - 1));
  const std::size_t candidates = pick(1, std::min(max_candidates, attrs - accepted));
  f.ctx.prefs_accepted.assign(attr_order.begin(), attr_order.begin() + static_cast<long>(accepted));
  f.ctx.candidates.assign(attr_order.begin() + static_cast<long>(accepted),
                          attr_order.begin() + static_cast<long>(accepted + candidates));
  sets::normalize(f.ctx.candidates);

  std::vector<ItemId> item_order(items);
  for (ItemId v = 0; v < items; ++v) item_order[v] = v;
  std::shuffle(item_order.begin(), item_order.end(), rng);
  const std::size_t valid = pick(1, max_valid);
  const std::size_t excluded = pick(0, items / 3);
  f.ctx.valid_groundtruth.assign(item_order.begin(), item_order.begin() + static_cast<long>(valid));
  f.ctx.excluded_items.assign(item_order.begin() + static_cast<long>(valid),
                              item_order.begin() + static_cast<long>(valid + excluded));
  sets::normalize(f.ctx.valid_groundtruth);
  sets::normalize(f.ctx.excluded_items);

  f.ctx.r_u0 = f.embeds.user_vecs.row(0).transpose();
  f.ctx.r_ut = f.ctx.prefs_accepted.empty()
                   ? f.ctx.r_u0
                   : refine(f.refiner, f.ctx.r_u0, f.ctx.prefs_accepted, f.embeds.attr_vecs);

  auto& r = f.reference;
  r.items = oracle::to_mat(f.embeds.item_vecs);
  r.attrs = oracle::to_mat(f.embeds.attr_vecs);
  r.r_u0 = oracle::to_vec(f.ctx.r_u0);
  if (f.ctx.prefs_accepted.empty()) {
    r.r_ut = r.r_u0;
  } else {
    oracle::Mat prefs;
    for (AttrId a : f.ctx.prefs_accepted) prefs.push_back(r.attrs[a]);
    r.r_ut = oracle::refine(to_oracle(f.refiner), r.r_u0, prefs);
  }
  r.accepted = f.ctx.prefs_accepted;
  r.candidates = f.ctx.candidates;
  r.valid = f.ctx.valid_groundtruth;
  r.excluded = f.ctx.excluded_items;
  r.k = f.k;
  f.reference_refiner = to_oracle(f.refiner);
  return f;
}

/// A small synthetic world with briefly trained models, for dialogue tests.
struct World {
  SyntheticCorpus corpus;
  AdjacencyIndex adjacency;
  ItemStats stats;
  EmbeddingSet embeds;
  RefinerParams refiner;
  QNetwork policy;

  AgentBundle agent(AgentKind kind) const {
    AgentBundle a;
    a.kind = kind;
    a.decision = kind == AgentKind::upsrec   ? DecisionRule::q_network
                 : kind == AgentKind::maxent ? DecisionRule::candidate_threshold
                                             : DecisionRule::always_recommend;
    a.catalog = &corpus.catalog;
    a.split = &corpus.split;
    a.adjacency = &adjacency;
    a.embeds = &embeds;
    a.refiner = &refiner;
    a.policy = &policy;
    a.max_turns = 15;
    a.k = 10;
    return a;
  }
};

// Flat views of the rows one FM sample touches, for finite differences.
inline std::vector<double> fm_touched(const EmbeddingSet& e, const FMSample& s) {
  std::vector<double> x;
  auto put = [&](const Matrix& m, std::uint32_t r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) x.push_back(m(r, c));
  };
  put(e.user_vecs, s.user);
  put(e.item_vecs, s.pos);
  put(e.item_vecs, s.neg);
  for (AttrId p : s.prefs) put(e.attr_vecs, p);
  return x;
}

inline void fm_scatter(EmbeddingSet& e, const FMSample& s, const std::vector<double>& x) {
  std::size_t i = 0;
  auto take = [&](Matrix& m, std::uint32_t r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = x[i++];
  };
  take(e.user_vecs, s.user);
  take(e.item_vecs, s.pos);
  take(e.item_vecs, s.neg);
  for (AttrId p : s.prefs) take(e.attr_vecs, p);
}

inline std::vector<double> fm_flat_gradient(const FMGradient& g) {
  std::vector<double> x(g.user.data(), g.user.data() + g.user.size());
  x.insert(x.end(), g.pos.data(), g.pos.data() + g.pos.size());
  x.insert(x.end(), g.neg.data(), g.neg.data() + g.neg.size());
  for (const auto& a : g.attrs) x.insert(x.end(), a.data(), a.data() + a.size());
  return x;
}

inline Transition random_transition(std::size_t dim, std::mt19937_64& rng, bool terminal, Action action) {
  Transition t;
  t.state = Vector(static_cast<Eigen::Index>(dim));
  t.next_state = Vector(static_cast<Eigen::Index>(dim));
  fill_normal(t.state, rng, 1.0);
  fill_normal(t.next_state, rng, 1.0);
  t.action = action;
  t.reward = std::normal_distribution<double>(0.0, 1.0)(rng);
  t.terminal = terminal;
  return t;
}

/// `refiner_samples` > 0 trains the refiner with that many instances per
/// user; otherwise it stays at its pass-through initialization.
inline World make_world(std::size_t users, std::size_t items, std::size_t attrs,
                        std::uint64_t seed, std::size_t d = 8, std::size_t fm_epochs = 5,
                        std::size_t refiner_samples = 0) {
  World w;
  w.corpus = generate_synthetic(users, items, attrs, seed);
  w.adjacency = build_adjacency(w.corpus.catalog, w.corpus.split);
  w.stats = compute_item_frequency(w.corpus.split, items);
  FMHyper fm;
  fm.dim = d;
  fm.epochs = fm_epochs;
  fm.negatives_per_positive = 1;
  fm.seed = seed;
  w.embeds = train_fm(w.corpus.catalog, w.corpus.split, w.stats, fm);
  if (refiner_samples > 0) {
    RefinerHyper rh;
    rh.samples_per_user = refiner_samples;
    rh.seed = seed + 1;
    w.refiner = train_refiner(w.corpus.catalog, w.corpus.split, w.embeds, rh);
  } else {
    w.refiner = RefinerParams::initialize(d, seed + 1);
  }
  w.policy = QNetwork::initialize(d + 15, 16, seed + 2);
  return w;
}

}  // namespace fixture
