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

#include "convoseek/refiner.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <string>

#include "convoseek/binio.hpp"
#include "convoseek/sets.hpp"

namespace convoseek {

namespace {

constexpr binio::Magic kRefinerMagic = {'C', 'S', 'R', 'F'};
constexpr std::size_t kMaxNegativeDraws = 1000;

double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

void softmax_rows(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    double peak = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - peak).exp();
    m.row(r) /= m.row(r).sum();
  }
}

Vector softmax(const Vector& logits) {
  Vector out = (logits.array() - logits.maxCoeff()).exp();
  return out / out.sum();
}

// Intermediate values of one forward pass, kept for backpropagation.
struct Forward {
  Matrix q, k, v;  // n×d projections
  Matrix attn;     // n×n row-softmax
  Matrix hidden;   // n×d self-attended rows
  Matrix tanh_c;   // n×d rows tanh(wc·r_i + b1)
  Vector alpha;    // n
  Vector z;        // d
  Vector concat;   // 2d
  Vector out;      // d
};

Forward run_forward(const RefinerParams& p, const Vector& user_vec, const Matrix& prefs) {
  if (prefs.rows() == 0) throw InputError("refiner: empty preference set");
  const auto d = static_cast<Eigen::Index>(p.dim());
  if (prefs.cols() != d || user_vec.size() != d) throw InputError("refiner: dimension mismatch");
  Forward f;
  f.q = prefs * p.wq;
  f.k = prefs * p.wk;
  f.v = prefs * p.wv;
  f.attn = (f.q * f.k.transpose()) / std::sqrt(static_cast<double>(d));
  softmax_rows(f.attn);
  f.hidden = f.attn * f.v;

  f.tanh_c = (prefs * p.wc.transpose()).rowwise() + p.b1.transpose();
  f.tanh_c = f.tanh_c.array().tanh();
  f.alpha = softmax(f.tanh_c * user_vec);

  f.z = f.hidden.transpose() * f.alpha;
  f.concat.resize(2 * d);
  f.concat << f.z, user_vec;
  f.out = p.w * f.concat + p.b2;
  return f;
}

void check_instance(const EmbeddingSet& embeds, const PairwiseInstance& inst) {
  if (inst.user >= static_cast<std::size_t>(embeds.user_vecs.rows()) ||
      inst.pos_item >= static_cast<std::size_t>(embeds.item_vecs.rows()) ||
      inst.neg_item >= static_cast<std::size_t>(embeds.item_vecs.rows())) {
    throw InputError("refiner: instance id out of range");
  }
}

template <typename M>
void copy_out(const M& m, std::vector<double>& flat) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  }
}

template <typename M>
void copy_in(M& m, std::span<const double> flat, std::size_t& pos) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat[pos++];
  }
}

}  // namespace

RefinerParams RefinerParams::zeros(std::size_t dim) {
  if (dim == 0) throw InputError("refiner: dimension must be positive");
  const auto d = static_cast<Eigen::Index>(dim);
  RefinerParams p;
  p.wq = Matrix::Zero(d, d);
  p.wk = Matrix::Zero(d, d);
  p.wv = Matrix::Zero(d, d);
  p.wc = Matrix::Zero(d, d);
  p.b1 = Vector::Zero(d);
  p.w = Matrix::Zero(d, 2 * d);
  p.b2 = Vector::Zero(d);
  return p;
}

RefinerParams RefinerParams::initialize(std::size_t dim, std::uint64_t seed) {
  RefinerParams p = zeros(dim);
  const auto d = static_cast<Eigen::Index>(dim);
  std::mt19937_64 rng(seed);
  double limit = std::sqrt(6.0 / (2.0 * static_cast<double>(dim)));
  std::uniform_real_distribution<double> xavier(-limit, limit);
  auto fill = [&](Matrix& m, double scale) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = scale * xavier(rng);
    }
  };
  fill(p.wq, 1.0);
  fill(p.wk, 1.0);
  fill(p.wv, 1.0);
  fill(p.wc, 1.0);
  fill(p.w, 0.1);
  p.w.rightCols(d) += Matrix::Identity(d, d);
  return p;
}

void RefinerParams::validate() const {
  const auto d = b2.size();
  if (d == 0) throw InputError("refiner: dimension is zero");
  auto square = [d](const Matrix& m) { return m.rows() == d && m.cols() == d; };
  if (!square(wq) || !square(wk) || !square(wv) || !square(wc) || b1.size() != d ||
      w.rows() != d || w.cols() != 2 * d) {
    throw InputError("refiner: tensor shapes inconsistent with dimension");
  }
  if (!wq.allFinite() || !wk.allFinite() || !wv.allFinite() || !wc.allFinite() ||
      !b1.allFinite() || !w.allFinite() || !b2.allFinite()) {
    throw InputError("refiner: non-finite parameter");
  }
}

std::size_t RefinerParams::num_parameters() const {
  return static_cast<std::size_t>(wq.size() + wk.size() + wv.size() + wc.size() + b1.size() +
                                  w.size() + b2.size());
}

double RefinerParams::squared_norm() const {
  return wq.squaredNorm() + wk.squaredNorm() + wv.squaredNorm() + wc.squaredNorm() +
         b1.squaredNorm() + w.squaredNorm() + b2.squaredNorm();
}

std::vector<double> RefinerParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(num_parameters());
  copy_out(wq, flat);
  copy_out(wk, flat);
  copy_out(wv, flat);
  copy_out(wc, flat);
  copy_out(b1, flat);
  copy_out(w, flat);
  copy_out(b2, flat);
  return flat;
}

void RefinerParams::assign(std::span<const double> flat) {
  if (flat.size() != num_parameters()) throw InputError("refiner: flat parameter size mismatch");
  std::size_t pos = 0;
  copy_in(wq, flat, pos);
  copy_in(wk, flat, pos);
  copy_in(wv, flat, pos);
  copy_in(wc, flat, pos);
  copy_in(b1, flat, pos);
  copy_in(w, flat, pos);
  copy_in(b2, flat, pos);
}

Matrix gather_rows(const Matrix& table, std::span<const AttrId> ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= static_cast<std::size_t>(table.rows())) {
      throw InputError("attribute id " + std::to_string(ids[i]) + " out of range");
    }
    out.row(static_cast<Eigen::Index>(i)) = table.row(ids[i]);
  }
  return out;
}

Matrix self_attend(const RefinerParams& params, const Matrix& pref_matrix) {
  if (pref_matrix.rows() == 0) throw InputError("refiner: empty preference set");
  Matrix q = pref_matrix * params.wq;
  Matrix k = pref_matrix * params.wk;
  Matrix attn = (q * k.transpose()) / std::sqrt(static_cast<double>(params.dim()));
  softmax_rows(attn);
  return attn * (pref_matrix * params.wv);
}

Vector attention_weights(const RefinerParams& params, const Vector& user_vec,
                         const Matrix& pref_matrix) {
  if (pref_matrix.rows() == 0) throw InputError("refiner: empty preference set");
  Matrix c = (pref_matrix * params.wc.transpose()).rowwise() + params.b1.transpose();
  c = c.array().tanh();
  return softmax(c * user_vec);
}

Vector aggregate_preferences(const RefinerParams& params, const Vector& user_vec,
                             const Matrix& pref_matrix) {
  return run_forward(params, user_vec, pref_matrix).z;
}

Vector refine_rows(const RefinerParams& params, const Vector& user_vec,
                   const Matrix& pref_matrix) {
  return run_forward(params, user_vec, pref_matrix).out;
}

Vector refine(const RefinerParams& params, const Vector& user_vec, std::span<const AttrId> prefs,
              const Matrix& attr_vecs) {
  return refine_rows(params, user_vec, gather_rows(attr_vecs, prefs));
}

double refined_score(const RefinerParams& params, const Vector& user_vec,
                     std::span<const AttrId> prefs, const Matrix& attr_vecs,
                     const Vector& item_vec) {
  return refine(params, user_vec, prefs, attr_vecs).dot(item_vec);
}

std::vector<PairwiseInstance> sample_instances(const Catalog& catalog,
                                               const InteractionSplit& split, UserId user,
                                               std::size_t count, std::size_t max_turns,
                                               double jaccard_threshold, std::mt19937_64& rng,
                                               std::size_t* skipped) {
  if (user >= split.num_users()) throw InputError("sampler: user id out of range");
  const ItemSet& seen = split.train_items[user];
  if (seen.empty()) throw InputError("sampler: user has no training items");
  if (!(jaccard_threshold > 0.0 && jaccard_threshold <= 1.0)) {
    throw InputError("sampler: Jaccard threshold must be in (0, 1]");
  }
  if (max_turns < 2) throw InputError("sampler: max turns must be >= 2");

  std::uniform_int_distribution<std::size_t> pick_pos(0, seen.size() - 1);
  std::uniform_int_distribution<ItemId> any_item(0, static_cast<ItemId>(catalog.num_items - 1));
  std::vector<PairwiseInstance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    PairwiseInstance inst;
    inst.user = user;
    inst.pos_item = seen[pick_pos(rng)];
    AttrSet attrs = catalog.attributes_of(inst.pos_item);
    std::size_t upper = std::min(max_turns - 1, attrs.size());
    std::size_t keep = std::uniform_int_distribution<std::size_t>(1, upper)(rng);
    std::shuffle(attrs.begin(), attrs.end(), rng);
    attrs.resize(keep);
    sets::normalize(attrs);
    inst.prefs = std::move(attrs);

    bool found = false;
    for (std::size_t draw = 0; draw < kMaxNegativeDraws; ++draw) {
      ItemId neg = any_item(rng);
      if (sets::contains(seen, neg)) continue;
      if (jaccard_similarity(inst.prefs, catalog.attributes_of(neg)) < jaccard_threshold) {
        inst.neg_item = neg;
        found = true;
        break;
      }
    }
    if (!found) {
      if (skipped != nullptr) ++*skipped;
      continue;
    }
    out.push_back(std::move(inst));
  }
  return out;
}

double refiner_loss(const RefinerParams& params, const PairwiseInstance& instance,
                    const EmbeddingSet& embeds, double lambda_reg) {
  check_instance(embeds, instance);
  Vector user_vec = embeds.user_vecs.row(instance.user).transpose();
  Vector refined = refine(params, user_vec, instance.prefs, embeds.attr_vecs);
  double margin = refined.dot(embeds.item_vecs.row(instance.pos_item)) -
                  refined.dot(embeds.item_vecs.row(instance.neg_item));
  return -log_sigmoid(margin) + lambda_reg * params.squared_norm();
}

RefinerParams refiner_gradient(const RefinerParams& params, const PairwiseInstance& instance,
                               const EmbeddingSet& embeds, double lambda_reg, double* loss) {
  check_instance(embeds, instance);
  const auto d = static_cast<Eigen::Index>(params.dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Vector user_vec = embeds.user_vecs.row(instance.user).transpose();
  Matrix prefs = gather_rows(embeds.attr_vecs, instance.prefs);
  Forward f = run_forward(params, user_vec, prefs);

  Vector item_diff =
      (embeds.item_vecs.row(instance.pos_item) - embeds.item_vecs.row(instance.neg_item)).transpose();
  double margin = f.out.dot(item_diff);
  if (loss != nullptr) *loss = -log_sigmoid(margin) + lambda_reg * params.squared_norm();

  RefinerParams g = RefinerParams::zeros(params.dim());
  Vector d_out = (sigmoid(margin) - 1.0) * item_diff;

  // Update layer.
  g.w = d_out * f.concat.transpose();
  g.b2 = d_out;
  Vector d_z = (params.w.transpose() * d_out).head(d);

  // z = Hᵀα
  Matrix d_hidden = f.alpha * d_z.transpose();
  Vector d_alpha = f.hidden * d_z;

  // α = softmax(e), e_i = r_u0 · c_i, c_i = tanh(wc r_i + b1)
  Vector d_logit = f.alpha.cwiseProduct(d_alpha.array().matrix() -
                                        Vector::Constant(f.alpha.size(), f.alpha.dot(d_alpha)));
  Matrix d_pre = (d_logit * user_vec.transpose()).cwiseProduct(
      (1.0 - f.tanh_c.array().square()).matrix());
  g.wc = d_pre.transpose() * prefs;
  g.b1 = d_pre.colwise().sum().transpose();

  // H = A V, A = rowsoftmax(S), S = Q Kᵀ/√d
  Matrix d_attn = d_hidden * f.v.transpose();
  Matrix d_v = f.attn.transpose() * d_hidden;
  Matrix d_scores = f.attn.cwiseProduct(d_attn);
  Vector row_dot = d_scores.rowwise().sum();
  d_scores -= f.attn.cwiseProduct(row_dot.replicate(1, f.attn.cols()));
  Matrix d_q = scale * d_scores * f.k;
  Matrix d_k = scale * d_scores.transpose() * f.q;
  g.wq = prefs.transpose() * d_q;
  g.wk = prefs.transpose() * d_k;
  g.wv = prefs.transpose() * d_v;

  if (lambda_reg != 0.0) {
    const double c = 2.0 * lambda_reg;
    g.wq += c * params.wq;
    g.wk += c * params.wk;
    g.wv += c * params.wv;
    g.wc += c * params.wc;
    g.b1 += c * params.b1;
    g.w += c * params.w;
    g.b2 += c * params.b2;
  }
  return g;
}

double grad_check(const RefinerParams& params, const PairwiseInstance& instance,
                  const EmbeddingSet& embeds, double lambda_reg, double h,
                  const RefinerGradientFn& analytic) {
  RefinerParams grad = analytic ? analytic(params, instance, embeds, lambda_reg)
                                : refiner_gradient(params, instance, embeds, lambda_reg);
  std::vector<double> analytic_flat = grad.flatten();
  std::vector<double> base = params.flatten();
  RefinerParams probe = params;
  double worst = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    std::vector<double> shifted = base;
    shifted[i] = base[i] + h;
    probe.assign(shifted);
    double up = refiner_loss(probe, instance, embeds, lambda_reg);
    shifted[i] = base[i] - h;
    probe.assign(shifted);
    double down = refiner_loss(probe, instance, embeds, lambda_reg);
    double numeric = (up - down) / (2.0 * h);
    double denom = std::max({std::abs(analytic_flat[i]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic_flat[i] - numeric) / denom);
  }
  return worst;
}

void RefinerHyper::validate() const {
  if (!(learning_rate > 0)) throw InputError("refiner: learning rate must be > 0");
  if (lambda_reg < 0) throw InputError("refiner: lambda must be >= 0");
  if (batch_size == 0) throw InputError("refiner: batch size must be positive");
  if (!(jaccard_threshold > 0.0 && jaccard_threshold <= 1.0)) {
    throw InputError("refiner: Jaccard threshold must be in (0, 1]");
  }
  if (max_turns < 2) throw InputError("refiner: max turns must be >= 2");
}

RefinerParams train_refiner(const Catalog& catalog, const InteractionSplit& split,
                            const EmbeddingSet& embeds, const RefinerHyper& hyper,
                            RefinerTrainLog* log) {
  hyper.validate();
  embeds.validate_against(catalog);
  RefinerParams params = RefinerParams::initialize(embeds.dim(), hyper.seed);
  std::mt19937_64 rng(hyper.seed ^ 0x5851f42d4c957f2dULL);

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  std::vector<double> theta = params.flatten();
  std::vector<double> m(theta.size(), 0.0);
  std::vector<double> v(theta.size(), 0.0);
  std::size_t step = 0;
  std::size_t skipped_total = 0;

  // Each epoch visits every user samples_per_user times in shuffled order and
  // draws the instances lazily, so memory stays O(users * samples) ids.
  std::vector<UserId> schedule;
  for (UserId u = 0; u < split.num_users(); ++u) {
    if (split.train_items[u].empty()) continue;
    schedule.insert(schedule.end(), hyper.samples_per_user, u);
  }

  std::vector<double> batch_grad(theta.size());
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::shuffle(schedule.begin(), schedule.end(), rng);
    std::size_t skipped = 0;
    std::size_t used = 0;
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < schedule.size(); start += hyper.batch_size) {
      std::size_t end = std::min(schedule.size(), start + hyper.batch_size);
      std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
      std::size_t in_batch = 0;
      for (std::size_t i = start; i < end; ++i) {
        auto drawn = sample_instances(catalog, split, schedule[i], 1, hyper.max_turns,
                                      hyper.jaccard_threshold, rng, &skipped);
        if (drawn.empty()) continue;
        double loss = 0.0;
        RefinerParams g = refiner_gradient(params, drawn.front(), embeds, hyper.lambda_reg, &loss);
        if (!std::isfinite(loss)) {
          throw RuntimeFailure("refiner: non-finite loss at epoch " + std::to_string(epoch) +
                               ", step " + std::to_string(step) + " (user " +
                               std::to_string(schedule[i]) + ")");
        }
        epoch_loss += loss;
        ++in_batch;
        std::vector<double> flat = g.flatten();
        for (std::size_t j = 0; j < flat.size(); ++j) batch_grad[j] += flat[j];
      }
      if (in_batch == 0) continue;
      used += in_batch;
      const double inv = 1.0 / static_cast<double>(in_batch);
      ++step;
      const double correction1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double correction2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t j = 0; j < theta.size(); ++j) {
        double gj = batch_grad[j] * inv;
        m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * gj;
        v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * gj * gj;
        theta[j] -= hyper.learning_rate * (m[j] / correction1) /
                    (std::sqrt(v[j] / correction2) + kEps);
      }
      params.assign(theta);
    }
    if (skipped > 0) {
      std::cerr << "refiner: skipped " << skipped
                << " instances with no qualifying negative item\n";
    }
    skipped_total += skipped;
    if (log != nullptr) log->epoch_loss.push_back(used ? epoch_loss / used : 0.0);
  }
  if (log != nullptr) log->skipped_instances = skipped_total;
  return params;
}

void save_refiner(const std::filesystem::path& path, const RefinerParams& params) {
  params.validate();
  binio::Writer out(path, kRefinerMagic);
  out.u32(static_cast<std::uint32_t>(params.dim()));
  out.tensor(params.wq);
  out.tensor(params.wk);
  out.tensor(params.wv);
  out.tensor(params.wc);
  out.tensor(params.b1);
  out.tensor(params.w);
  out.tensor(params.b2);
  out.finish();
}

RefinerParams load_refiner(const std::filesystem::path& path) {
  binio::Reader in(path, kRefinerMagic);
  std::uint32_t d = in.u32();
  RefinerParams p = RefinerParams::zeros(d);
  in.tensor(p.wq);
  in.tensor(p.wk);
  in.tensor(p.wv);
  in.tensor(p.wc);
  in.tensor(p.b1);
  in.tensor(p.w);
  in.tensor(p.b2);
  in.expect_end();
  p.validate();
  return p;
}

}  // namespace convoseek
