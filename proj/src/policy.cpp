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

#include "convoseek/policy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "convoseek/binio.hpp"

namespace convoseek {

namespace {

constexpr binio::Magic kPolicyMagic = {'C', 'S', 'Q', 'N'};
constexpr std::size_t kActions = 2;

std::size_t action_index(Action a) { return a == Action::ask ? 0 : 1; }

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

double slot_value(TurnOutcome o) {
  switch (o) {
    case TurnOutcome::ask_accepted: return kSlotAskAccepted;
    case TurnOutcome::ask_rejected: return kSlotAskRejected;
    case TurnOutcome::rec_rejected: return kSlotRecRejected;
    case TurnOutcome::rec_accepted: break;
  }
  throw InputError("state: accepted recommendations end the session and have no slot");
}

void check_state(const QNetwork& net, const Vector& s) {
  if (static_cast<std::size_t>(s.size()) != net.input_dim()) {
    throw InputError("policy: state has " + std::to_string(s.size()) + " entries, network expects " +
                     std::to_string(net.input_dim()));
  }
}

}  // namespace

Vector encode_state(const Vector& r_u0, std::span<const TurnOutcome> history,
                    std::size_t max_turns) {
  if (history.size() > max_turns) throw InputError("state: history longer than max turns");
  Vector s = Vector::Zero(r_u0.size() + static_cast<Eigen::Index>(max_turns));
  s.head(r_u0.size()) = r_u0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    s(r_u0.size() + static_cast<Eigen::Index>(i)) = slot_value(history[i]);
  }
  return s;
}

Vector encode_state(const Vector& r_u0, std::span<const TurnRecord> history,
                    std::size_t max_turns) {
  std::vector<TurnOutcome> outcomes;
  outcomes.reserve(history.size());
  for (const auto& t : history) outcomes.push_back(t.response);
  return encode_state(r_u0, outcomes, max_turns);
}

QNetwork QNetwork::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  if (input_dim == 0 || hidden_dim == 0) throw InputError("policy: empty network dimensions");
  QNetwork n;
  n.w1 = Matrix::Zero(static_cast<Eigen::Index>(hidden_dim), static_cast<Eigen::Index>(input_dim));
  n.b1 = Vector::Zero(static_cast<Eigen::Index>(hidden_dim));
  n.w2 = Matrix::Zero(kActions, static_cast<Eigen::Index>(hidden_dim));
  n.b2 = Vector::Zero(kActions);
  return n;
}

QNetwork QNetwork::initialize(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed) {
  QNetwork n = zeros(input_dim, hidden_dim);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> he(-std::sqrt(6.0 / static_cast<double>(input_dim)),
                                            std::sqrt(6.0 / static_cast<double>(input_dim)));
  std::uniform_real_distribution<double> out(-1.0 / std::sqrt(static_cast<double>(hidden_dim)),
                                             1.0 / std::sqrt(static_cast<double>(hidden_dim)));
  for (Eigen::Index i = 0; i < n.w1.size(); ++i) n.w1.data()[i] = he(rng);
  for (Eigen::Index i = 0; i < n.w2.size(); ++i) n.w2.data()[i] = 0.1 * out(rng);
  return n;
}

void QNetwork::validate() const {
  if (w1.rows() == 0 || w1.cols() == 0) throw InputError("policy: empty network");
  if (b1.size() != w1.rows() || w2.rows() != static_cast<Eigen::Index>(kActions) ||
      w2.cols() != w1.rows() || b2.size() != static_cast<Eigen::Index>(kActions)) {
    throw InputError("policy: inconsistent tensor shapes");
  }
  if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite() || !b2.allFinite()) {
    throw InputError("policy: non-finite parameter");
  }
}

std::vector<double> QNetwork::flatten() const {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size()));
  copy_out(w1, flat);
  copy_out(b1, flat);
  copy_out(w2, flat);
  copy_out(b2, flat);
  return flat;
}

void QNetwork::assign(std::span<const double> flat) {
  if (flat.size() != static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size())) {
    throw InputError("policy: flat parameter size mismatch");
  }
  std::size_t pos = 0;
  copy_in(w1, flat, pos);
  copy_in(b1, flat, pos);
  copy_in(w2, flat, pos);
  copy_in(b2, flat, pos);
}

QValues q_forward(const QNetwork& net, const Vector& state) {
  check_state(net, state);
  Vector hidden = (net.w1 * state + net.b1).cwiseMax(0.0);
  Vector q = net.w2 * hidden + net.b2;
  return {q(0), q(1)};
}

Action select_action(const QNetwork& net, const Vector& state, double epsilon,
                     std::mt19937_64& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InputError("policy: epsilon must be in [0, 1]");
  if (epsilon > 0.0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < epsilon) {
      return std::bernoulli_distribution(0.5)(rng) ? Action::ask : Action::recommend;
    }
  }
  QValues q = q_forward(net, state);
  return q.ask >= q.rec ? Action::ask : Action::recommend;
}

void RewardSchedule::validate() const {
  if (!(ask_success > 0.0)) throw InputError("rewards: ask success reward must be positive");
  if (ask_fail > 0.0 || rec_fail > 0.0 || stop > 0.0) {
    throw InputError("rewards: failure and stop rewards must be <= 0");
  }
  if (!(rec_success_scale > 0.0)) throw InputError("rewards: success scale must be positive");
}

double reward_of(const RewardEvent& event, const RewardSchedule& schedule) {
  switch (event.kind) {
    case RewardEventKind::ask_accept: return schedule.ask_success;
    case RewardEventKind::ask_reject: return schedule.ask_fail;
    case RewardEventKind::rec_success: return schedule.rec_success_scale * event.ndcg;
    case RewardEventKind::rec_reject: return schedule.rec_fail;
    case RewardEventKind::max_turns: return schedule.stop;
  }
  return 0.0;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InputError("replay: capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw InputError("replay: index out of range");
  return items_[(head_ + i) % items_.size()];
}

std::vector<Transition> ReplayBuffer::sample(std::size_t count, std::mt19937_64& rng) const {
  if (items_.empty()) throw InputError("replay: sampling from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<Transition> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(items_[pick(rng)]);
  return out;
}

namespace {

double td_target(const QNetwork& target, const Transition& t, double gamma) {
  if (t.terminal) return t.reward;
  QValues next = q_forward(target, t.next_state);
  return t.reward + gamma * std::max(next.ask, next.rec);
}

}  // namespace

double td_loss(const QNetwork& net, const QNetwork& target, std::span<const Transition> batch,
               double gamma) {
  if (batch.empty()) throw InputError("dqn: empty batch");
  double total = 0.0;
  for (const auto& t : batch) {
    QValues q = q_forward(net, t.state);
    double predicted = t.action == Action::ask ? q.ask : q.rec;
    double err = predicted - td_target(target, t, gamma);
    total += err * err;
  }
  return total / static_cast<double>(batch.size());
}

QNetwork td_gradient(const QNetwork& net, const QNetwork& target,
                     std::span<const Transition> batch, double gamma, double* loss) {
  if (batch.empty()) throw InputError("dqn: empty batch");
  QNetwork g = QNetwork::zeros(net.input_dim(), net.hidden_dim());
  const double inv = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& t : batch) {
    check_state(net, t.state);
    Vector pre = net.w1 * t.state + net.b1;
    Vector hidden = pre.cwiseMax(0.0);
    Vector q = net.w2 * hidden + net.b2;
    const auto a = static_cast<Eigen::Index>(action_index(t.action));
    double err = q(a) - td_target(target, t, gamma);
    total += err * err;

    double d_q = 2.0 * err * inv;
    g.w2.row(a) += d_q * hidden.transpose();
    g.b2(a) += d_q;
    Vector d_hidden = d_q * net.w2.row(a).transpose();
    for (Eigen::Index j = 0; j < pre.size(); ++j) {
      if (pre(j) <= 0.0) d_hidden(j) = 0.0;
    }
    g.w1 += d_hidden * t.state.transpose();
    g.b1 += d_hidden;
  }
  if (loss != nullptr) *loss = total * inv;
  return g;
}

double dqn_update(QNetwork& net, const QNetwork& target, std::span<const Transition> batch,
                  double gamma, double learning_rate) {
  double loss = 0.0;
  QNetwork g = td_gradient(net, target, batch, gamma, &loss);
  if (!std::isfinite(loss)) throw RuntimeFailure("dqn: non-finite TD loss");
  net.w1 -= learning_rate * g.w1;
  net.b1 -= learning_rate * g.b1;
  net.w2 -= learning_rate * g.w2;
  net.b2 -= learning_rate * g.b2;
  return loss;
}

void save_policy(const std::filesystem::path& path, const QNetwork& net) {
  net.validate();
  binio::Writer out(path, kPolicyMagic);
  out.u32(static_cast<std::uint32_t>(net.input_dim()));
  out.u32(static_cast<std::uint32_t>(net.hidden_dim()));
  out.u32(static_cast<std::uint32_t>(kActions));
  out.tensor(net.w1);
  out.tensor(net.b1);
  out.tensor(net.w2);
  out.tensor(net.b2);
  out.finish();
}

QNetwork load_policy(const std::filesystem::path& path) {
  binio::Reader in(path, kPolicyMagic);
  std::uint32_t input = in.u32();
  std::uint32_t hidden = in.u32();
  std::uint32_t outputs = in.u32();
  if (outputs != kActions) throw InputError(path.string() + ": policy must have two outputs");
  QNetwork net = QNetwork::zeros(input, hidden);
  in.tensor(net.w1);
  in.tensor(net.b1);
  in.tensor(net.w2);
  in.tensor(net.b2);
  in.expect_end();
  net.validate();
  return net;
}

}  // namespace convoseek
