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
#include <random>
#include <span>
#include <vector>

#include "convoseek/turn.hpp"
#include "convoseek/types.hpp"

namespace convoseek {

// History slot values of the state vector.
inline constexpr double kSlotAskAccepted = 0.5;
inline constexpr double kSlotAskRejected = -0.5;
inline constexpr double kSlotRecRejected = -1.0;

/// s_t = r_u0 ⊕ history, where history has one slot per possible turn.
/// Recommendation acceptance ends a session and is never encoded.
Vector encode_state(const Vector& r_u0, std::span<const TurnOutcome> history, std::size_t max_turns);
Vector encode_state(const Vector& r_u0, std::span<const TurnRecord> history, std::size_t max_turns);

/// Two-layer perceptron q = w2·relu(w1·s + b1) + b2 with outputs (ask, recommend).
struct QNetwork {
  Matrix w1;  // hidden × input
  Vector b1;
  Matrix w2;  // 2 × hidden
  Vector b2;

  std::size_t input_dim() const { return static_cast<std::size_t>(w1.cols()); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(w1.rows()); }

  static QNetwork zeros(std::size_t input_dim, std::size_t hidden_dim);
  /// He-uniform first layer, small uniform output layer, zero biases.
  static QNetwork initialize(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed);

  void validate() const;
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  friend bool operator==(const QNetwork& a, const QNetwork& b) {
    return a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2;
  }
};

struct QValues {
  double ask = 0.0;
  double rec = 0.0;
};

QValues q_forward(const QNetwork& net, const Vector& state);

/// ε-greedy; the greedy branch prefers asking on exact ties.
Action select_action(const QNetwork& net, const Vector& state, double epsilon, std::mt19937_64& rng);

struct RewardSchedule {
  double ask_success = 0.01;
  double ask_fail = -0.1;
  double rec_fail = -0.1;
  double stop = -0.3;
  double rec_success_scale = 1.0;

  void validate() const;
};

enum class RewardEventKind { ask_accept, ask_reject, rec_success, rec_reject, max_turns };

struct RewardEvent {
  RewardEventKind kind = RewardEventKind::ask_reject;
  double ndcg = 0.0;  // NDCG@k of the accepted list, for rec_success
};

double reward_of(const RewardEvent& event, const RewardSchedule& schedule);

struct Transition {
  Vector state;
  Action action = Action::ask;
  double reward = 0.0;
  Vector next_state;
  bool terminal = false;
};

/// Fixed-capacity FIFO experience memory.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const;  // 0 = oldest

  /// Uniform sampling with replacement.
  std::vector<Transition> sample(std::size_t count, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // index of the oldest entry once full
  std::vector<Transition> items_;
};

/// Mean over the batch of (Q(s,a) − y)², y = r + γ·max_a′ Q_target(s′,a′),
/// or y = r for terminal transitions.
double td_loss(const QNetwork& net, const QNetwork& target, std::span<const Transition> batch,
               double gamma);

/// Gradient of `td_loss` with respect to `net` (targets held fixed).
QNetwork td_gradient(const QNetwork& net, const QNetwork& target,
                     std::span<const Transition> batch, double gamma, double* loss = nullptr);

/// One SGD step on the TD loss. Returns the loss before the step.
double dqn_update(QNetwork& net, const QNetwork& target, std::span<const Transition> batch,
                  double gamma, double learning_rate);

void save_policy(const std::filesystem::path& path, const QNetwork& net);
QNetwork load_policy(const std::filesystem::path& path);

}  // namespace convoseek
