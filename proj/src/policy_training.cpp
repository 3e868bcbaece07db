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

#include "convoseek/policy_training.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace convoseek {

void PolicyHyper::validate() const {
  if (hidden == 0) throw InputError("policy: hidden size must be >= 1");
  if (batch_size == 0) throw InputError("policy: batch size must be >= 1");
  if (replay_capacity < batch_size) throw InputError("policy: replay capacity must be >= batch size");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InputError("policy: gamma must be in [0, 1]");
  if (!(learning_rate > 0.0)) throw InputError("policy: learning rate must be > 0");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0) || !(epsilon_end >= 0.0 && epsilon_end <= 1.0)) {
    throw InputError("policy: epsilon values must be in [0, 1]");
  }
  if (!(epsilon_decay_fraction >= 0.0 && epsilon_decay_fraction <= 1.0)) {
    throw InputError("policy: epsilon decay fraction must be in [0, 1]");
  }
  if (target_sync == 0) throw InputError("policy: target sync interval must be >= 1");
}

double epsilon_at(const PolicyHyper& hyper, std::size_t episode) {
  auto decay = static_cast<std::size_t>(
      std::ceil(hyper.epsilon_decay_fraction * static_cast<double>(hyper.episodes)));
  if (decay == 0 || episode >= decay) return hyper.epsilon_end;
  double frac = static_cast<double>(episode) / static_cast<double>(decay);
  return hyper.epsilon_start + (hyper.epsilon_end - hyper.epsilon_start) * frac;
}

QNetwork train_policy(const AgentBundle& agent, std::span<const UserId> users, QNetwork net,
                      const PolicyHyper& hyper, PolicyTrainLog* log) {
  hyper.validate();
  net.validate();
  if (hyper.episodes == 0) return net;
  if (users.empty()) throw InputError("policy: no training users");

  AgentBundle env = agent;
  env.kind = AgentKind::upsrec;
  env.decision = DecisionRule::q_network;
  env.policy = &net;
  env.validate();

  QNetwork target = net;
  ReplayBuffer replay(hyper.replay_capacity);
  std::mt19937_64 rng(hyper.seed);
  std::uniform_int_distribution<std::size_t> pick_user(0, users.size() - 1);
  SimulatedUser simulator(*env.catalog);

  for (std::size_t episode = 0; episode < hyper.episodes; ++episode) {
    env.epsilon = epsilon_at(hyper, episode);
    UserId user = users[pick_user(rng)];
    SessionState state = start_session(user, env, SessionMode::train, rng());

    EpisodeLog entry;
    entry.episode = episode;
    entry.epsilon = env.epsilon;
    double loss_sum = 0.0;
    std::size_t updates = 0;
    while (!state.finished) {
      Transition t;
      t.state = encode_state(state.r_u0, state.history, env.max_turns);
      Prompt prompt = propose(state, env, rng);
      // The network chose ask even when the selector had nothing to offer.
      t.action = prompt.converted ? Action::ask : prompt.action;
      Response response;
      if (prompt.action == Action::ask) {
        response.attribute_liked = simulator.answer_attribute(state, *prompt.attribute);
      } else {
        response.accepted_items = simulator.judge_recommendation(state, prompt.items);
      }
      TurnRecord record = apply_response(state, env, prompt, response);
      t.reward = record.reward;
      t.terminal = state.finished;
      // Terminal targets ignore the next state; an accepted list has no slot anyway.
      t.next_state = t.terminal ? t.state : encode_state(state.r_u0, state.history, env.max_turns);
      entry.episode_return += t.reward;
      replay.push(std::move(t));

      if (replay.size() >= hyper.batch_size) {
        auto batch = replay.sample(hyper.batch_size, rng);
        loss_sum += dqn_update(net, target, batch, hyper.gamma, hyper.learning_rate);
        ++updates;
      }
    }
    entry.turns = state.turn;
    entry.success = state.success;
    entry.loss = updates > 0 ? loss_sum / static_cast<double>(updates) : 0.0;
    if ((episode + 1) % hyper.target_sync == 0) target = net;
    if (log != nullptr) log->episodes.push_back(entry);
  }
  return net;
}

void write_policy_log(const std::filesystem::path& path, const PolicyTrainLog& log) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(10);
  out << "episode,return,epsilon,loss,turns,success\n";
  for (const auto& e : log.episodes) {
    out << e.episode << ',' << e.episode_return << ',' << e.epsilon << ',' << e.loss << ','
        << e.turns << ',' << (e.success ? 1 : 0) << '\n';
  }
}

}  // namespace convoseek
