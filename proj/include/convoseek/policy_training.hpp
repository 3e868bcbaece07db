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

#include "convoseek/dialogue.hpp"
#include "convoseek/policy.hpp"

namespace convoseek {

struct PolicyHyper {
  std::size_t hidden = 64;
  std::size_t replay_capacity = 50000;
  std::size_t batch_size = 256;
  double gamma = 0.95;
  double learning_rate = 1e-2;
  double epsilon_start = 1.0;
  double epsilon_end = 0.1;
  double epsilon_decay_fraction = 0.5;  // of all episodes
  std::size_t target_sync = 20;         // episodes
  std::size_t episodes = 2000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Linear decay from epsilon_start to epsilon_end, then flat.
double epsilon_at(const PolicyHyper& hyper, std::size_t episode);

struct EpisodeLog {
  std::size_t episode = 0;
  double episode_return = 0.0;
  double epsilon = 0.0;
  double loss = 0.0;  // mean TD loss of the episode's updates, 0 before the first update
  std::size_t turns = 0;
  bool success = false;
};

struct PolicyTrainLog {
  std::vector<EpisodeLog> episodes;
};

/// DQN over simulated train-mode sessions (validation items as groundtruth).
/// `agent` supplies the models and conversation settings; its policy and
/// epsilon are replaced by the network under training. Each episode picks a
/// user uniformly from `users`.
QNetwork train_policy(const AgentBundle& agent, std::span<const UserId> users, QNetwork net,
                      const PolicyHyper& hyper, PolicyTrainLog* log = nullptr);

void write_policy_log(const std::filesystem::path& path, const PolicyTrainLog& log);

}  // namespace convoseek
