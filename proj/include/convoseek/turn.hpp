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
#include <optional>
#include <string_view>
#include <vector>

#include "convoseek/types.hpp"

namespace convoseek {

enum class Action { ask, recommend };

enum class TurnOutcome { ask_accepted, ask_rejected, rec_accepted, rec_rejected };

constexpr std::string_view to_string(Action a) { return a == Action::ask ? "ask" : "recommend"; }

constexpr std::string_view to_string(TurnOutcome o) {
  switch (o) {
    case TurnOutcome::ask_accepted: return "attr-accept";
    case TurnOutcome::ask_rejected: return "attr-reject";
    case TurnOutcome::rec_accepted: return "rec-accept";
    case TurnOutcome::rec_rejected: return "rec-reject";
  }
  return "?";
}

/// One exchange of a conversation: what the agent did and how the user answered.
struct TurnRecord {
  std::size_t turn = 0;  // 1-based
  Action action = Action::ask;
  std::optional<AttrId> attribute;   // set for ask turns
  std::vector<ItemId> items;         // ranked list for recommend turns
  TurnOutcome response = TurnOutcome::ask_rejected;
  std::vector<ItemId> accepted_items;
  double reward = 0.0;

  friend bool operator==(const TurnRecord&, const TurnRecord&) = default;
};

}  // namespace convoseek
