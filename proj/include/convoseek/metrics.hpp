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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "convoseek/corpus.hpp"
#include "convoseek/turn.hpp"
#include "convoseek/types.hpp"

namespace convoseek {

struct SessionOutcome {
  UserId user = 0;
  bool success = false;
  std::vector<ItemId> final_list;
  ItemSet groundtruth;
  std::size_t turns = 0;
  AttrId first_attribute = 0;  // the attribute the user opened with
  std::vector<TurnRecord> trace;
};

/// Binary-relevance NDCG@k; IDCG uses min(k, |groundtruth|) ideal hits.
double ndcg_at_k(std::span<const ItemId> ranked, std::span<const ItemId> groundtruth, std::size_t k);

enum class HitRateNorm {
  by_k,         // |hits| / k
  by_min_k_gt,  // |hits| / min(k, |groundtruth|)
};

double ht_at_k(std::span<const ItemId> recommended, std::span<const ItemId> groundtruth,
               std::size_t k, HitRateNorm norm = HitRateNorm::by_k);

/// Mean session length; failed sessions count as `max_turns`.
double average_turns(std::span<const SessionOutcome> outcomes, std::size_t max_turns);

/// Fraction of (positive, negative) pairs ordered correctly, ties count 1/2.
/// `scores` is indexed by item id.
double auc_pairs(std::span<const double> scores, std::span<const ItemId> positives,
                 std::span<const ItemId> negatives);

/// Attribute AUC of a user vector: attributes of any groundtruth item are
/// positives, all other attributes negatives.
double auc_attributes(const Vector& user_vec, const Matrix& attr_vecs,
                      std::span<const ItemId> groundtruth, const Catalog& catalog);

struct AskFrequency {
  AttrId attribute = 0;
  double likelihood = 0.0;
};

/// Fraction of sessions that asked each attribute at least once, sorted by
/// likelihood (descending), then attribute id.
std::vector<AskFrequency> ask_frequency(std::span<const SessionOutcome> outcomes,
                                        std::size_t num_attributes);

/// Two-sided exact sign test over paired samples (ties dropped).
double paired_sign_test(std::span<const double> a, std::span<const double> b);

struct CurvePoint {
  std::size_t turn = 0;
  double ndcg = 0.0;
  double ht = 0.0;
};

struct UserRow {
  UserId user = 0;
  bool success = false;
  std::size_t turns = 0;
  double ndcg = 0.0;
  double ht = 0.0;
};

struct BenchmarkReport {
  std::string agent;
  std::size_t k = 10;
  std::size_t max_turns = 15;
  double ndcg_at_k = 0.0;
  double ht_at_k = 0.0;
  std::optional<double> average_turns;  // absent for agents that never converse
  std::vector<CurvePoint> per_turn;     // forced-recommendation curve
  std::vector<AskFrequency> ask_frequency;
  std::vector<double> auc_item_by_turn;  // index = turn, 0 = unrefined r_u0
  std::vector<double> auc_attr_by_turn;
  std::vector<UserRow> rows;
};

void write_report_json(const std::filesystem::path& path, const BenchmarkReport& report);
BenchmarkReport read_report_json(const std::filesystem::path& path);
void write_report_csv(const std::filesystem::path& path, const BenchmarkReport& report);
void write_curves_csv(const std::filesystem::path& path, const BenchmarkReport& report);

}  // namespace convoseek
