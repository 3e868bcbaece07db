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

#include "convoseek/pipeline.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "convoseek/policy_training.hpp"

namespace convoseek {

namespace fs = std::filesystem;

namespace {

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory " + dir.string() + ": " + ec.message());
}

void log_config(const RunConfig& config, const char* stage, std::ostream& log) {
  log << "[" << stage << "] seed=" << config.seed << " config=" << config.to_json().dump() << '\n';
}

void write_user_ids(const fs::path& path, const std::vector<std::int64_t>& original) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  for (std::size_t u = 0; u < original.size(); ++u) out << u << '\t' << original[u] << '\n';
}

void copy_sidecar(const fs::path& from, const fs::path& to) {
  if (from.empty()) return;
  require_artifact(from);
  fs::copy_file(from, to, fs::copy_options::overwrite_existing);
}

AgentBundle bundle_for(const ModelSet& m, AgentKind kind, const RunConfig& config) {
  AgentBundle a;
  a.kind = kind;
  switch (kind) {
    case AgentKind::upsrec: a.decision = DecisionRule::q_network; break;
    case AgentKind::maxent: a.decision = DecisionRule::candidate_threshold; break;
    case AgentKind::mf: a.decision = DecisionRule::always_recommend; break;
  }
  a.catalog = &m.data.catalog;
  a.split = &m.data.split;
  a.adjacency = &m.data.adjacency;
  a.embeds = &m.embeds;
  a.refiner = m.refiner ? &*m.refiner : nullptr;
  a.policy = m.policy ? &*m.policy : nullptr;
  a.k = config.k;
  a.max_turns = config.max_turns;
  a.maxent_threshold_factor = config.maxent_threshold_factor;
  a.hit_rate_norm = config.hit_rate_norm;
  a.rewards = config.rewards;
  return a;
}

EmbeddingSet load_checked_embeddings(const RunConfig& config, const Dataset& data) {
  fs::path path = config.model_dir / kEmbedsFile;
  require_artifact(path);
  EmbeddingSet embeds = load_embeddings(path);
  embeds.validate_against(data.catalog);
  if (embeds.dim() != config.dim) {
    throw InputError(path.string() + ": dimension " + std::to_string(embeds.dim()) +
                     " does not match configured dim " + std::to_string(config.dim));
  }
  return embeds;
}

}  // namespace

void require_artifact(const fs::path& path) {
  if (!fs::exists(path)) throw InputError("missing artifact: " + path.string());
}

Dataset load_dataset(const RunConfig& config) {
  fs::path interactions = config.data_dir / kInteractionsFile;
  fs::path attributes = config.data_dir / kItemAttributesFile;
  fs::path split_path = config.data_dir / kSplitFile;
  require_artifact(interactions);
  require_artifact(attributes);
  require_artifact(split_path);
  Dataset d;
  // Ingest already filtered and re-indexed users; keep every row.
  RawCorpus raw = load_catalog(interactions, attributes, 1);
  d.catalog = std::move(raw.catalog);
  d.split = read_split(split_path, d.catalog.num_users);
  d.split.validate();
  d.adjacency = build_adjacency(d.catalog, d.split);
  d.stats = compute_item_frequency(d.split, d.catalog.num_items, config.frequency_scale);
  return d;
}

std::map<std::uint32_t, std::string> read_names(const fs::path& path) {
  std::map<std::uint32_t, std::string> names;
  std::ifstream in(path);
  if (!in) return names;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    try {
      if (tab == std::string::npos) throw std::invalid_argument("no tab");
      names[static_cast<std::uint32_t>(std::stoul(line.substr(0, tab)))] = line.substr(tab + 1);
    } catch (const std::exception&) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected id<TAB>name");
    }
  }
  return names;
}

AgentBundle ModelSet::agent(AgentKind kind, const RunConfig& config) const {
  if (kind == AgentKind::upsrec) {
    if (!refiner) throw InputError("missing artifact: " + (config.model_dir / kRefinerFile).string());
    if (!policy) throw InputError("missing artifact: " + (config.model_dir / kPolicyFile).string());
  }
  AgentBundle a = bundle_for(*this, kind, config);
  a.validate();
  return a;
}

std::unique_ptr<ModelSet> load_models(const RunConfig& config, AgentKind kind) {
  auto m = std::make_unique<ModelSet>();
  m->data = load_dataset(config);
  m->embeds = load_checked_embeddings(config, m->data);
  fs::path refiner_path = config.model_dir / kRefinerFile;
  fs::path policy_path = config.model_dir / kPolicyFile;
  if (kind == AgentKind::upsrec) {
    require_artifact(refiner_path);
    require_artifact(policy_path);
  }
  if (fs::exists(refiner_path)) {
    m->refiner = load_refiner(refiner_path);
    if (m->refiner->dim() != m->embeds.dim()) throw InputError(refiner_path.string() + ": dimension mismatch");
  }
  if (fs::exists(policy_path)) {
    m->policy = load_policy(policy_path);
    if (m->policy->input_dim() != config.dim + config.max_turns) {
      throw InputError(policy_path.string() + ": input size does not match dim + max_turns");
    }
  }
  m->attribute_names = read_names(config.data_dir / kAttributeNamesFile);
  m->item_names = read_names(config.data_dir / kItemNamesFile);
  return m;
}

fs::path agent_report_dir(const RunConfig& config, AgentKind kind) {
  return config.report_dir / std::string(to_string(kind));
}

void stage_ingest(const RunConfig& config, std::ostream& log) {
  log_config(config, "ingest", log);
  if (config.input_interactions.empty() || config.input_attributes.empty()) {
    throw InputError("ingest needs input.interactions and input.attributes");
  }
  require_artifact(config.input_interactions);
  require_artifact(config.input_attributes);
  RawCorpus raw = load_catalog(config.input_interactions, config.input_attributes,
                               config.min_user_interactions);
  InteractionSplit split = split_interactions(raw.interactions, raw.catalog.num_users, config.seed);
  prepare_dir(config.data_dir);
  write_interactions(config.data_dir / kInteractionsFile, raw.interactions);
  write_item_attributes(config.data_dir / kItemAttributesFile, raw.catalog);
  write_split(config.data_dir / kSplitFile, split);
  write_user_ids(config.data_dir / kUserIdsFile, raw.original_user_ids);
  copy_sidecar(config.input_attribute_names, config.data_dir / kAttributeNamesFile);
  copy_sidecar(config.input_item_names, config.data_dir / kItemNamesFile);
  write_config(config.data_dir / kConfigFile, config);
  log << "[ingest] users=" << raw.catalog.num_users << " items=" << raw.catalog.num_items
      << " attributes=" << raw.catalog.num_attributes << " interactions=" << raw.interactions.size()
      << '\n';
}

void stage_synth(const RunConfig& config, std::ostream& log) {
  log_config(config, "synth", log);
  SyntheticCorpus corpus =
      generate_synthetic(config.synth_users, config.synth_items, config.synth_attributes, config.seed);
  prepare_dir(config.data_dir);
  write_interactions(config.data_dir / kInteractionsFile, corpus.interactions);
  write_item_attributes(config.data_dir / kItemAttributesFile, corpus.catalog);
  write_split(config.data_dir / kSplitFile, corpus.split);
  write_planted(config.data_dir / kPlantedFile, corpus.planted);
  std::vector<std::int64_t> ids(corpus.catalog.num_users);
  for (std::size_t u = 0; u < ids.size(); ++u) ids[u] = static_cast<std::int64_t>(u);
  write_user_ids(config.data_dir / kUserIdsFile, ids);
  write_config(config.data_dir / kConfigFile, config);
  log << "[synth] users=" << corpus.catalog.num_users << " items=" << corpus.catalog.num_items
      << " attributes=" << corpus.catalog.num_attributes
      << " interactions=" << corpus.interactions.size() << '\n';
}

void stage_train_fm(const RunConfig& config, std::ostream& log) {
  log_config(config, "train-fm", log);
  Dataset data = load_dataset(config);
  FMTrainLog fm_log;
  EmbeddingSet embeds = train_fm(data.catalog, data.split, data.stats, config.fm, &fm_log);
  prepare_dir(config.model_dir);
  save_embeddings(config.model_dir / kEmbedsFile, embeds);
  std::ofstream out(config.model_dir / kFmLogFile, std::ios::binary | std::ios::trunc);
  out.precision(10);
  out << "epoch,loss\n";
  for (std::size_t e = 0; e < fm_log.epoch_loss.size(); ++e) out << e + 1 << ',' << fm_log.epoch_loss[e] << '\n';
  write_config(config.model_dir / kConfigFile, config);
  if (!fm_log.epoch_loss.empty()) {
    log << "[train-fm] epochs=" << fm_log.epoch_loss.size() << " first_loss=" << fm_log.epoch_loss.front()
        << " last_loss=" << fm_log.epoch_loss.back() << '\n';
  }
}

void stage_train_refiner(const RunConfig& config, std::ostream& log) {
  log_config(config, "train-refiner", log);
  Dataset data = load_dataset(config);
  EmbeddingSet embeds = load_checked_embeddings(config, data);
  RefinerTrainLog ref_log;
  RefinerParams params = train_refiner(data.catalog, data.split, embeds, config.refiner, &ref_log);
  save_refiner(config.model_dir / kRefinerFile, params);
  write_config(config.model_dir / kConfigFile, config);
  log << "[train-refiner] epochs=" << ref_log.epoch_loss.size();
  if (!ref_log.epoch_loss.empty()) log << " last_loss=" << ref_log.epoch_loss.back();
  log << " skipped=" << ref_log.skipped_instances << '\n';
}

void stage_train_policy(const RunConfig& config, std::ostream& log) {
  log_config(config, "train-policy", log);
  auto models = load_models(config, AgentKind::maxent);
  if (!models->refiner) throw InputError("missing artifact: " + (config.model_dir / kRefinerFile).string());
  AgentBundle agent = bundle_for(*models, AgentKind::upsrec, config);
  std::vector<UserId> users;
  for (UserId u = 0; u < models->data.split.num_users(); ++u) {
    if (!models->data.split.valid_items[u].empty()) users.push_back(u);
  }
  QNetwork init = QNetwork::initialize(config.dim + config.max_turns, config.policy.hidden, config.policy.seed);
  PolicyTrainLog train_log;
  QNetwork net = train_policy(agent, users, std::move(init), config.policy, &train_log);
  save_policy(config.model_dir / kPolicyFile, net);
  write_policy_log(config.model_dir / kPolicyLogFile, train_log);
  write_config(config.model_dir / kConfigFile, config);
  log << "[train-policy] episodes=" << train_log.episodes.size() << '\n';
}

void stage_simulate(const RunConfig& config, AgentKind kind, std::ostream& log) {
  log_config(config, "simulate", log);
  auto models = load_models(config, kind);
  AgentBundle agent = models->agent(kind, config);
  std::vector<UserId> users = benchmark_users(models->data.split);
  auto outcomes = run_benchmark(users, agent, config.seed);
  fs::path dir = agent_report_dir(config, kind);
  prepare_dir(dir);
  write_traces(dir / kTracesFile, outcomes);
  write_config(dir / kConfigFile, config);
  std::size_t wins = 0;
  for (const auto& o : outcomes) wins += o.success ? 1 : 0;
  log << "[simulate] agent=" << to_string(kind) << " sessions=" << outcomes.size() << " successes=" << wins
      << '\n';
}

BenchmarkReport stage_evaluate(const RunConfig& config, AgentKind kind, std::ostream& log) {
  log_config(config, "evaluate", log);
  auto models = load_models(config, kind);
  AgentBundle agent = models->agent(kind, config);
  std::vector<UserId> users = benchmark_users(models->data.split);
  auto outcomes = run_benchmark(users, agent, config.seed);
  ForcedDiagnostics forced = forced_recommendation_curve(users, agent, config.seed);
  BenchmarkReport report = assemble_report(outcomes, forced, agent);
  fs::path dir = agent_report_dir(config, kind);
  prepare_dir(dir);
  write_report_json(dir / kReportJsonFile, report);
  write_report_csv(dir / kReportCsvFile, report);
  write_curves_csv(dir / kCurvesFile, report);
  write_traces(dir / kTracesFile, outcomes);
  write_config(dir / kConfigFile, config);
  log << "[evaluate] agent=" << report.agent << " users=" << report.rows.size() << " ndcg@" << report.k << "="
      << report.ndcg_at_k << " ht@" << report.k << "=" << report.ht_at_k << " at="
      << (report.average_turns ? std::to_string(*report.average_turns) : std::string("NA")) << '\n';
  return report;
}

void stage_report(const RunConfig& config, std::ostream& out) {
  std::vector<BenchmarkReport> reports;
  for (AgentKind kind : {AgentKind::upsrec, AgentKind::maxent, AgentKind::mf}) {
    fs::path path = agent_report_dir(config, kind) / kReportJsonFile;
    if (fs::exists(path)) reports.push_back(read_report_json(path));
  }
  if (reports.empty()) {
    throw InputError("missing artifact: no report.json under " + config.report_dir.string());
  }
  std::ostringstream csv;
  csv << std::setprecision(6) << "agent,users,ndcg,ht,at\n";
  out << std::left << std::setw(8) << "agent" << std::right << std::setw(8) << "users" << std::setw(10)
      << "NDCG@k" << std::setw(10) << "HT@k" << std::setw(8) << "AT" << '\n';
  for (const auto& r : reports) {
    std::string at = r.average_turns ? (std::ostringstream() << std::fixed << std::setprecision(2)
                                                             << *r.average_turns).str()
                                     : std::string("NA");
    out << std::left << std::setw(8) << r.agent << std::right << std::setw(8) << r.rows.size() << std::fixed
        << std::setprecision(4) << std::setw(10) << r.ndcg_at_k << std::setw(10) << r.ht_at_k << std::setw(8)
        << at << '\n';
    csv << r.agent << ',' << r.rows.size() << ',' << r.ndcg_at_k << ',' << r.ht_at_k << ','
        << (r.average_turns ? (std::ostringstream() << *r.average_turns).str() : std::string("NA")) << '\n';
  }
  prepare_dir(config.report_dir);
  std::ofstream file(config.report_dir / "summary.csv", std::ios::binary | std::ios::trunc);
  if (!file) throw InputError("cannot write " + (config.report_dir / "summary.csv").string());
  file << csv.str();
}

void stage_pipeline(const RunConfig& config, std::ostream& log) {
  if (!config.input_interactions.empty()) {
    stage_ingest(config, log);
  } else {
    stage_synth(config, log);
  }
  stage_train_fm(config, log);
  stage_train_refiner(config, log);
  stage_train_policy(config, log);
  for (AgentKind kind : {AgentKind::upsrec, AgentKind::maxent, AgentKind::mf}) stage_evaluate(config, kind, log);
  stage_report(config, log);
}

}  // namespace convoseek
