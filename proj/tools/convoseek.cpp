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

// convoseek: command-line driver for the conversational recommender.
//
// Exit codes: 0 success, 1 invalid input or missing artifact, 2 runtime failure.

#include <csignal>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

// Eigen before httplib: <resolv.h> defines a `_res` macro that breaks Eigen.
#include "convoseek/config.hpp"
#include "convoseek/pipeline.hpp"
#include "convoseek/service.hpp"

#include <httplib.h>

namespace {

using namespace convoseek;

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server != nullptr) g_server->stop();
}

int serve(const RunConfig& config) {
  std::shared_ptr<const ModelSet> models;
  try {
    models = load_models(config, config.agent);
  } catch (const InputError& e) {
    std::cerr << "[serve] models not loaded (" << e.what() << "); session calls will answer 503\n";
  }
  SessionService service(models, config);
  httplib::Server server;
  mount_routes(server, service, config);
  g_server = &server;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  std::cerr << "[serve] listening on http://" << config.serve_host << ":" << config.serve_port << "\n";
  if (!server.listen(config.serve_host, config.serve_port)) {
    throw RuntimeFailure("cannot listen on " + config.serve_host + ":" + std::to_string(config.serve_port));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"convoseek: conversational recommendation with preference refinement"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string agent_name;
  int port = -1;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--set", overrides, "override a config key, e.g. --set fm.epochs=10")->take_all();
  };
  std::vector<std::pair<std::string, std::string>> commands = {
      {"ingest", "read raw interaction/attribute files, split 7:2:1"},
      {"synth", "generate a synthetic corpus"},
      {"train-fm", "train the factorization machine embeddings"},
      {"train-refiner", "train the user representation refiner"},
      {"train-policy", "train the ask/recommend Q-network"},
      {"simulate", "run simulated sessions and write traces"},
      {"evaluate", "benchmark an agent and write reports"},
      {"report", "compare evaluated agents"},
      {"serve", "run the live session HTTP service"},
      {"pipeline", "synth or ingest, train everything, evaluate all agents"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    common(sub);
    subs[name] = sub;
  }
  for (const char* name : {"simulate", "evaluate"}) {
    subs[name]
        ->add_option("--agent", agent_name, "upsrec, maxent or mf")
        ->check(CLI::IsMember({"upsrec", "maxent", "mf"}));
  }
  subs["serve"]->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (port >= 0) overrides.push_back("serve.port=" + std::to_string(port));
    std::optional<std::filesystem::path> file;
    if (!config_path.empty()) file = config_path;
    RunConfig config = resolve_config(file, overrides);
    AgentKind agent = agent_name.empty() ? config.agent : parse_agent_kind(agent_name);

    std::string name = app.get_subcommands().front()->get_name();
    if (name == "ingest") stage_ingest(config, std::cerr);
    else if (name == "synth") stage_synth(config, std::cerr);
    else if (name == "train-fm") stage_train_fm(config, std::cerr);
    else if (name == "train-refiner") stage_train_refiner(config, std::cerr);
    else if (name == "train-policy") stage_train_policy(config, std::cerr);
    else if (name == "simulate") stage_simulate(config, agent, std::cerr);
    else if (name == "evaluate") stage_evaluate(config, agent, std::cerr);
    else if (name == "report") stage_report(config, std::cout);
    else if (name == "pipeline") stage_pipeline(config, std::cerr);
    else if (name == "serve") return serve(config);
    return 0;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 2;
  }
}
