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

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "convoseek/config.hpp"
#include "support/fixtures.hpp"

using namespace convoseek;

namespace {

struct SeedEnv {
  explicit SeedEnv(const char* value) {
    if (value) ::setenv("CONVOSEEK_SEED", value, 1);
    else ::unsetenv("CONVOSEEK_SEED");
  }
  ~SeedEnv() { ::unsetenv("CONVOSEEK_SEED"); }
};

RunConfig resolve(std::vector<std::string> sets, const std::optional<std::filesystem::path>& file = {}) {
  return resolve_config(file, sets);
}

}  // namespace

TEST_CASE("defaults survive a json round trip") {
  SeedEnv env(nullptr);
  RunConfig c = resolve({});
  CHECK(c.seed == 2026);
  CHECK(c.dim == 64);
  CHECK(c.max_turns == 15);
  CHECK(c.k == 10);
  CHECK(c.fm.dim == c.dim);
  CHECK(c.refiner.max_turns == c.max_turns);
  CHECK(c.frequency_scale == FrequencyScale::share);
  RunConfig back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
}

TEST_CASE("file then overrides then environment") {
  fixture::TempDir dir("config");
  {
    std::ofstream f(dir / "c.json");
    f << R"({"seed": 5, "dim": 16, "fm": {"epochs": 7, "frequency_scale": "max_count"}, "agent": "maxent"})";
  }
  SeedEnv none(nullptr);
  RunConfig c = resolve({"dim=24", "paths.model_dir=/tmp/m"}, dir / "c.json");
  CHECK(c.seed == 5);
  CHECK(c.dim == 24);
  CHECK(c.fm.dim == 24);
  CHECK(c.fm.epochs == 7);
  CHECK(c.frequency_scale == FrequencyScale::max_count);
  CHECK(c.agent == AgentKind::maxent);
  CHECK(c.model_dir == "/tmp/m");
  CHECK(c.refiner.seed == 6);
  CHECK(c.policy.seed == 7);

  SeedEnv env("99");
  RunConfig d = resolve({"seed=1"}, dir / "c.json");
  CHECK(d.seed == 99);
  CHECK(d.fm.seed == 99);
}

TEST_CASE("config errors are input errors") {
  SeedEnv none(nullptr);
  fixture::TempDir dir("config");
  CHECK_THROWS_AS(resolve({"nosuch=1"}), InputError);
  CHECK_THROWS_AS(resolve({"fm.nosuch=1"}), InputError);
  CHECK_THROWS_AS(resolve({"fm=1"}), InputError);
  CHECK_THROWS_AS(resolve({"dim"}), InputError);
  CHECK_THROWS_AS(resolve({"=3"}), InputError);
  CHECK_THROWS_AS(resolve({"dim=abc"}), InputError);
  CHECK_THROWS_AS(resolve({"dim=1.5"}), InputError);
  CHECK_THROWS_AS(resolve({"fm.epochs=-1"}), InputError);
  CHECK_THROWS_AS(resolve({"dim=\"8\""}), InputError);
  CHECK_THROWS_AS(resolve({"dim=0"}), InputError);
  CHECK_THROWS_AS(resolve({"max_turns=1"}), InputError);
  CHECK_THROWS_AS(resolve({"agent=bandit"}), InputError);
  CHECK_THROWS_AS(resolve({"hit_rate_norm=half"}), InputError);
  CHECK_THROWS_AS(resolve({"fm.frequency_scale=log"}), InputError);
  CHECK_THROWS_AS(resolve({"serve.port=70000"}), InputError);
  CHECK_THROWS_AS(resolve({}, dir / "missing.json"), InputError);
  {
    std::ofstream f(dir / "bad.json");
    f << "{\"dim\": ";
  }
  CHECK_THROWS_AS(resolve({}, dir / "bad.json"), InputError);
  {
    std::ofstream f(dir / "unknown.json");
    f << R"({"fm": {"epochz": 3}})";
  }
  CHECK_THROWS_WITH_AS(resolve({}, dir / "unknown.json"), doctest::Contains("fm.epochz"), InputError);
  {
    std::ofstream f(dir / "type.json");
    f << R"({"fm": {"epochs": "many"}})";
  }
  CHECK_THROWS_AS(resolve({}, dir / "type.json"), InputError);

  SeedEnv env("12x");
  CHECK_THROWS_AS(resolve({}), InputError);
}

TEST_CASE("floats accept integer literals") {
  SeedEnv none(nullptr);
  RunConfig c = resolve({"fm.learning_rate=1", "rewards.stop=-0.5"});
  CHECK(c.fm.learning_rate == 1.0);
  CHECK(c.rewards.stop == -0.5);
}

TEST_CASE("written configs are byte stable and reload") {
  SeedEnv none(nullptr);
  fixture::TempDir dir("config");
  RunConfig c = resolve({"dim=12", "policy.episodes=33"});
  write_config(dir / "a.json", c);
  write_config(dir / "b.json", resolve({}, dir / "a.json"));
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  CHECK(resolve({}, dir / "a.json").policy.episodes == 33);
}
