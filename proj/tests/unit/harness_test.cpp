// Copyright 2026 The Cyres Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>

#include "cyres/harness.hpp"
#include "cyres/mtd.hpp"
#include "support/files.hpp"
#include "support/suites.hpp"

namespace cyres {
namespace {

namespace fs = std::filesystem;
using testing::read_csv;
using testing::read_file;
using testing::TempDir;
using testing::write_file;

const char* const kMinimalMtd = R"({
  "kind": "mtd",
  "seed": 3,
  "payload": {
    "vulnerabilities": ["v1", "v2"],
    "configurations": ["c1", "c2"],
    "surface_map": {"c1": ["v1"], "c2": ["v2"]},
    "bijection": {"v1": "a1", "v2": "a2"},
    "damage": [[2.0, 1.0], [1.0, 3.0]],
    "horizon": 50
  }
})";

Json teach_payload(double discount) {
  return {{"mdp",
           {{"n_states", 1},
            {"n_actions", 2},
            {"discount", discount},
            {"cost", {{0.5, 1.5}}},
            {"transition", {{{1.0}, {1.0}}}}}},
          {"target", {1}},
          {"margin", 0.1}};
}

TEST_CASE("load_scenario") {
  TempDir dir("load");
  write_file(dir / "mtd.json", kMinimalMtd);
  const Scenario sc = load_scenario(dir / "mtd.json");
  CHECK(sc.kind == ScenarioKind::kMtd);
  CHECK(sc.seed == 3);
  CHECK(sc.replications == 1);

  SUBCASE("negative discount names the field") {
    write_file(dir / "bad.json", Json{{"kind", "attack-teach"}, {"payload", teach_payload(-0.5)}}.dump());
    CHECK_THROWS_WITH_AS(load_scenario(dir / "bad.json"), doctest::Contains("payload.mdp.discount"),
                         ValidationError);
  }
  SUBCASE("duplicate keys") {
    write_file(dir / "dup.json", R"({"kind": "spe", "kind": "mtd", "payload": {"cost": [[1]]}})");
    CHECK_THROWS_WITH_AS(load_scenario(dir / "dup.json"), doctest::Contains("duplicate key \"kind\""),
                         ValidationError);
  }
  SUBCASE("parse errors carry line and column") {
    write_file(dir / "broken.json", "{\n  \"kind\": \"spe\",\n  \"payload\": [1, }\n}");
    CHECK_THROWS_WITH_AS(load_scenario(dir / "broken.json"), doctest::Contains("line 3, column"),
                         ValidationError);
  }
  SUBCASE("schema errors") {
    write_file(dir / "s.json", R"({"kind": "spe", "payload": {"cost": [[1]]}, "colour": 1})");
    CHECK_THROWS_WITH_AS(load_scenario(dir / "s.json"), doctest::Contains("scenario.colour: unknown key"),
                         ValidationError);
    write_file(dir / "s.json", R"({"kind": "spe", "replications": 0, "payload": {"cost": [[1]]}})");
    CHECK_THROWS_WITH_AS(load_scenario(dir / "s.json"), doctest::Contains("replications"), ValidationError);
    write_file(dir / "s.json", R"({"kind": "spe", "seed": -1, "payload": {"cost": [[1]]}})");
    CHECK_THROWS_WITH_AS(load_scenario(dir / "s.json"), doctest::Contains("seed"), ValidationError);
    write_file(dir / "s.json", R"({"kind": "lqg", "payload": {}})");
    CHECK_THROWS_WITH_AS(load_scenario(dir / "s.json"), doctest::Contains("unknown kind"), ValidationError);
    write_file(dir / "s.json", R"({"kind": "mtd", "payload": {"horizon": 5, "layers": [], "x": 1}})");
    CHECK_THROWS_WITH_AS(load_scenario(dir / "s.json"), doctest::Contains("payload.layers"), ValidationError);
    Json mtd = parse_json_strict(kMinimalMtd, "mtd");
    mtd["payload"]["mode"] = "parallel";
    write_file(dir / "s.json", mtd.dump());
    CHECK_THROWS_WITH_AS(load_scenario(dir / "s.json"), doctest::Contains("payload.mode"), ValidationError);
    CHECK_THROWS_AS(load_scenario(dir / "missing.json"), ValidationError);
  }
}

TEST_CASE("digest ignores key order and output directory") {
  const Json a = parse_json_strict(kMinimalMtd, "a");
  Json b = Json::object();
  b["payload"] = a["payload"];
  b["seed"] = 3;
  b["kind"] = "mtd";
  b["output_dir"] = "elsewhere";
  CHECK(scenario_from_json(a).digest() == scenario_from_json(b).digest());
  b["seed"] = 4;
  CHECK(scenario_from_json(a).digest() != scenario_from_json(b).digest());
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("number formatting round-trips") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    CHECK(std::stod(format_number(x)) == x);
  }
  CHECK(format_number(3.0) == "3");
  CHECK(format_number(NAN) == "nan");
  CHECK(format_number(-INFINITY) == "-inf");
}

TEST_CASE("CSV writer") {
  TempDir dir("csv");
  {
    CsvWriter csv(dir / "t.csv", {column("t", "s"), "name"});
    csv.cell(std::int64_t{1}).cell("x").end_row();
    csv.cell(0.5).empty().end_row();
    CHECK_THROWS_AS(csv.cell("a,b"), ValidationError);
    csv.cell(1.0);
    CHECK_THROWS_AS(csv.end_row(), Error);
  }
  CHECK(read_file(dir / "t.csv").rfind("t[s],name\n1,x\n0.5,\n", 0) == 0);
}

TEST_CASE("aggregate_series") {
  Series a{"s.csv", {"k", "x"}, {"index", "m"}, {{0, 1.0}, {1, 2.0}}};
  Series b{"s.csv", {"k", "x"}, {"index", "m"}, {{0, 3.0}, {1, 2.0}}};
  const Series agg = aggregate_series({a, b});
  CHECK(agg.names == std::vector<std::string>{"k", "x_mean", "x_popvar"});
  CHECK(agg.units[2] == "m^2");
  CHECK(agg.rows[0] == std::vector<double>{0, 2.0, 1.0});
  CHECK(agg.rows[1] == std::vector<double>{1, 2.0, 0.0});
  const Series one = aggregate_series({a});
  CHECK(one.rows[0] == std::vector<double>{0, 1.0, 0.0});
  b.rows.pop_back();
  CHECK_THROWS_AS(aggregate_series({a, b}), NumericalError);
  b.rows = {{0, 1.0}, {2, 1.0}};
  CHECK_THROWS_AS(aggregate_series({a, b}), NumericalError);
  CHECK_THROWS_AS(aggregate_series({}), ValidationError);
}

TEST_CASE("run_replicated with one replication") {
  TempDir dir("one");
  Scenario sc = scenario_from_json(parse_json_strict(kMinimalMtd, "mtd"));
  sc.output_dir = dir.path();
  const RunManifest m = run_replicated(sc);
  CHECK(m.seeds == std::vector<std::uint64_t>{3});
  CHECK(m.files.back() == "aggregate.csv");
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK_FALSE(fs::exists(dir / "manifest.json.tmp"));
  for (const auto& f : m.files) CHECK(fs::exists(dir.path() / f));
  const auto run = read_csv(dir / "rep_000/layers.csv");
  const auto agg = read_csv(dir / "aggregate.csv");
  REQUIRE(agg.rows.size() == run.rows.size());
  for (std::size_t c = 1; c < run.header.size(); ++c) {
    CHECK(agg.rows[0][2 * c - 1] == run.rows[0][c]);
    CHECK(agg.number(0, 2 * c) == 0.0);
  }
  const Json manifest = read_json_file(dir / "manifest.json");
  CHECK(manifest["scenario_digest"] == sc.digest());
  CHECK(manifest["tool_version"] == kToolVersion);
  const auto traj = read_csv(dir / "rep_000/trajectory.csv");
  CHECK(traj.header.front() == "layer");
  CHECK(traj.rows.size() == 50);
  CHECK(traj.rows.back().back() != "");
}

TEST_CASE("identical scenarios give identical data") {
  TempDir a("same_a");
  TempDir b("same_b");
  Scenario sc;
  sc.kind = ScenarioKind::kAttention;
  Json payload = to_json(testing::dominant_aid_scenario());
  payload["episodes"] = 200;
  sc.payload = payload;
  sc.seed = 12;
  sc.replications = 3;
  sc.output_dir = a.path();
  const RunManifest ma = run_replicated(sc);
  sc.output_dir = b.path();
  const RunManifest mb = run_replicated(sc);
  CHECK(ma.files == mb.files);
  CHECK(ma.seeds == std::vector<std::uint64_t>{12, 13, 14});
  for (const auto& f : ma.files) CHECK(read_file(a.path() / f) == read_file(b.path() / f));
  CHECK(read_file(a / "rep_000/stages.csv") != read_file(a / "rep_001/stages.csv"));
}

TEST_CASE("honeynet aggregate over 100 replications") {
  TempDir dir("hn100");
  Scenario sc;
  sc.kind = ScenarioKind::kHoneynet;
  sc.payload = {{"schedule", {{"epochs", 300}}}};
  sc.replications = 100;
  sc.seed = 40;
  sc.output_dir = dir.path();
  run_replicated(sc);
  const auto agg = read_csv(dir / "aggregate.csv");
  for (const char* name : {"q_s12_a_E", "q_s12_a_A", "max_q_s12"}) {
    const std::size_t mean_col = agg.column(std::string(name) + "_mean[reward]");
    const std::size_t var_col = agg.column(std::string(name) + "_popvar[reward^2]");
    REQUIRE(mean_col < agg.header.size());
    REQUIRE(var_col < agg.header.size());
    std::vector<testing::CsvTable> runs;
    for (int r = 0; r < 100; ++r) {
      char rep[16];
      std::snprintf(rep, sizeof rep, "rep_%03d", r);
      runs.push_back(read_csv(dir.path() / rep / "convergence.csv"));
    }
    const std::size_t col = runs[0].column(std::string(name) + "[reward]");
    for (std::size_t row : {std::size_t{0}, std::size_t{99}, std::size_t{299}}) {
      double mean = 0.0;
      for (const auto& t : runs) mean += t.number(row, col);
      mean /= 100.0;
      double var = 0.0;
      for (const auto& t : runs) var += (t.number(row, col) - mean) * (t.number(row, col) - mean);
      var /= 100.0;
      CHECK(std::abs(agg.number(row, mean_col) - mean) <= 1e-12);
      CHECK(std::abs(agg.number(row, var_col) - var) <= 1e-12);
    }
  }
}

TEST_CASE("replication errors carry the index") {
  TempDir dir("err");
  Scenario sc;
  sc.kind = ScenarioKind::kAttackTeach;
  Json payload = teach_payload(0.5);
  payload["attackable"] = Json::array();
  sc.payload = payload;
  sc.output_dir = dir.path();
  CHECK_THROWS_WITH_AS(run_replicated(sc), doctest::Contains("replication 0: "), InfeasibleError);
  CHECK_FALSE(fs::exists(dir / "manifest.json"));
}

TEST_CASE("attack records") {
  TempDir dir("attack");
  Scenario sc;
  sc.kind = ScenarioKind::kAttackTeach;
  sc.payload = teach_payload(0.5);
  sc.output_dir = dir.path();
  run_replicated(sc);
  const Json s = read_json_file(dir / "rep_000/summary.json");
  CHECK(s["success"] == true);
  CHECK(s["minimal_perturbation_bound"].get<double>() == doctest::Approx(0.25));
  CHECK(s["attack_cost"].get<double>() >= 0.25);

  const PoisonDataset d = testing::random_dataset(5004);
  const PoisonDataset back = dataset_from_json(to_json(d));
  CHECK(back.samples.size() == d.samples.size());
  CHECK(back.samples[3].reward == d.samples[3].reward);
  CHECK_THROWS_WITH_AS(dataset_from_json(Json{{"samples", {{0, 1, 0.5}}}}), doctest::Contains("samples[0]"),
                       ValidationError);
  CHECK_THROWS_AS(dataset_from_json(Json{{"samples", {{0, 1, 0.5, 4}}}, {"n_states", 2}}), ValidationError);
}

}  // namespace
}  // namespace cyres
