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

#ifndef CYRES_HARNESS_HPP_
#define CYRES_HARNESS_HPP_

// Scenario files, the seeded replication runner and CSV/JSON emission shared
// by every experiment front end.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "cyres/adversarial.hpp"
#include "cyres/json_io.hpp"

namespace cyres {

inline constexpr const char* kToolName = "cyres";
inline constexpr const char* kToolVersion = "0.1.0";

enum class ScenarioKind {
  kSpe,
  kMtd,
  kHoneynet,
  kAttention,
  kAttackVerifyBound,
  kAttackTeach,
  kAttackPoisonLp,
  kAttackEnvPoison,
};

// "spe", "mtd", "honeynet", "attention", "attack-verify-bound", ...
const char* to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& name, const std::string& field);

// {kind, payload, seed?, replications?, output_dir?}
struct Scenario {
  ScenarioKind kind = ScenarioKind::kSpe;
  Json payload = Json::object();
  std::uint64_t seed = 0;
  std::int64_t replications = 1;
  std::filesystem::path output_dir = "results";

  // Wrapper form without the output directory; the digest covers this.
  Json content() const;
  // SHA-256 of the canonical serialization of content(), lowercase hex.
  std::string digest() const;
};

// Parses the payload with the owning module's reader; throws ValidationError
// naming the offending field.
void validate_payload(ScenarioKind kind, const Json& payload);

Scenario scenario_from_json(const Json& value, const std::string& path = "scenario");
// Parse errors carry line and column; schema errors name the field.
Scenario load_scenario(const std::filesystem::path& path);

// {n_states, n_actions, samples: [[s, a, r, s'], ...]}
Json to_json(const PoisonDataset& dataset);
PoisonDataset dataset_from_json(const Json& value, const std::string& path = "dataset");

std::string sha256_hex(std::string_view bytes);

// Shortest round-trip text for a double ("nan", "inf", "-inf" otherwise).
std::string format_number(double x);

// Comma-separated output with a fixed header. Cells are never quoted, so
// text cells must not contain commas.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  CsvWriter& cell(double x);
  CsvWriter& cell(std::int64_t x);
  CsvWriter& cell(std::string_view text);
  CsvWriter& empty();
  void end_row();

 private:
  void separator();

  std::ofstream out_;
  std::size_t columns_ = 0;
  std::size_t filled_ = 0;
};

// "name[unit]"
std::string column(std::string_view name, std::string_view unit);

// Numeric series recorded by one replication. Every replication of a
// scenario produces the same columns and row count.
struct Series {
  std::string file;                // written next to the other run outputs
  std::vector<std::string> names;  // column names without units
  std::vector<std::string> units;
  std::vector<std::vector<double>> rows;
};

struct ReplicationOutput {
  Json summary;  // also written as summary.json
  Series series;
  std::vector<std::filesystem::path> files;  // relative to the run directory
};

// One run of the scenario with the given seed; outputs go to dir.
ReplicationOutput run_replication(const Scenario& scenario, std::uint64_t seed,
                                  const std::filesystem::path& dir);

struct RunManifest {
  std::string tool_version;
  std::string scenario_digest;
  std::uint64_t base_seed = 0;
  std::vector<std::uint64_t> seeds;
  std::string started_at;  // UTC, ISO 8601
  std::string finished_at;
  std::vector<std::string> files;  // relative to the output directory

  Json to_json() const;
};

// Writes rep_000/, rep_001/, ... with seeds base + index, then aggregate.csv
// (per column: mean and population variance across replications), then
// manifest.json. Module errors are rethrown with the replication index.
RunManifest run_replicated(const Scenario& scenario);

// Per column mean and population variance (divide by n), row by row.
Series aggregate_series(const std::vector<Series>& runs);

// Writes series as CSV with units in the header.
void write_series(const std::filesystem::path& path, const Series& series);

// manifest.json via a temporary file and a rename.
void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

std::string utc_timestamp();

// k_c sensitivity of the honeynet learner. payload is a honeynet payload;
// writes kc_study.csv, settle.csv, summary.json and manifest.json.
RunManifest run_kc_study(const Json& honeynet_payload, const std::vector<double>& kc_values, int runs,
                         std::uint64_t seed, const std::filesystem::path& out);

}  // namespace cyres

#endif  // CYRES_HARNESS_HPP_
