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

#ifndef CYRES_JSON_IO_HPP_
#define CYRES_JSON_IO_HPP_

// Strict JSON reading: duplicate keys and unknown keys are errors, every
// message names the offending field path.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "cyres/error.hpp"

namespace cyres {

using Json = nlohmann::json;

// Parses text, rejecting duplicate object keys. Parse errors carry the
// line/column reported by the parser.
Json parse_json_strict(const std::string& text, const std::string& origin);
Json read_json_file(const std::filesystem::path& path);

// Canonical serialization: keys sorted, no whitespace.
std::string canonical_dump(const Json& value);

class ObjectReader {
 public:
  ObjectReader(const Json& object, std::string path);

  bool has(const std::string& key) const;
  const Json& at(const std::string& key);  // required
  const Json* find(const std::string& key);  // optional; nullptr if absent

  double number(const std::string& key);
  double number_or(const std::string& key, double fallback);
  std::int64_t integer(const std::string& key);
  std::int64_t integer_or(const std::string& key, std::int64_t fallback);
  std::string string(const std::string& key);
  std::string string_or(const std::string& key, const std::string& fallback);
  bool boolean_or(const std::string& key, bool fallback);

  std::string field(const std::string& key) const;

  // Throws on keys never touched through the accessors above.
  void finish() const;

 private:
  const Json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

[[noreturn]] void fail_field(const std::string& field, const std::string& what);

double as_number(const Json& value, const std::string& field);
std::int64_t as_integer(const Json& value, const std::string& field);
Eigen::VectorXd as_vector(const Json& value, const std::string& field);
Eigen::MatrixXd as_matrix(const Json& value, const std::string& field);
std::vector<std::string> as_strings(const Json& value, const std::string& field);
std::vector<int> as_indices(const Json& value, const std::string& field);

Json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v);
Json matrix_json(const Eigen::Ref<const Eigen::MatrixXd>& m);

}  // namespace cyres

#endif  // CYRES_JSON_IO_HPP_
