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

#include "cyres/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace cyres {
namespace {

// SAX wrapper around the DOM builder that remembers the keys of every open
// object.
class StrictSax : public nlohmann::detail::json_sax_dom_parser<Json> {
 public:
  using Base = nlohmann::detail::json_sax_dom_parser<Json>;
  explicit StrictSax(Json& root) : Base(root, true) {}

  bool start_object(std::size_t n) {
    keys_.emplace_back();
    return Base::start_object(n);
  }
  bool end_object() {
    keys_.pop_back();
    return Base::end_object();
  }
  bool key(string_t& k) {
    if (!keys_.back().insert(k).second) {
      duplicate_ = k;
      return false;
    }
    return Base::key(k);
  }

  const std::optional<std::string>& duplicate() const { return duplicate_; }

 private:
  std::vector<std::set<std::string>> keys_;
  std::optional<std::string> duplicate_;
};

}  // namespace

Json parse_json_strict(const std::string& text, const std::string& origin) {
  Json root;
  StrictSax sax(root);
  bool ok = false;
  try {
    ok = Json::sax_parse(text, &sax);
  } catch (const Json::parse_error& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  if (sax.duplicate()) {
    throw ValidationError(origin + ": duplicate key \"" + *sax.duplicate() + "\"");
  }
  if (!ok || sax.is_errored()) throw ValidationError(origin + ": malformed JSON");
  return root;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_json_strict(buffer.str(), path.string());
}

std::string canonical_dump(const Json& value) { return value.dump(); }

ObjectReader::ObjectReader(const Json& object, std::string path)
    : object_(object), path_(std::move(path)) {
  if (!object_.is_object()) fail_field(path_.empty() ? "<root>" : path_, "expected an object");
}

std::string ObjectReader::field(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

bool ObjectReader::has(const std::string& key) const { return object_.contains(key); }

const Json& ObjectReader::at(const std::string& key) {
  auto it = object_.find(key);
  if (it == object_.end()) fail_field(field(key), "required field missing");
  seen_.insert(key);
  return *it;
}

const Json* ObjectReader::find(const std::string& key) {
  auto it = object_.find(key);
  if (it == object_.end()) return nullptr;
  seen_.insert(key);
  return &*it;
}

double ObjectReader::number(const std::string& key) { return as_number(at(key), field(key)); }

double ObjectReader::number_or(const std::string& key, double fallback) {
  const Json* v = find(key);
  return v ? as_number(*v, field(key)) : fallback;
}

std::int64_t ObjectReader::integer(const std::string& key) {
  return as_integer(at(key), field(key));
}

std::int64_t ObjectReader::integer_or(const std::string& key, std::int64_t fallback) {
  const Json* v = find(key);
  return v ? as_integer(*v, field(key)) : fallback;
}

std::string ObjectReader::string(const std::string& key) {
  const Json& v = at(key);
  if (!v.is_string()) fail_field(field(key), "expected a string");
  return v.get<std::string>();
}

std::string ObjectReader::string_or(const std::string& key, const std::string& fallback) {
  return has(key) ? string(key) : fallback;
}

bool ObjectReader::boolean_or(const std::string& key, bool fallback) {
  const Json* v = find(key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail_field(field(key), "expected a boolean");
  return v->get<bool>();
}

void ObjectReader::finish() const {
  for (auto it = object_.begin(); it != object_.end(); ++it) {
    if (!seen_.contains(it.key())) fail_field(field(it.key()), "unknown key");
  }
}

void fail_field(const std::string& field, const std::string& what) {
  throw ValidationError(field + ": " + what);
}

double as_number(const Json& value, const std::string& field) {
  if (!value.is_number()) fail_field(field, "expected a number");
  const double x = value.get<double>();
  if (!std::isfinite(x)) fail_field(field, "must be finite");
  return x;
}

std::int64_t as_integer(const Json& value, const std::string& field) {
  if (!value.is_number_integer()) fail_field(field, "expected an integer");
  return value.get<std::int64_t>();
}

Eigen::VectorXd as_vector(const Json& value, const std::string& field) {
  if (!value.is_array()) fail_field(field, "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(value.size()));
  for (std::size_t i = 0; i < value.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] =
        as_number(value[i], field + "[" + std::to_string(i) + "]");
  }
  return v;
}

Eigen::MatrixXd as_matrix(const Json& value, const std::string& field) {
  if (!value.is_array() || value.empty()) fail_field(field, "expected a non-empty 2-D array");
  const std::size_t rows = value.size();
  if (!value[0].is_array() || value[0].empty()) {
    fail_field(field + "[0]", "expected a non-empty array");
  }
  const std::size_t cols = value[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string row_field = field + "[" + std::to_string(r) + "]";
    Eigen::VectorXd row = as_vector(value[r], row_field);
    if (static_cast<std::size_t>(row.size()) != cols) {
      fail_field(row_field, "expected " + std::to_string(cols) + " entries");
    }
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

std::vector<std::string> as_strings(const Json& value, const std::string& field) {
  if (!value.is_array()) fail_field(field, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (!value[i].is_string()) fail_field(field + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back(value[i].get<std::string>());
  }
  return out;
}

std::vector<int> as_indices(const Json& value, const std::string& field) {
  if (!value.is_array()) fail_field(field, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < value.size(); ++i) {
    out.push_back(static_cast<int>(as_integer(value[i], field + "[" + std::to_string(i) + "]")));
  }
  return out;
}

Json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json matrix_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace cyres
