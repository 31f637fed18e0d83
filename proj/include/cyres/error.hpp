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

#ifndef CYRES_ERROR_HPP_
#define CYRES_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace cyres {

// Base of every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed model, scenario or argument. The CLI maps it to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A well-formed problem with no solution (attack cannot be realized, LP
// infeasible, search budget exhausted). Exit code 3.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown: singular systems, failed saddle checks. Exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace cyres

#endif  // CYRES_ERROR_HPP_
