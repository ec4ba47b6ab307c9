/*
 * Copyright 2026 The dpofl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef DPOFL_ERRORS_HPP_
#define DPOFL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace dpofl {

// Bad caller input: dimensions, budgets, out-of-range indices.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An internal identity that must hold by construction did not. Carries the
// name of the violated invariant so reports can point at it.
class InvariantViolation : public std::runtime_error {
 public:
  InvariantViolation(std::string invariant, const std::string& detail)
      : std::runtime_error(invariant + ": " + detail),
        invariant_(std::move(invariant)) {}

  const std::string& invariant() const { return invariant_; }

 private:
  std::string invariant_;
};

// Malformed or inconsistent configuration file / flags.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dpofl

#endif  // DPOFL_ERRORS_HPP_
