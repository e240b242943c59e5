// Copyright 2026 The otfdh Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace otfdh {

// Caller passed an argument that violates a documented precondition.
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

// A randomized search (prime, primitive root, key) ran out of its candidate
// budget. Retrying with a different seed is legitimate.
class GenerationError : public std::runtime_error {
 public:
  explicit GenerationError(const std::string& what) : std::runtime_error(what) {}
};

// A protocol-level rule was violated (degenerate DH value, wrong-phase call).
class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

// Payload does not fit the one-time pad currently in force.
class SizeError : public std::runtime_error {
 public:
  explicit SizeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace otfdh
