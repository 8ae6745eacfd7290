// Copyright 2026 The abspose Authors
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

namespace abspose {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidMeasurement : public Error {
 public:
  using Error::Error;
};

class DegenerateConfiguration : public Error {
 public:
  using Error::Error;
};

class BehindCamera : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition (shape or range mismatch).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class CorruptModel : public Error {
 public:
  using Error::Error;
};

class NoEvidence : public Error {
 public:
  using Error::Error;
};

class HypothesisFailure : public Error {
 public:
  using Error::Error;
};

class UndefinedOcclusion : public Error {
 public:
  using Error::Error;
};

/// Malformed or missing dataset files.
class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace abspose
