// Copyright 2026 The tabnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TABNN_ERROR_HPP
#define TABNN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace tabnn {

// Every failure raised by the core library derives from Error. The C API maps
// the concrete type onto a status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file contents (CSV rows, IDX headers, checkpoint/netlist schema).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Input that parsed but violates a domain invariant (labels out of range,
// sample counts disagreeing between files).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Inconsistent hyperparameters or architecture.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss during training.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch)
      : Error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

class CompileError : public Error {
 public:
  using Error::Error;
};

class SimulationError : public Error {
 public:
  using Error::Error;
};

// Netlist and checkpoint disagree on the model hash.
class HashMismatchError : public Error {
 public:
  using Error::Error;
};

// Broken internal invariant; indicates a bug rather than bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace tabnn

#endif  // TABNN_ERROR_HPP
