// Copyright 2026 The nnlogic Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace nnlogic {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model, netlist or dataset violates one of its structural invariants.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Vector or bus dimensions do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A file could not be read or parsed.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// The combinational part of a netlist contains a loop.
class CycleError : public Error {
 public:
  using Error::Error;
};

/// Configuration or argument outside its documented domain.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace nnlogic
