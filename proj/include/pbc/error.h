// Copyright 2026 The pbc-rerank Authors
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

namespace pbc {

// Base of every error the library throws for bad input or bad state.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed feature / score / ground-truth / ranking file.
class LoadError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A parameter or an argument violates a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IndexVersionError : public Error {
 public:
  using Error::Error;
};

class IndexCorruptError : public Error {
 public:
  using Error::Error;
};

// The index was built from a different gallery than the one supplied.
class FingerprintMismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace pbc
