// Copyright (c) 2026 The poivox Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef POIVOX_ERROR_HPP_
#define POIVOX_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace poivox {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// File missing, unreadable or unwritable.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Container or record structure is malformed (bad RIFF header,
/// unparsable store line, truncated payload, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Well-formed container, but an encoding this library does not handle.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or inconsistent option combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent runtime data: dimension mismatch, duplicate id,
/// empty reference set, zero vector under cosine, ...
class DataError : public Error {
 public:
  using Error::Error;
};

/// An external helper process exceeded its deadline.
class TimeoutError : public Error {
 public:
  using Error::Error;
};

}  // namespace poivox

#endif  // POIVOX_ERROR_HPP_
