// Copyright 2026 The wavit Authors
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

namespace wavit {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes disagree (plane sizes, matrix inner dims, tensor shapes).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A configuration is invalid before any data is touched
/// (divisibility of image dims, head count, gate threshold).
class ConfigError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

/// Zero norms, all-masked softmax rows, non-finite values.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Token groups fed to the encoder out of coarse-to-fine order.
class SequencingError : public Error {
public:
    using Error::Error;
};

/// Malformed or truncated files, unreadable paths.
class FormatError : public Error {
public:
    using Error::Error;
};

} // namespace wavit
