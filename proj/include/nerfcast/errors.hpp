// Copyright 2026 the nerfcast authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace nerfcast {

// Bad user input: malformed arguments, shape mismatches, invalid configs.
// The CLI maps this to exit code 2.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Failure during a training/distillation run (NaN losses etc). Exit code 3.
class TrainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Checkpoint / file IO failures: bad magic, checksum, missing files. Exit code 4.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace nerfcast
