// Copyright 2026 The qrsnap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace qrsnap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition was violated (bad shape, out-of-range argument, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A file or byte stream does not follow the expected layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// The file system refused a read or write.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A run configuration key or value is invalid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qrsnap
