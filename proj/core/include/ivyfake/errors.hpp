// Copyright 2026 The ivyfake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ivyfake {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem or stream failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file, line, or value.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Argument outside an operation's domain (non-positive sizes, bad ratios).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A prompt could not be rendered with the given arguments.
class TemplateError : public Error {
 public:
  using Error::Error;
};

/// A stratum holds fewer samples than the requested quota.
class ShortfallError : public Error {
 public:
  ShortfallError(std::string stratum, std::size_t available, std::size_t requested);

  const std::string& stratum() const noexcept { return stratum_; }
  std::size_t available() const noexcept { return available_; }
  std::size_t requested() const noexcept { return requested_; }

 private:
  std::string stratum_;
  std::size_t available_;
  std::size_t requested_;
};

/// A checkpoint does not belong to the manifest/config it is resumed against.
class CheckpointMismatch : public Error {
 public:
  using Error::Error;
};

/// Backend call failed at the transport level (connection, timeout, HTTP status).
class TransportError : public Error {
 public:
  TransportError(const std::string& what, bool retryable, int http_status = 0)
      : Error(what), retryable_(retryable), http_status_(http_status) {}

  bool retryable() const noexcept { return retryable_; }
  int http_status() const noexcept { return http_status_; }

 private:
  bool retryable_;
  int http_status_;
};

/// The backend never produced a compliant verdict within the attempt budget.
class UndeterminedError : public Error {
 public:
  using Error::Error;
};

/// Media exceeds configured limits; raised before any network traffic.
class MediaLimitError : public Error {
 public:
  using Error::Error;
};

}  // namespace ivyfake
