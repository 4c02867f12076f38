#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace constest {

// Base for all recoverable runtime failures raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

// Caller broke a documented precondition (invalid span, mismatched test sets).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }
  const char* kind() const noexcept override { return "parse_error"; }

 private:
  std::size_t offset_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config_error"; }
};

// Malformed or inconsistent input data (bad TSV row, marker tokens in a corpus, bad JSONL).
class DataError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "data_error"; }
};

class FormatError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "format_error"; }
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
  const char* kind() const noexcept override { return "version_error"; }
};

class SpawnError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "spawn_error"; }
};

class ProtocolError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "protocol_error"; }
};

class TimeoutError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "timeout_error"; }
};

}  // namespace constest
