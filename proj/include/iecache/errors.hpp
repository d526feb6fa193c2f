// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace iecache {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Gateway errors. These are the only errors that abort an agent run.
class GatewayError : public Error {
 public:
  using Error::Error;
};

class TransportError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class FixtureExhausted : public GatewayError {
 public:
  FixtureExhausted() : GatewayError("scripted backend: fixture exhausted") {}
};

class AuthMissing : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class FixtureParseError : public Error {
 public:
  FixtureParseError(std::size_t line, std::size_t position, const std::string& what)
      : Error("fixture line " + std::to_string(line) + ", position " + std::to_string(position) +
              ": " + what),
        line_(line),
        position_(position) {}

  std::size_t line() const { return line_; }
  std::size_t position() const { return position_; }

 private:
  std::size_t line_;
  std::size_t position_;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class SchemaParseError : public Error {
 public:
  using Error::Error;
};

class RecordParseError : public Error {
 public:
  using Error::Error;
};

class MalformedAction : public Error {
 public:
  using Error::Error;
};

class DatasetFormatError : public Error {
 public:
  DatasetFormatError(std::size_t line, const std::string& what)
      : Error("dataset line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DuplicateId : public Error {
 public:
  explicit DuplicateId(const std::string& id) : Error("duplicate task id: " + id), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class AdapterError : public Error {
 public:
  AdapterError(const std::string& record_id, const std::string& what)
      : Error("record " + record_id + ": " + what), record_id_(record_id) {}
  const std::string& record_id() const { return record_id_; }

 private:
  std::string record_id_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Collects every violated invariant of a trace.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "trace validation failed:";
    for (const auto& s : v) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> violations_;
};

}  // namespace iecache
