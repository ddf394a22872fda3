#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace storygraph {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `offset` is the byte position reported by the
/// JSON reader (npos when not applicable); `raw` keeps the offending payload
/// so callers can log it.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset = std::string::npos,
             std::string raw = {})
      : Error(what), offset_(offset), raw_(std::move(raw)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::size_t offset_;
  std::string raw_;
};

/// Well-formed JSON that does not follow the expected document shape.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Transport, HTTP or rate-limit failure talking to a model provider.
class BackendError : public Error {
 public:
  using Error::Error;
};

/// A graph input that violates a hard structural precondition.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Graph database failure. Messages never carry credentials.
class SinkError : public Error {
 public:
  using Error::Error;
};

}  // namespace storygraph
