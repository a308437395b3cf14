#pragma once

#include <stdexcept>
#include <string>

namespace tabgan {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed CSV input or values that violate the schema at ingestion.
class CsvError : public Error {
 public:
  using Error::Error;
};

// Schema construction or sidecar-file problems.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Text that cannot be parsed into the expected structure (JSON arrays,
// pair lists, tagged blocks).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration: bad flag values, missing environment variables,
// out-of-range parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Transport, auth, or malformed-response failures from a chat provider.
class ProviderError : public Error {
 public:
  ProviderError(const std::string& message, int attempts = 1)
      : Error(message), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_ = 1;
};

// Every chunk of a generation batch failed, or a sampling retry budget
// was exhausted.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// Precondition violations on library operations.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace tabgan
