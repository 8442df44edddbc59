#pragma once

#include <stdexcept>
#include <string>

namespace sslus {

/// Malformed input text (manifest rows, config files).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or unreadable files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration values or an unusable checkpoint.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dataset content that the requested operation cannot use.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unknown key (image id, layer name).
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Training produced a non-finite loss.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sslus
