#pragma once

#include <stdexcept>
#include <string>

namespace sgpo {

// Invalid tasks, parameters, configs, malformed input files. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated numeric contract at runtime: divergence guards, failed lemma or
// estimator checks surfaced as exceptions. CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem trouble, always with the offending path in the message. CLI exit code 4.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sgpo
