#pragma once

#include <stdexcept>
#include <string>

namespace vcmbench {

// Bad input data: malformed files, violated preconditions, inconsistent sets.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An external encoder/decoder could not be run or exited with an error.
class CodecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Command-line misuse. Only raised by the CLI layer.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vcmbench
