#pragma once

#include <stdexcept>
#include <string>

namespace hmdetect {

// Base class for every error the library raises on bad input or I/O.
// Anything else escaping the library is an internal error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file contents (bad magic, truncated record, unparsable line).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

[[noreturn]] void throw_validation(const std::string& what);
[[noreturn]] void throw_format(const std::string& what);
[[noreturn]] void throw_io(const std::string& what);

}  // namespace hmdetect
