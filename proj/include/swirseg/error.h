#pragma once

#include <stdexcept>
#include <string>

namespace swirseg {

// Error categories map one-to-one onto CLI exit codes (see tools/swirseg_cli.cc).

// Missing, unreadable or garbled input files.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition or configuration validation failure.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No neighborhood produced an acceptable registration.
class RegistrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal invariant was found broken at runtime.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace swirseg
