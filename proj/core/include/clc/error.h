#pragma once

#include <stdexcept>
#include <string>

namespace clc {

// Bad user input: malformed files, unknown names, invalid arguments.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite losses and other numerical failures during computation.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace clc
