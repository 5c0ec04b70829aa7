#pragma once

#include <stdexcept>
#include <string>

namespace dronav {

/// Base class for every recoverable error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dronav
