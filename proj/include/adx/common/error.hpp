#pragma once

#include <stdexcept>
#include <string>

namespace adx {

// Root of every error this library throws. Modules derive their own
// variants so callers can catch at whatever granularity they need.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace adx
