#pragma once

#include <stdexcept>
#include <string>

namespace pedsim {

// Base for every failure the library reports. Callers that only care about
// "did the operation succeed" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace pedsim
