#pragma once

#include <stdexcept>
#include <string>

namespace sufstat {

// Raised for every contract violation: bad input data, shape mismatches,
// malformed documents.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sufstat
