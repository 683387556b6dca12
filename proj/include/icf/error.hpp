#pragma once

#include <stdexcept>
#include <string>

namespace icf {

// Raised for malformed inputs: unreadable files, schema violations, broken
// invariants, inconsistent configuration.  The CLI maps this to exit code 2;
// any other exception maps to exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace icf
