#pragma once

#include <stdexcept>
#include <string>

namespace sernet {

// Single exception type with a machine-checkable kind, so callers and tests
// can distinguish error classes without a zoo of exception hierarchies.
class Error : public std::runtime_error {
 public:
  enum class Kind {
    format,         // malformed file contents
    unsupported,    // recognized but unsupported format/rate
    argument,       // bad argument value
    empty_input,    // empty clip/file/matrix where data is required
    schema,         // manifest/config schema violation
    shape,          // tensor shape mismatch
    config,         // invalid model/run configuration
    compatibility,  // checkpoint/config hash mismatch
    infeasible,     // split cannot be constructed
  };

  Error(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace sernet
