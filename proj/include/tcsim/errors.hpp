#pragma once

#include <stdexcept>
#include <string>

namespace tcsim {

// Config text that does not parse or violates a type invariant. The message
// names the offending field/invariant.
class scenario_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Step-size preconditions, NaN amplitudes, non-converging integrations.
class integration_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tcsim
