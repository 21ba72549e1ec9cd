#pragma once

#include <stdexcept>
#include <string>

namespace lac {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteState : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ObservationSpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BufferUnderfull : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ChecksumMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingMetrics : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lac
