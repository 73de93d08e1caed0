#pragma once

#include <stdexcept>

namespace via {

/// Malformed or out-of-range experiment configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A state integration produced a non-finite value.
struct IntegrationDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The virtual rig never reached a steady operating point.
struct NoSteadyState : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A measurement set cannot be turned into an estimate (e.g. stalled rig).
struct MeasurementInvalid : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Finite-difference Jacobians came out non-finite.
struct LinearizationFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace via
