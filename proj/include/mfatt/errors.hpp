#pragma once

#include <stdexcept>
#include <string>

namespace mfatt {

/// Base class for all domain errors thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// vee() received a matrix whose symmetric part exceeds tolerance.
struct NonSkewInput : Error {
    using Error::Error;
};

/// Concentration parameter outside the guarded evaluation domain.
struct OverflowGuard : Error {
    using Error::Error;
};

/// Moment matrix has no matrix Fisher distribution realizing it.
struct NonAttainableMoment : Error {
    using Error::Error;
};

/// Iterative solver exhausted its iteration budget.
struct NoConvergence : Error {
    using Error::Error;
};

/// Rejection sampler would run below the configured acceptance bound.
struct EfficiencyGuard : Error {
    using Error::Error;
};

/// A direction was requested from a (near-)zero mean vector.
struct ZeroMean : Error {
    using Error::Error;
};

/// Measurement noise model not supported by the requested update path.
struct IncompatibleNoiseModel : Error {
    using Error::Error;
};

/// Wahba problem is degenerate: reference vectors span less than a plane.
struct CollinearReferences : Error {
    using Error::Error;
};

/// Kalman innovation covariance is numerically singular.
struct SingularInnovation : Error {
    using Error::Error;
};

/// Scenario/CLI configuration is invalid.
struct ConfigError : Error {
    using Error::Error;
};

} // namespace mfatt
