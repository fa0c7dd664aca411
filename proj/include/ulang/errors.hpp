#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ulang {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Gradient requested exactly on a discontinuity surface.
struct OnDiscontinuity : Error {
    using Error::Error;
};

// A chain state picked up NaN/Inf, usually from a stepsize above the guard.
struct NonFinite : Error {
    NonFinite(const std::string& what, std::int64_t step, std::uint64_t chain)
        : Error(what + " (step " + std::to_string(step) + ", chain " + std::to_string(chain) + ")"),
          step_index(step),
          chain_id(chain) {}
    std::int64_t step_index;
    std::uint64_t chain_id;
};

struct OutOfRange : Error {
    using Error::Error;
};

struct OutOfDomain : Error {
    using Error::Error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct MissingCheckpoints : Error {
    using Error::Error;
};

struct NonPositiveValue : Error {
    using Error::Error;
};

struct NumericalUnderflow : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct ReferenceUnavailable : Error {
    using Error::Error;
};

struct ReferenceInconsistent : Error {
    using Error::Error;
};

struct InsufficientBurnIn : Error {
    using Error::Error;
};

}  // namespace ulang
