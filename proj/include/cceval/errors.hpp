#pragma once

#include <stdexcept>
#include <string>

namespace cceval {

// Error categories. The CLI maps them to exit codes: InputError -> 2,
// DegenerateError -> 3, GamutError -> 4. Everything derives from
// std::runtime_error so library users can catch broadly if they prefer.

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GamutError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// -- input errors -----------------------------------------------------------

struct ParseError : InputError {
    using InputError::InputError;
};

struct MissingFile : InputError {
    using InputError::InputError;
};

struct InvariantViolation : InputError {
    using InputError::InputError;
};

struct ShapeMismatch : InputError {
    using InputError::InputError;
};

struct DimensionMismatch : InputError {
    using InputError::InputError;
};

struct MismatchedKeys : InputError {
    using InputError::InputError;
};

struct InsufficientData : InputError {
    using InputError::InputError;
};

struct NoOverlap : InputError {
    using InputError::InputError;
};

struct EmptyMask : InputError {
    using InputError::InputError;
};

struct MissingCompetitor : InputError {
    using InputError::InputError;
};

// -- degenerate-data errors -------------------------------------------------

struct AllZeroImage : DegenerateError {
    using DegenerateError::DegenerateError;
};

struct DegenerateEstimate : DegenerateError {
    using DegenerateError::DegenerateError;
};

struct ZeroChannelIlluminant : DegenerateError {
    using DegenerateError::DegenerateError;
};

struct DegenerateAxis : DegenerateError {
    using DegenerateError::DegenerateError;
};

struct ZeroVariance : DegenerateError {
    using DegenerateError::DegenerateError;
};

struct ZeroSd : DegenerateError {
    using DegenerateError::DegenerateError;
};

struct ZeroCeiling : DegenerateError {
    using DegenerateError::DegenerateError;
};

struct ZeroMean : DegenerateError {
    using DegenerateError::DegenerateError;
};

struct DegenerateInputs : DegenerateError {
    using DegenerateError::DegenerateError;
};

// -- gamut errors -----------------------------------------------------------

struct OutOfGamut : GamutError {
    using GamutError::GamutError;
};

} // namespace cceval
