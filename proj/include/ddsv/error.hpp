#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace ddsv {

// Base for every error raised by the library. The CLI maps InputError
// subclasses to exit code 2 and NumericalError subclasses to exit code 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed CSV / params file. `row` is 1-based including the header, 0 if unknown.
class ParseError : public InputError {
public:
    ParseError(std::string source, std::size_t row, const std::string& what)
        : InputError(source + (row ? ":" + std::to_string(row) : std::string{}) + ": " + what),
          source_(std::move(source)),
          row_(row) {}

    const std::string& source() const noexcept { return source_; }
    std::size_t row() const noexcept { return row_; }

private:
    std::string source_;
    std::size_t row_;
};

class InvalidParameters : public InputError {
public:
    using InputError::InputError;
};

/// F_j(0) + delta <= 0 for some forward used by a swap.
class ShiftInfeasible : public InvalidParameters {
public:
    ShiftInfeasible(std::size_t forward_index, double shifted)
        : InvalidParameters("shift-infeasible: F_" + std::to_string(forward_index) +
                            "(0) + delta = " + std::to_string(shifted) + " <= 0"),
          forward_index_(forward_index) {}

    std::size_t forward_index() const noexcept { return forward_index_; }

private:
    std::size_t forward_index_;
};

/// Closed-form Riccati step hit its log/denominator singularity.
class SingularEvaluation : public NumericalError {
public:
    SingularEvaluation(std::size_t bucket, const std::string& what)
        : NumericalError("singular evaluation in bucket " + std::to_string(bucket) + ": " + what),
          bucket_(bucket) {}

    std::size_t bucket() const noexcept { return bucket_; }

private:
    std::size_t bucket_;
};

class ExpansionInvalid : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InversionError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ContourError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class StiffnessError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class CalibrationFailed : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace ddsv
