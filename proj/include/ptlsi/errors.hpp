#pragma once

#include <stdexcept>
#include <string>

namespace ptlsi {

// Bad input: shapes, non-finite values, out-of-range parameters.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical problems that make a quantity undefined for this data
// (singular Gram matrix, vanishing variance, zero-mass region).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularSelectionError : public NumericError {
public:
    using NumericError::NumericError;
};

class DegenerateVarianceError : public NumericError {
public:
    using NumericError::NumericError;
};

class RegionMassError : public NumericError {
public:
    using NumericError::NumericError;
};

class SolverError : public NumericError {
public:
    SolverError(const std::string& what, double residual, int iterations)
        : NumericError(what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

// The line sweep could not make progress, or the KKT region computed at a
// query point does not contain that point.
class SearchError : public NumericError {
public:
    using NumericError::NumericError;
};

} // namespace ptlsi
