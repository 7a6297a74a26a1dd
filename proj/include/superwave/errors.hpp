#pragma once

#include <stdexcept>
#include <string>

namespace superwave {

// All library failures derive from Error so callers (the harness in
// particular) can contain them per grid point.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

// A radiative diffraction order may lie outside the enumeration window.
class WindowTooSmallError : public Error {
public:
    using Error::Error;
};

// On-site evanescent lattice sums do not converge.
class DivergentKernelError : public Error {
public:
    using Error::Error;
};

// The symmetric layer mode is not an eigenvector of the interlayer kernel,
// so the single-mode interface reduction does not apply.
class NotAnEigenmodeError : public Error {
public:
    NotAnEigenmodeError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class SingularMatrixError : public Error {
public:
    using Error::Error;
};

class MemoryBudgetError : public Error {
public:
    using Error::Error;
};

// The reflectivity maximum sits on the edge of the detuning window.
class ResonanceNotBracketedError : public Error {
public:
    ResonanceNotBracketedError(const std::string& what, double edge)
        : Error(what), edge_(edge) {}
    double edge() const noexcept { return edge_; }

private:
    double edge_;
};

class OverlapContractError : public Error {
public:
    using Error::Error;
};

class GridTooLargeError : public Error {
public:
    using Error::Error;
};

class InsufficientPointsError : public Error {
public:
    using Error::Error;
};

}  // namespace superwave
