#pragma once

#include <stdexcept>
#include <string>

namespace kdvg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// e^{σ|ξ|} weighting would leave the representable range.
///
/// Carries the largest σ for which every weighted coefficient of the field
/// stays representable (the "certifiable σ").
class OverflowError : public Error {
public:
    OverflowError(const std::string& what, double certifiable_sigma)
        : Error(what), certifiable_sigma_(certifiable_sigma) {}

    double certifiable_sigma() const noexcept { return certifiable_sigma_; }

private:
    double certifiable_sigma_;
};

/// The periodic surrogate stopped being a faithful model of the line problem.
class DomainTooSmall : public Error {
public:
    DomainTooSmall(const std::string& what, double time)
        : Error(what), time_(time) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Time stepping produced non-finite values.
class SolverDiverged : public Error {
public:
    SolverDiverged(const std::string& what, double last_valid_time)
        : Error(what), last_valid_time_(last_valid_time) {}

    double last_valid_time() const noexcept { return last_valid_time_; }

private:
    double last_valid_time_;
};

/// Spectral or space-time resolution is insufficient for the request.
class ResolutionError : public Error {
public:
    using Error::Error;
};

/// Requested dyadic configuration is outside the support conditions.
class VanishingConfiguration : public Error {
public:
    using Error::Error;
};

}  // namespace kdvg
