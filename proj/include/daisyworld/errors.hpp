#pragma once

#include <stdexcept>
#include <string>

namespace daisyworld {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    /// Short machine-readable category used by the CLI error line.
    [[nodiscard]] virtual const char* kind() const noexcept { return "numerical"; }
};

/// Bad user input: invalid parameters, unknown labels, violated preconditions.
class ConfigError : public Error {
public:
    using Error::Error;
    [[nodiscard]] const char* kind() const noexcept override { return "config"; }
};

/// A state or argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
    [[nodiscard]] const char* kind() const noexcept override { return "domain"; }
};

/// Local temperature radicand went negative (q too large for this L).
class NonphysicalHeatTransfer : public DomainError {
public:
    using DomainError::DomainError;
    [[nodiscard]] const char* kind() const noexcept override { return "nonphysical_heat_transfer"; }
};

/// Adaptive step size collapsed below the representable minimum.
class StiffnessError : public Error {
public:
    using Error::Error;
    [[nodiscard]] const char* kind() const noexcept override { return "stiffness"; }
};

/// A bracketed search was given an interval that does not bracket.
class BracketError : public Error {
public:
    enum class Reason { invalid, always_tracks, always_tips, no_root };

    BracketError(Reason reason, const std::string& what) : Error(what), reason_(reason) {}

    [[nodiscard]] Reason reason() const noexcept { return reason_; }
    [[nodiscard]] const char* kind() const noexcept override {
        switch (reason_) {
            case Reason::always_tracks: return "always_tracks";
            case Reason::always_tips: return "always_tips";
            case Reason::no_root: return "no_root";
            default: return "bracket";
        }
    }

private:
    Reason reason_;
};

/// Iterative method failed to converge (Newton, attractor search, grids).
class ConvergenceError : public Error {
public:
    using Error::Error;
    [[nodiscard]] const char* kind() const noexcept override { return "convergence"; }
};

}  // namespace daisyworld
