#pragma once

#include <stdexcept>
#include <string>

namespace rvmret {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A trajectory or probe left the declared domain of a field.
class DomainExceeded : public Error {
public:
    using Error::Error;
};

/// Fixed-step integration could not meet the requested ODE tolerance.
class ToleranceNotMet : public Error {
public:
    using Error::Error;
};

class NonUnitDirection : public Error {
public:
    using Error::Error;
};

/// The (2 pi / |x|) light-cone reduction is singular at x = 0.
class SingularAtOrigin : public Error {
public:
    using Error::Error;
};

/// Weighted light-cone integral queried at or below its convergence threshold.
class NonConvergent : public Error {
public:
    using Error::Error;
};

class InfeasibleBudget : public Error {
public:
    using Error::Error;
};

/// Successive Picard differences grew for two consecutive iterates.
class NonContraction : public Error {
public:
    using Error::Error;
};

class IllConditioned : public Error {
public:
    using Error::Error;
};

/// A density was nonzero on the boundary of the momentum quadrature box.
class QuadratureDomainViolation : public Error {
public:
    using Error::Error;
};

/// The momentum drift bound used for support-adapted quadrature was exceeded.
class SupportMarginExceeded : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace rvmret
