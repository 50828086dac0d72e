#ifndef XCFLAB_ERRORS_HPP
#define XCFLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace xcflab {

/// Input violates an operation's domain (non-SPD metric, bad frame, ...).
class DomainError : public std::invalid_argument {
public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// A flow state left the negative-sectional-curvature regime in which the
/// cross-curvature family is defined.
class CurvatureSignError : public std::runtime_error {
public:
  explicit CurvatureSignError(const std::string& what) : std::runtime_error(what) {}
};

/// Adaptive step size underflowed; the problem is stiff or singular at the
/// requested tolerance.
class StiffnessError : public std::runtime_error {
public:
  explicit StiffnessError(const std::string& what) : std::runtime_error(what) {}
};

/// A functional of the dual Einstein tensor was requested outside the
/// positive-definite regime (det P <= 0).
class RegimeError : public std::runtime_error {
public:
  explicit RegimeError(const std::string& what) : std::runtime_error(what) {}
};

/// Decay-rate fit window reaches below the numerical floor.
class UnderflowError : public std::runtime_error {
public:
  explicit UnderflowError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace xcflab

#endif
