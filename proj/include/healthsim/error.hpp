#ifndef HEALTHSIM_ERROR_HPP
#define HEALTHSIM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace healthsim {

/// Raised when user-supplied inputs (tables, parameters, configuration)
/// violate a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation cannot proceed on otherwise valid inputs
/// (e.g. a relative risk pushes a probability row outside [0, 1]).
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <typename E = ValidationError>
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw E(msg);
}

}  // namespace detail
}  // namespace healthsim

#endif  // HEALTHSIM_ERROR_HPP
