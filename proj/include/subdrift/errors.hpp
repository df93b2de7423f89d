#pragma once

#include <stdexcept>

namespace subdrift {

/// Input violates an operation's precondition (bad parameter, n(x) < 1, ...).
class contract_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The kernel or rate function lacks a capability the operation needs
/// (exact expectation, finite matrix, derivative metadata).
class capability_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Parameters fall outside the hypotheses of the result being applied.
/// Not a failure of the chain under study.
class scope_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A sampler produced a state outside its declared state space.
class state_space_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace subdrift
