#pragma once

#include <stdexcept>
#include <string>

namespace matconc {

/// Input violates a documented precondition (shape, sign, normalization, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A scalar map was evaluated outside its domain, e.g. log of a negative eigenvalue.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace matconc
