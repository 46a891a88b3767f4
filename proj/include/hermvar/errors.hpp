#pragma once

#include <stdexcept>
#include <string>

namespace hermvar {

/// A documented precondition of a library operation does not hold
/// (wrong regime, out-of-range exponent, non-divisible grid, ...).
class PreconditionError : public std::domain_error {
 public:
  explicit PreconditionError(const std::string& what) : std::domain_error(what) {}
};

/// Circulant embedding produced an eigenvalue below the clamping tolerance.
class EmbeddingError : public std::runtime_error {
 public:
  explicit EmbeddingError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
inline void require(bool ok, const std::string& what) {
  if (!ok) throw PreconditionError(what);
}
}  // namespace detail

}  // namespace hermvar
