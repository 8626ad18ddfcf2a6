#pragma once

// Shared vocabulary for the randomized robust subspace recovery library:
// matrix/index aliases, the error hierarchy and seed derivation.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsr {

using Index = Eigen::Index;
using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexList = std::vector<Index>;
using Rng = std::mt19937_64;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied argument violates an operation's precondition.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// The input is structurally degenerate (zero matrix, empty basis, ...).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// An internal consistency check failed.
class InternalError : public Error {
 public:
  using Error::Error;
};

/// A pipeline ran but could not produce a usable answer (e.g. no inliers).
class RecoveryFailure : public Error {
 public:
  using Error::Error;
};

/// An iterative solver hit its iteration or time cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidParameter(message);
}

inline bool all_finite(const DenseMatrix& m) { return m.allFinite(); }

inline void require_finite(const DenseMatrix& m, const std::string& what) {
  if (!m.allFinite()) throw InvalidParameter(what + ": non-finite entry");
}

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for sub-stream `a` (and optionally `b`) of a base seed.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                    std::uint64_t b = 0) noexcept {
  return mix_seed(mix_seed(mix_seed(base) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

inline DenseMatrix gaussian_matrix(Index rows, Index cols, double sigma, Rng& rng) {
  std::normal_distribution<double> normal(0.0, sigma);
  DenseMatrix m(rows, cols);
  // Column-major fill order is part of the determinism contract.
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

}  // namespace rsr
