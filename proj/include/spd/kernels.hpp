#pragma once

// Distance-preservation objective and its Euclidean gradient, summed over
// (owner, neighbor) pairs. Two schedules are provided:
//
//   * serial_*   : reference implementation, one pair at a time, no caching.
//   * parallel_* : per-sample projections cached once per evaluation, pairs
//                  evaluated with OpenMP and reduced in a fixed order.
//
// The parallel result is bit-identical across runs and thread counts.

#include <cstddef>
#include <span>
#include <string>

#include "spd/linalg.hpp"

namespace spd::kernels {

/// One |J(X, M) - J(U^T X U, U^T M U)| term.
struct PairTerm {
  std::size_t sample;  // index into ProblemView::samples
  std::size_t owner;   // index into ProblemView::means
  std::size_t slot;    // position j inside the owner's neighbor list
  double original;     // J(X, M) in the ambient space
};

/// Pairs are grouped by owner: owner i spans [owner_offsets[i], owner_offsets[i+1]).
struct ProblemView {
  std::span<const Matrix> samples;
  std::span<const Matrix> means;
  std::span<const PairTerm> pairs;
  std::span<const std::size_t> owner_offsets;
};

struct Evaluation {
  double objective = 0.0;
  Matrix gradient;
};

/// Thrown when U^T X U (or U^T M U, or their midpoint) is not positive definite.
class SingularityError : public NumericalError {
 public:
  SingularityError(std::size_t owner, std::size_t slot, const std::string& what);

  std::size_t owner() const { return owner_; }
  std::size_t slot() const { return slot_; }

 private:
  std::size_t owner_;
  std::size_t slot_;
};

/// J(A, B) given precomputed log-determinants of A and B.
double jbld_raw(const Matrix& a, const Matrix& b, double logdet_a, double logdet_b);

double serial_objective(const ProblemView& problem, const Matrix& u);
Evaluation serial_evaluate(const ProblemView& problem, const Matrix& u);

double parallel_objective(const ProblemView& problem, const Matrix& u);
Evaluation parallel_evaluate(const ProblemView& problem, const Matrix& u);

/// sgn with sgn(0) = 0.
inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace spd::kernels
