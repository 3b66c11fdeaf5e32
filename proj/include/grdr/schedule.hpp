#pragma once

#include <cstdint>
#include <stdexcept>

#include <Eigen/Core>

#include "grdr/factor.hpp"
#include "grdr/rng.hpp"

namespace grdr {

class ScheduleError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Resampling-probability schedule. q_i = P(N > i) for the per-iteration
/// redraw depth N in {1..d}, with 1 = q_0 >= q_1 >= ... >= q_{d-1} > 0.
struct QSchedule {
  int dim = 0;
  Eigen::VectorXd q;
  /// cum_mass[i-1] = P(N <= i) for i = 1..d; the last entry is exactly 1.
  Eigen::VectorXd cum_mass;
  /// ceil(d / sum(q)); the chain length that keeps the expected work of a
  /// full pass at O(d^2).
  long n_iterations = 1;
  double expected_depth = 0.0;  // E(N) = sum(q)

  std::uint64_t fingerprint_component() const;
};

/// q_i = 1/(i+1).
QSchedule harmonic_schedule(int d);

/// q_{i-1} = sqrt((A^T A)_ii / (A^T A)_11). Requires the column square
/// norms to be strictly positive and nonincreasing (apply
/// permute_decreasing first if they are not sorted).
QSchedule schedule_from_factor(const FactorMatrix& fac);

/// Validates a user-supplied q vector against the monotonicity constraint
/// exactly, rejecting q_0 != 1, non-monotone entries, and q_{d-1} <= 0.
QSchedule explicit_schedule(const Eigen::VectorXd& q);

/// Inverse-CDF draw of the depth N: N = i iff q_i < u <= q_{i-1} (with
/// q_d = 0), so small u maps to deep redraws. Binary search over cum_mass.
int sample_depth(const QSchedule& sched, double u);
int sample_depth(const QSchedule& sched, RngStream& stream);

}  // namespace grdr
