#include "grdr/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "grdr/util.hpp"

namespace grdr {
namespace {

// Smallest n with n * sum_q >= d under the exact floating-point sum.
long iteration_count(int d, double sum_q) {
  long n = static_cast<long>(std::ceil(static_cast<double>(d) / sum_q));
  while (n > 1 && static_cast<double>(n - 1) * sum_q >= d) --n;
  while (static_cast<double>(n) * sum_q < d) ++n;
  return n;
}

QSchedule finalize(Eigen::VectorXd q) {
  QSchedule sched;
  sched.dim = static_cast<int>(q.size());
  sched.expected_depth = q.sum();
  sched.n_iterations = iteration_count(sched.dim, sched.expected_depth);
  sched.cum_mass.resize(sched.dim);
  for (int i = 1; i < sched.dim; ++i) sched.cum_mass[i - 1] = 1.0 - q[i];
  sched.cum_mass[sched.dim - 1] = 1.0;
  sched.q = std::move(q);
  return sched;
}

}  // namespace

std::uint64_t QSchedule::fingerprint_component() const {
  return hash_bytes(q.data(), sizeof(double) * q.size());
}

QSchedule harmonic_schedule(int d) {
  if (d < 1) throw ScheduleError("harmonic_schedule: d must be >= 1");
  Eigen::VectorXd q(d);
  for (int i = 0; i < d; ++i) q[i] = 1.0 / (i + 1);
  return finalize(std::move(q));
}

QSchedule schedule_from_factor(const FactorMatrix& fac) {
  const int d = fac.dim;
  const Eigen::VectorXd& c = fac.col_sq_norms;
  for (int i = 0; i < d; ++i) {
    if (!(c[i] > 0.0))
      throw ScheduleError(
          "schedule_from_factor: column square norm " + std::to_string(i) +
          " is not positive; the factor is singular and has no valid schedule");
    if (i > 0 && c[i] > c[i - 1])
      throw ScheduleError(
          "schedule_from_factor: column square norms increase at index " +
          std::to_string(i) + "; apply permute_decreasing first");
  }
  Eigen::VectorXd q(d);
  for (int i = 0; i < d; ++i) {
    q[i] = std::sqrt(c[i] / c[0]);
    // Guard against rounding in the division/sqrt chain; violations can
    // only be of ulp size since c is nonincreasing.
    if (i > 0 && q[i] > q[i - 1]) q[i] = q[i - 1];
  }
  q[0] = 1.0;
  return finalize(std::move(q));
}

QSchedule explicit_schedule(const Eigen::VectorXd& q) {
  const int d = static_cast<int>(q.size());
  if (d < 1) throw ScheduleError("explicit_schedule: q must be nonempty");
  if (q[0] != 1.0)
    throw ScheduleError("explicit_schedule: q[0] must be exactly 1, got " +
                        format_g17(q[0]));
  for (int i = 1; i < d; ++i)
    if (q[i] > q[i - 1])
      throw ScheduleError("explicit_schedule: q must be nonincreasing; "
                          "violated at index " +
                          std::to_string(i));
  if (!(q[d - 1] > 0.0))
    throw ScheduleError("explicit_schedule: q[d-1] must be positive, got " +
                        format_g17(q[d - 1]));
  return finalize(q);
}

int sample_depth(const QSchedule& sched, double u) {
  // N = i iff q_i < u <= q_{i-1}, i.e. the first i with P(N <= i) > 1 - u.
  const double key = 1.0 - u;
  const double* begin = sched.cum_mass.data();
  const double* end = begin + sched.dim;
  return static_cast<int>(std::upper_bound(begin, end, key) - begin) + 1;
}

int sample_depth(const QSchedule& sched, RngStream& stream) {
  return sample_depth(sched, stream.uniform());
}

}  // namespace grdr
