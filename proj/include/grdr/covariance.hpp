#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

namespace grdr {

/// Relative PSD tolerance (against the Frobenius norm). Eigenvalues or
/// Cholesky pivots in [-kPsdTol * frob, 0) are clamped to zero during
/// factorization; anything more negative is rejected.
inline constexpr double kPsdTol = 1e-8;

enum class CovarianceFamily { kEigenDecay, kEquicorrelation, kExplicit };

enum class Orientation { kDiagonal, kRandomRotation };

/// A d x d covariance matrix plus metadata on how it was generated.
/// Immutable after construction; safe to share read-only across threads.
struct CovarianceSpec {
  int dim = 0;
  Eigen::MatrixXd entries;  // symmetric: entries(i,j) == entries(j,i) exactly

  CovarianceFamily family = CovarianceFamily::kExplicit;

  // eigen-decay parameters (family == kEigenDecay)
  double gamma = 0.0;
  double lambda1 = 0.0;
  Orientation orientation = Orientation::kDiagonal;
  std::uint64_t rotation_seed = 0;

  // equicorrelation parameter (family == kEquicorrelation)
  double rho = 0.0;

  // symmetry defect of the raw input before symmetrization (kExplicit)
  double ingest_symmetry_residual = 0.0;

  /// Compact description like "eigendecay(d=16;gamma=-3;...)", used in CSV
  /// output and fingerprints.
  std::string source_label() const;

  std::uint64_t fingerprint() const;
};

struct CovarianceDiagnostics {
  double symmetry_residual = 0.0;  // max_ij |M_ij - M_ji|
  double min_eigenvalue = 0.0;
  double trace = 0.0;
  bool symmetric = false;
  bool positive_semi_definite = false;
  bool ok() const { return symmetric && positive_semi_definite; }
};

/// M with eigenvalues lambda_i = lambda1 * i^gamma, i = 1..d. Diagonal
/// orientation places them on the diagonal; RandomRotation conjugates by a
/// seeded Haar-random orthogonal matrix. Each i^gamma is computed as the
/// square of i^(gamma/2) so that sqrt-based schedules recover i^(gamma/2)
/// exactly.
CovarianceSpec make_eigen_decay(int d, double gamma, double lambda1,
                                Orientation orientation = Orientation::kDiagonal,
                                std::uint64_t rotation_seed = 0);

/// Unit diagonal, constant off-diagonal correlation rho. Requires
/// -1/(d-1) <= rho <= 1 so the matrix stays positive semi-definite.
CovarianceSpec make_equicorrelation(int d, double rho);

/// Wraps a user-supplied matrix, symmetrized as (M + M^T)/2 with the raw
/// symmetry defect recorded. Indefinite input is accepted here and flagged
/// by validate(); factorizations reject it.
CovarianceSpec make_explicit(const Eigen::MatrixXd& m);

/// Pure diagnostic: symmetry residual, smallest eigenvalue, trace, and
/// whether the PSD/symmetry invariants hold.
CovarianceDiagnostics validate(const CovarianceSpec& spec);

/// Seeded Haar-distributed orthogonal matrix: QR of a standard Gaussian
/// matrix with the signs of the R diagonal fixed.
Eigen::MatrixXd haar_orthogonal(int d, std::uint64_t seed);

}  // namespace grdr
