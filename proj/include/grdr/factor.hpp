#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "grdr/covariance.hpp"

namespace grdr {

enum class FactorConstruction { kCholesky, kPca, kPermuted };

class NotPsdError : public std::runtime_error {
 public:
  NotPsdError(const std::string& what, int index)
      : std::runtime_error(what), index_(index) {}
  /// Pivot or eigenvalue index (0-based) that violated positivity.
  int index() const { return index_; }

 private:
  int index_;
};

/// A factor A with A A^T = M, tagged with its construction and the cached
/// column square norms (A^T A)_ii. Immutable after construction.
struct FactorMatrix {
  int dim = 0;
  Eigen::MatrixXd entries;  // A
  FactorConstruction construction = FactorConstruction::kCholesky;
  // Underlying construction and column map when construction == kPermuted:
  // column j of this factor is column permutation[j] of the base factor.
  FactorConstruction base = FactorConstruction::kCholesky;
  std::vector<int> permutation;  // empty means identity

  Eigen::VectorXd col_sq_norms;  // (A^T A)_ii

  // PCA only: spectral data of M, eigenvalues nonincreasing. For PCA
  // factors col_sq_norms is the eigenvalue vector itself (A^T A = Lambda).
  std::optional<Eigen::VectorXd> eigenvalues;
  std::optional<Eigen::MatrixXd> eigenvectors;

  std::uint64_t source_fingerprint = 0;  // fingerprint of the CovarianceSpec

  std::string construction_label() const;
  std::uint64_t fingerprint_component() const;
};

/// Lower-triangular Cholesky factor. Pivots within the PSD tolerance of
/// zero produce a skipped (all-zero) column, so exactly singular matrices
/// factor cleanly; pivots below -kPsdTol*||M||_F raise NotPsdError.
FactorMatrix cholesky_factor(const CovarianceSpec& spec);

/// Spectral factor A = Q sqrt(Lambda) with eigenvalues sorted nonincreasing
/// and eigenvector signs fixed (largest-magnitude entry positive).
/// Eigenvalues in [-kPsdTol*||M||_F, 0) are clamped to zero.
FactorMatrix pca_factor(const CovarianceSpec& spec);

/// Column permutation B with B_ij = A_{i,pi(j)} where pi sorts the column
/// square norms into nonincreasing order (stable on ties). B B^T = A A^T.
FactorMatrix permute_decreasing(const FactorMatrix& fac);

/// Writes the factor in the plain-text matrix format with a header comment
/// recording the construction and permutation.
void write_factor_file(const std::string& path, const FactorMatrix& fac);

}  // namespace grdr
