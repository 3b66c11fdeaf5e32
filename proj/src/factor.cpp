#include "grdr/factor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "grdr/matrix_io.hpp"
#include "grdr/util.hpp"

namespace grdr {
namespace {

const char* construction_name(FactorConstruction c) {
  switch (c) {
    case FactorConstruction::kCholesky:
      return "cholesky";
    case FactorConstruction::kPca:
      return "pca";
    case FactorConstruction::kPermuted:
      return "permuted";
  }
  return "?";
}

bool is_exactly_diagonal(const Eigen::MatrixXd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != 0.0) return false;
  return true;
}

}  // namespace

std::string FactorMatrix::construction_label() const {
  if (construction != FactorConstruction::kPermuted)
    return construction_name(construction);
  return std::string("permuted-") + construction_name(base);
}

std::uint64_t FactorMatrix::fingerprint_component() const {
  std::uint64_t h = hash_string(construction_label());
  for (int p : permutation) h = hash_u64(static_cast<std::uint64_t>(p), h);
  return hash_combine(source_fingerprint, h);
}

FactorMatrix cholesky_factor(const CovarianceSpec& spec) {
  const int d = spec.dim;
  const Eigen::MatrixXd& m = spec.entries;
  const double tol = kPsdTol * m.norm();

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (int j = 0; j < d; ++j) {
    double pivot = m(j, j) - a.row(j).head(j).squaredNorm();
    if (pivot < -tol) {
      std::ostringstream os;
      os << "cholesky_factor: pivot " << j << " is " << format_g17(pivot)
         << ", below -" << format_g17(tol) << "; matrix is not PSD";
      throw NotPsdError(os.str(), j);
    }
    if (pivot <= tol) {
      if (pivot < 0.0)
        log_warning("cholesky_factor: clamped negative pivot " +
                    std::to_string(j) + " (" + format_g17(pivot) + ")");
      continue;  // rank deficiency: the column stays zero
    }
    const double root = std::sqrt(pivot);
    a(j, j) = root;
    for (int i = j + 1; i < d; ++i)
      a(i, j) = (m(i, j) - a.row(i).head(j).dot(a.row(j).head(j))) / root;
  }

  FactorMatrix fac;
  fac.dim = d;
  fac.entries = std::move(a);
  fac.construction = FactorConstruction::kCholesky;
  fac.base = FactorConstruction::kCholesky;
  fac.col_sq_norms = fac.entries.colwise().squaredNorm();
  fac.source_fingerprint = spec.fingerprint();
  return fac;
}

FactorMatrix pca_factor(const CovarianceSpec& spec) {
  const int d = spec.dim;
  const Eigen::MatrixXd& m = spec.entries;
  const double tol = kPsdTol * m.norm();

  Eigen::VectorXd lambda(d);
  Eigen::MatrixXd q(d, d);
  if (is_exactly_diagonal(m)) {
    // The spectral decomposition of a diagonal matrix is exact: sort the
    // diagonal, Q is a permutation.
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&m](int x, int y) { return m(x, x) > m(y, y); });
    q.setZero();
    for (int k = 0; k < d; ++k) {
      lambda[k] = m(order[k], order[k]);
      q(order[k], k) = 1.0;
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("pca_factor: eigensolver failed to converge");
    lambda = solver.eigenvalues().reverse();
    q = solver.eigenvectors().rowwise().reverse();
  }

  for (int i = 0; i < d; ++i) {
    if (lambda[i] < -tol) {
      std::ostringstream os;
      os << "pca_factor: eigenvalue " << i << " is " << format_g17(lambda[i])
         << ", below -" << format_g17(tol) << "; matrix is not PSD";
      throw NotPsdError(os.str(), i);
    }
    if (lambda[i] < 0.0) {
      log_warning("pca_factor: clamped negative eigenvalue " +
                  std::to_string(i) + " (" + format_g17(lambda[i]) + ")");
      lambda[i] = 0.0;
    }
  }

  // Sign convention: largest-magnitude entry of each eigenvector positive.
  for (int j = 0; j < d; ++j) {
    int arg = 0;
    for (int i = 1; i < d; ++i)
      if (std::abs(q(i, j)) > std::abs(q(arg, j))) arg = i;
    if (q(arg, j) < 0.0) q.col(j) = -q.col(j);
  }

  FactorMatrix fac;
  fac.dim = d;
  fac.entries = q * lambda.cwiseSqrt().asDiagonal();
  fac.construction = FactorConstruction::kPca;
  fac.base = FactorConstruction::kPca;
  // A^T A = Lambda for the spectral factor, so the eigenvalues are the
  // column square norms; storing them directly keeps the identity exact.
  fac.col_sq_norms = lambda;
  fac.eigenvalues = lambda;
  fac.eigenvectors = std::move(q);
  fac.source_fingerprint = spec.fingerprint();
  return fac;
}

FactorMatrix permute_decreasing(const FactorMatrix& fac) {
  const int d = fac.dim;
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&fac](int x, int y) {
    return fac.col_sq_norms[x] > fac.col_sq_norms[y];
  });

  FactorMatrix out;
  out.dim = d;
  out.entries.resize(d, d);
  out.col_sq_norms.resize(d);
  for (int j = 0; j < d; ++j) {
    out.entries.col(j) = fac.entries.col(order[j]);
    out.col_sq_norms[j] = fac.col_sq_norms[order[j]];
  }
  out.construction = FactorConstruction::kPermuted;
  out.base = fac.construction == FactorConstruction::kPermuted
                 ? fac.base
                 : fac.construction;
  out.permutation.resize(d);
  for (int j = 0; j < d; ++j)
    out.permutation[j] =
        fac.permutation.empty() ? order[j] : fac.permutation[order[j]];
  out.eigenvalues = fac.eigenvalues;
  out.eigenvectors = fac.eigenvectors;
  out.source_fingerprint = fac.source_fingerprint;
  return out;
}

void write_factor_file(const std::string& path, const FactorMatrix& fac) {
  std::ostringstream comment;
  comment << "construction=" << fac.construction_label() << " permutation=";
  if (fac.permutation.empty()) {
    comment << "identity";
  } else {
    for (int j = 0; j < fac.dim; ++j) {
      if (j > 0) comment << ',';
      comment << fac.permutation[j];
    }
  }
  write_matrix_file(path, fac.entries, comment.str());
}

}  // namespace grdr
