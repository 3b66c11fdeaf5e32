#include "grdr/covariance.hpp"

#include <cmath>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "grdr/rng.hpp"
#include "grdr/util.hpp"

namespace grdr {

void log_warning(const std::string& message) {
  std::cerr << "[grdr] warning: " << message << "\n";
}

namespace {

// Exact symmetrization: (a+b)/2 == (b+a)/2 in IEEE arithmetic.
Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

}  // namespace

std::string CovarianceSpec::source_label() const {
  std::ostringstream os;
  switch (family) {
    case CovarianceFamily::kEigenDecay:
      os << "eigendecay(d=" << dim << ";gamma=" << format_g17(gamma)
         << ";lambda1=" << format_g17(lambda1) << ";orient="
         << (orientation == Orientation::kDiagonal ? "diagonal" : "rotation");
      if (orientation == Orientation::kRandomRotation)
        os << ";rotseed=" << rotation_seed;
      os << ")";
      break;
    case CovarianceFamily::kEquicorrelation:
      os << "equicorrelation(d=" << dim << ";rho=" << format_g17(rho) << ")";
      break;
    case CovarianceFamily::kExplicit:
      os << "explicit(d=" << dim << ";hash=" << std::hex
         << hash_bytes(entries.data(), sizeof(double) * entries.size()) << ")";
      break;
  }
  return os.str();
}

std::uint64_t CovarianceSpec::fingerprint() const {
  std::uint64_t h = hash_string(source_label());
  if (family == CovarianceFamily::kExplicit)
    h = hash_bytes(entries.data(), sizeof(double) * entries.size(), h);
  return h;
}

// Reserved stream id for rotation sampling, distinct from replication ids.
constexpr std::uint64_t kRotationStreamId = 0x726f746174ull;

Eigen::MatrixXd haar_orthogonal(int d, std::uint64_t seed) {
  RngStream stream(seed, kRotationStreamId);
  Eigen::MatrixXd gauss(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) gauss(i, j) = stream.gaussian();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fixing the signs of diag(R) makes the distribution Haar and the result
  // reproducible.
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

CovarianceSpec make_eigen_decay(int d, double gamma, double lambda1,
                                Orientation orientation,
                                std::uint64_t rotation_seed) {
  if (d < 1) throw std::invalid_argument("make_eigen_decay: d must be >= 1");
  if (!(lambda1 > 0.0))
    throw std::invalid_argument("make_eigen_decay: lambda1 must be positive");

  Eigen::VectorXd lambda(d);
  for (int i = 0; i < d; ++i) {
    const double half = std::pow(static_cast<double>(i + 1), gamma / 2.0);
    lambda[i] = lambda1 * (half * half);
  }

  CovarianceSpec spec;
  spec.dim = d;
  spec.family = CovarianceFamily::kEigenDecay;
  spec.gamma = gamma;
  spec.lambda1 = lambda1;
  spec.orientation = orientation;
  spec.rotation_seed = rotation_seed;
  if (orientation == Orientation::kDiagonal) {
    spec.entries = lambda.asDiagonal();
  } else {
    const Eigen::MatrixXd q = haar_orthogonal(d, rotation_seed);
    spec.entries = symmetrized(q * lambda.asDiagonal() * q.transpose());
  }
  return spec;
}

CovarianceSpec make_equicorrelation(int d, double rho) {
  if (d < 1)
    throw std::invalid_argument("make_equicorrelation: d must be >= 1");
  if (d > 1) {
    const double lower = -1.0 / (d - 1);
    if (rho < lower || rho > 1.0)
      throw std::invalid_argument(
          "make_equicorrelation: rho outside PSD range [" + format_g17(lower) +
          ", 1]");
  }
  CovarianceSpec spec;
  spec.dim = d;
  spec.family = CovarianceFamily::kEquicorrelation;
  spec.rho = rho;
  spec.entries = Eigen::MatrixXd::Constant(d, d, rho);
  spec.entries.diagonal().setOnes();
  return spec;
}

CovarianceSpec make_explicit(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw std::invalid_argument("make_explicit: matrix must be square, d >= 1");
  CovarianceSpec spec;
  spec.dim = static_cast<int>(m.rows());
  spec.family = CovarianceFamily::kExplicit;
  spec.ingest_symmetry_residual =
      (m - m.transpose()).cwiseAbs().maxCoeff();
  spec.entries = symmetrized(m);
  if (spec.ingest_symmetry_residual > 0.0)
    log_warning("make_explicit: symmetrized input with residual " +
                format_g17(spec.ingest_symmetry_residual));
  return spec;
}

CovarianceDiagnostics validate(const CovarianceSpec& spec) {
  CovarianceDiagnostics diag;
  const Eigen::MatrixXd& m = spec.entries;
  diag.symmetry_residual = (m - m.transpose()).cwiseAbs().maxCoeff();
  diag.trace = m.trace();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m,
                                                        Eigen::EigenvaluesOnly);
  diag.min_eigenvalue = solver.eigenvalues().minCoeff();
  diag.symmetric = diag.symmetry_residual == 0.0;
  diag.positive_semi_definite = diag.min_eigenvalue >= -kPsdTol * m.norm();
  return diag;
}

}  // namespace grdr
