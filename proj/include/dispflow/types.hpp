#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace dispflow {

using Cx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

// Ambient element: 3x1 real-valued column for the two-sphere, n0 x n0
// Hermitian matrix for the projector backends. The small fixed capacity keeps
// per-node temporaries off the heap.
using AMat = Eigen::Matrix<Cx, Eigen::Dynamic, Eigen::Dynamic, 0, 9, 9>;

inline constexpr Cx kI{0.0, 1.0};

struct RetractionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FrameFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Uniform grid x_i = -L + i*dx on [-L, L].
struct Grid {
  double L = 20.0;
  int M = 257;

  double dx() const { return 2.0 * L / (M - 1); }
  double x(int i) const { return -L + i * dx(); }
  bool operator==(const Grid&) const = default;
};

/// Coefficients (a, b, c, lambda) of the curve flow, optionally sourced from
/// the energy-functional triple (alpha, beta, gamma) via
///   a = beta, b = beta + 8 gamma, c = 3 (a - b) / 2, lambda = -alpha.
struct FlowParams {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
  double lambda = 0.0;
  std::optional<std::array<double, 3>> energy_triple;  // (alpha, beta, gamma)

  static FlowParams from_abc(double a, double b, double c, double lambda) {
    if (a == 0.0) throw std::invalid_argument("FlowParams: a must be nonzero");
    FlowParams p;
    p.a = a;
    p.b = b;
    p.c = c;
    p.lambda = lambda;
    return p;
  }

  static FlowParams from_energy(double alpha, double beta, double gamma) {
    if (beta == 0.0)
      throw std::invalid_argument("FlowParams: beta must be nonzero");
    FlowParams p;
    p.a = beta;
    p.b = beta + 8.0 * gamma;
    p.c = 1.5 * (p.a - p.b);
    p.lambda = -alpha;
    p.energy_triple = {{alpha, beta, gamma}};
    return p;
  }

  bool is_symmetric_compatible(double tol = 1e-12) const {
    return std::abs(c - 1.5 * (a - b)) <= tol * (1.0 + std::abs(c));
  }
};

inline CMat hermitize(const CMat& A) { return 0.5 * (A + A.adjoint()); }

/// exp(S) for skew-Hermitian S, computed through the eigendecomposition of
/// the Hermitian matrix -iS. Output is unitary to machine precision.
inline CMat unitary_exp(const CMat& S) {
  CMat H = -kI * S;
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(H));
  CVec phase(H.rows());
  for (Eigen::Index k = 0; k < H.rows(); ++k)
    phase(k) = std::exp(kI * es.eigenvalues()(k));
  return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

/// Deterministic RNG wrapper used by tests and the experiment harness.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  double normal() { return normal_(eng_); }
  double uniform() { return uniform_(eng_); }
  Cx cnormal() { return Cx(normal(), normal()); }

  CMat gaussian_cmat(int rows, int cols) {
    CMat A(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) A(i, j) = cnormal();
    return A;
  }

  CMat hermitian(int n) { return hermitize(gaussian_cmat(n, n)); }

  /// Haar-ish random unitary from the QR factorization of a Gaussian matrix.
  CMat unitary(int n) {
    Eigen::HouseholderQR<CMat> qr(gaussian_cmat(n, n));
    CMat Q = qr.householderQ() * CMat::Identity(n, n);
    CMat R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int k = 0; k < n; ++k) {
      Cx d = R(k, k);
      Q.col(k) *= (std::abs(d) > 0) ? d / std::abs(d) : Cx(1, 0);
    }
    return Q;
  }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// FNV-1a, used to stamp reports with a stable hash of the configuration.
inline uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace dispflow
