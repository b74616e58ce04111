#include "dispflow/geometry.hpp"

#include <cmath>

namespace dispflow::geometry {

namespace {

Eigen::Vector3d real3(const AMat& V) {
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) v(i) = V(i, 0).real();
  return v;
}

AMat from_real3(const Eigen::Vector3d& v) {
  AMat V(3, 1);
  for (int i = 0; i < 3; ++i) V(i, 0) = Cx(v(i), 0.0);
  return V;
}

void check_same_base(const TangentVector& X, const TangentVector& Y,
                     const char* op) {
  if (!X.base.same_chart(Y.base))
    throw std::invalid_argument(std::string(op) +
                                ": tangent vectors live at different points");
}

}  // namespace

ManifoldPoint ManifoldPoint::sphere2(const Eigen::Vector3d& u) {
  ManifoldPoint p;
  p.backend_ = Backend::Sphere2;
  p.rep_ = from_real3(u);
  p.k0_ = 0;
  p.n0_ = 0;
  if (std::abs(u.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("sphere2 point is not unit to 1e-12");
  return p;
}

ManifoldPoint ManifoldPoint::grassmann(int k0, int n0, const CMat& A) {
  if (!(k0 >= 1 && k0 < n0))
    throw std::invalid_argument("grassmann: need 1 <= k0 < n0");
  if (A.rows() != n0 || A.cols() != n0)
    throw std::invalid_argument("grassmann: projector size mismatch");
  ManifoldPoint p;
  p.backend_ = Backend::Grassmann;
  p.k0_ = k0;
  p.n0_ = n0;
  p.rep_ = A;
  if (p.constraint_violation() > 1e-10)
    throw std::invalid_argument(
        "grassmann: not a rank-k0 Hermitian projector to 1e-10");
  return p;
}

ManifoldPoint ManifoldPoint::grassmann_origin(int k0, int n0) {
  CMat A = CMat::Zero(n0, n0);
  for (int i = 0; i < k0; ++i) A(i, i) = 1.0;
  return grassmann(k0, n0, A);
}

ManifoldPoint ManifoldPoint::const_k(int n, double K, const CMat& A) {
  ManifoldPoint p = grassmann(1, n + 1, A);
  p.backend_ = Backend::ConstK;
  p.hol_k_ = K;
  return p;
}

ManifoldPoint ManifoldPoint::const_k_origin(int n, double K) {
  ManifoldPoint p = grassmann_origin(1, n + 1);
  p.backend_ = Backend::ConstK;
  p.hol_k_ = K;
  return p;
}

int ManifoldPoint::complex_dim() const {
  switch (backend_) {
    case Backend::Sphere2:
      return 1;
    case Backend::ConstK:
      return n0_ - 1;
    case Backend::Grassmann:
      return k0_ * (n0_ - k0_);
  }
  return 0;
}

double ManifoldPoint::constraint_violation() const {
  if (backend_ == Backend::Sphere2)
    return std::abs(real3(rep_).norm() - 1.0);
  CMat A = rep_;
  double herm = (A - A.adjoint()).cwiseAbs().maxCoeff();
  double idem = (A * A - A).norm();
  double tr = std::abs(A.trace().real() - double(k0_)) +
              std::abs(A.trace().imag());
  return std::max({herm, idem, tr});
}

bool ManifoldPoint::same_chart(const ManifoldPoint& o, double tol) const {
  if (backend_ != o.backend_ || k0_ != o.k0_ || n0_ != o.n0_) return false;
  return (rep_ - o.rep_).cwiseAbs().maxCoeff() <= tol;
}

double ambient_dist(const ManifoldPoint& p, const ManifoldPoint& q) {
  if (p.backend() != q.backend())
    throw std::invalid_argument("ambient_dist: backend mismatch");
  return (p.embed() - q.embed()).norm();
}

double metric(const TangentVector& X, const TangentVector& Y) {
  check_same_base(X, Y, "metric");
  if (X.base.backend() == Backend::Sphere2)
    return real3(X.V).dot(real3(Y.V));
  // Re tr(X Y*) / 2 = Re tr(X Y) / 2 for Hermitian tangent matrices; this is
  // Re tr(omega_x omega_y*) in the off-diagonal block coordinates.
  return 0.5 * (X.V * Y.V).trace().real();
}

TangentVector complex_structure(const TangentVector& X) {
  TangentVector JX;
  JX.base = X.base;
  if (X.base.backend() == Backend::Sphere2) {
    JX.V = from_real3(real3(X.base.embed()).cross(real3(X.V)));
  } else {
    const AMat& A = X.base.embed();
    JX.V = kI * (A * X.V - X.V * A);
  }
  return JX;
}

TangentVector tangent_project(const ManifoldPoint& base, const AMat& H) {
  TangentVector X;
  X.base = base;
  if (base.backend() == Backend::Sphere2) {
    Eigen::Vector3d u = real3(base.embed());
    Eigen::Vector3d h = real3(H);
    X.V = from_real3(h - h.dot(u) * u);
    return X;
  }
  if ((H - H.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + H.norm()))
    throw std::invalid_argument("tangent_project: ambient element not Hermitian");
  const AMat& A = base.embed();
  AMat Hh = 0.5 * (H + H.adjoint());
  X.V = A * Hh + Hh * A - 2.0 * (A * Hh * A);
  return X;
}

TangentVector curvature(const TangentVector& X, const TangentVector& Y,
                        const TangentVector& Z) {
  check_same_base(X, Y, "curvature");
  check_same_base(X, Z, "curvature");
  TangentVector R;
  R.base = X.base;
  if (X.base.backend() == Backend::Sphere2) {
    // Constant-curvature surface, Gaussian curvature 1 in the induced metric.
    double hYZ = metric(Y, Z), hXZ = metric(X, Z);
    R.V = hYZ * X.V - hXZ * Y.V;
    return R;
  }
  AMat XY = X.V * Y.V - Y.V * X.V;
  R.V = XY * Z.V - Z.V * XY;
  if (X.base.backend() == Backend::ConstK) R.V *= 0.25 * X.base.hol_k();
  return R;
}

ManifoldPoint retract(const ManifoldPoint& base, const AMat& H) {
  if (base.backend() == Backend::Sphere2) {
    Eigen::Vector3d h = real3(H);
    double nrm = h.norm();
    if (nrm < 1e-8) throw RetractionFailure("sphere2 retraction: |H| < 1e-8");
    return ManifoldPoint::sphere2(h / nrm);
  }
  const int n0 = base.n0(), k0 = base.k0();
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(H));
  if (es.info() != Eigen::Success)
    throw RetractionFailure("projector retraction: eigensolver failed");
  // Eigenvalues ascending; the projector spans the top k0 eigenvectors.
  double gap = es.eigenvalues()(n0 - k0) - es.eigenvalues()(n0 - k0 - 1);
  if (gap < 1e-8)
    throw RetractionFailure("projector retraction: spectral gap < 1e-8");
  CMat B = es.eigenvectors().rightCols(k0);
  CMat A = B * B.adjoint();
  A = hermitize(A);
  if (base.backend() == Backend::ConstK)
    return ManifoldPoint::const_k(n0 - 1, base.hol_k(), A);
  return ManifoldPoint::grassmann(k0, n0, A);
}

AMat axpy(const AMat& X, double t, const AMat& Y) { return X + t * Y; }

TangentVector complex_scale(const Cx& c, const TangentVector& X) {
  TangentVector JX = complex_structure(X);
  TangentVector out;
  out.base = X.base;
  out.V = c.real() * X.V + c.imag() * JX.V;
  return out;
}

TangentVector complex_combine(const std::vector<TangentVector>& frame,
                              const CVec& coeffs) {
  if (frame.empty() || coeffs.size() != Eigen::Index(frame.size()))
    throw std::invalid_argument("complex_combine: size mismatch");
  TangentVector out = complex_scale(coeffs(0), frame[0]);
  for (size_t p = 1; p < frame.size(); ++p)
    out.V += complex_scale(coeffs(Eigen::Index(p)), frame[p]).V;
  return out;
}

Cx hermitian_inner(const TangentVector& X, const TangentVector& Y) {
  return Cx(metric(X, Y), metric(X, complex_structure(Y)));
}

}  // namespace dispflow::geometry
