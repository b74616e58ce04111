#pragma once

#include "dispflow/types.hpp"

namespace dispflow::geometry {

inline constexpr const char* kVersion = "geometry-1.0";

enum class Backend { Sphere2, ConstK, Grassmann };

/// A point of the target manifold in its ambient representation:
///   Sphere2   - unit vector in R^3 (stored as a real-valued 3x1 column),
///   ConstK    - rank-1 Hermitian projector of size (n+1) plus the curvature
///               constant K (the curvature tensor is the rank-1 projector
///               bracket rescaled by K/4),
///   Grassmann - rank-k0 Hermitian projector of size n0.
class ManifoldPoint {
 public:
  ManifoldPoint() = default;

  static ManifoldPoint sphere2(const Eigen::Vector3d& u);
  static ManifoldPoint const_k(int n, double K, const CMat& projector);
  static ManifoldPoint const_k_origin(int n, double K);
  static ManifoldPoint grassmann(int k0, int n0, const CMat& projector);
  static ManifoldPoint grassmann_origin(int k0, int n0);

  Backend backend() const { return backend_; }
  int k0() const { return k0_; }
  int n0() const { return n0_; }
  double hol_k() const { return hol_k_; }

  /// Complex dimension n of the manifold.
  int complex_dim() const;

  /// Ambient representation: 3x1 column (Sphere2) or n0 x n0 projector.
  const AMat& embed() const { return rep_; }

  /// Max violation of the backend's membership constraints.
  double constraint_violation() const;

  bool same_chart(const ManifoldPoint& o, double tol = 1e-9) const;

 private:
  Backend backend_ = Backend::Sphere2;
  AMat rep_;
  int k0_ = 1, n0_ = 2;
  double hol_k_ = 4.0;  // ConstK only
};

/// Element of the tangent space at `base`, in the same ambient representation.
struct TangentVector {
  ManifoldPoint base;
  AMat V;
};

double ambient_dist(const ManifoldPoint& p, const ManifoldPoint& q);

/// Riemannian metric h(X, Y). Grassmann/ConstK use Re tr(X Y)/2 on the
/// projector embedding; Sphere2 uses the induced R^3 inner product.
double metric(const TangentVector& X, const TangentVector& Y);

/// Complex structure J_u: cross product u ^ X on the sphere, i[A, X] on the
/// projector backends.
TangentVector complex_structure(const TangentVector& X);

/// Orthogonal projection of an ambient element onto the tangent space.
/// Grassmann/ConstK: Pi(H) = AH + HA - 2AHA (H Hermitian);
/// Sphere2: Pi(H) = H - (H.u) u.
TangentVector tangent_project(const ManifoldPoint& base, const AMat& H);

/// Riemann curvature R(X, Y)Z. Projector backends evaluate the double bracket
/// [[X, Y], Z], rescaled by K/4 on ConstK; Sphere2 uses the constant-curvature
/// surface formula with Gaussian curvature 1.
TangentVector curvature(const TangentVector& X, const TangentVector& Y,
                        const TangentVector& Z);

/// Return-to-manifold map: normalization on the sphere, spectral projector
/// onto the top-k0 eigenspace on Grassmann/ConstK. Throws RetractionFailure
/// when the input is degenerate (tiny norm / closing spectral gap).
ManifoldPoint retract(const ManifoldPoint& base, const AMat& H);

/// X + t*Y in the ambient space (convenience for integrators).
AMat axpy(const AMat& X, double t, const AMat& Y);

/// Scalar action of (re + i*im) through the complex structure:
/// (re + i*im) . X := re*X + im*J X.
TangentVector complex_scale(const Cx& c, const TangentVector& X);

/// Sum_p c_p . e_p with the complex scalar action above.
TangentVector complex_combine(const std::vector<TangentVector>& frame,
                              const CVec& coeffs);

/// Hermitian inner product of the complexified tangent space,
/// <X, Y> = h(X, Y) + i h(X, J Y); C-linear in the first slot.
Cx hermitian_inner(const TangentVector& X, const TangentVector& Y);

}  // namespace dispflow::geometry
