#include "dispflow/flow_geo.hpp"

#include <cmath>

namespace dispflow::flow_geo {

using frames::derivative_field;
using geometry::Backend;
using geometry::complex_structure;
using geometry::curvature;
using geometry::metric;
using geometry::retract;
using geometry::tangent_project;

namespace {

// ---- raw-array kernels for the integrator hot path ----------------------
// The public per-node operations carry their base point by value; inside the
// stepper that would dominate the cost, so the right-hand side is evaluated
// on plain ambient arrays with the same formulas.

struct GeoKernel {
  Backend backend;
  double kscale = 1.0;  // K/4 for ConstK, 1 otherwise

  static GeoKernel for_curve(const DiscreteCurve& c) {
    GeoKernel k;
    k.backend = c.u_inf.backend();
    k.kscale =
        (k.backend == Backend::ConstK) ? 0.25 * c.u_inf.hol_k() : 1.0;
    return k;
  }

  static double rdot(const AMat& x, const AMat& y) {
    double s = 0;
    for (int r = 0; r < 3; ++r) s += x(r, 0).real() * y(r, 0).real();
    return s;
  }

  static AMat rcross(const AMat& a, const AMat& b) {
    AMat c(3, 1);
    c(0, 0) = a(1, 0).real() * b(2, 0).real() - a(2, 0).real() * b(1, 0).real();
    c(1, 0) = a(2, 0).real() * b(0, 0).real() - a(0, 0).real() * b(2, 0).real();
    c(2, 0) = a(0, 0).real() * b(1, 0).real() - a(1, 0).real() * b(0, 0).real();
    return c;
  }

  void project(const AMat& A, const AMat& H, AMat& out) const {
    if (backend == Backend::Sphere2) {
      out = H - rdot(H, A) * A;
      return;
    }
    out.noalias() = A * H;
    out += H * A;
    out.noalias() -= 2.0 * (A * (H * A));
  }

  void jmul(const AMat& A, const AMat& X, AMat& out) const {
    if (backend == Backend::Sphere2) {
      out = rcross(A, X);
      return;
    }
    out.noalias() = A * X;
    out.noalias() -= X * A;
    out *= kI;
  }

  void curv(const AMat& A, const AMat& X, const AMat& Y, const AMat& Z,
            AMat& out) const {
    if (backend == Backend::Sphere2) {
      double hYZ = rdot(Y, Z), hXZ = rdot(X, Z);
      out = hYZ * X - hXZ * Y;
      return;
    }
    AMat B = X * Y - Y * X;
    out.noalias() = B * Z;
    out.noalias() -= Z * B;
    if (backend == Backend::ConstK) out *= kscale;
  }

  /// Return-to-manifold map on the raw ambient element. The projector
  /// backends run the purification iteration A <- 3A^2 - 2A^3 (quadratically
  /// convergent near a projector); the spectral fallback handles anything
  /// the iteration cannot.
  AMat retract_raw(const geometry::ManifoldPoint& chart, const AMat& H) const {
    if (backend == Backend::Sphere2) {
      double nrm = std::sqrt(rdot(H, H));
      if (nrm < 1e-8) throw RetractionFailure("sphere2 retraction: |H| < 1e-8");
      return H / nrm;
    }
    AMat A = 0.5 * (H + H.adjoint());
    for (int it = 0; it < 40; ++it) {
      AMat A2 = A * A;
      double defect = (A2 - A).cwiseAbs().maxCoeff();
      if (defect < 1e-14) {
        double tr = A.trace().real();
        if (std::abs(tr - double(chart.k0())) < 1e-6)
          return 0.5 * (A + A.adjoint());
        break;  // wrong rank: fall through to the spectral map
      }
      A = 3.0 * A2 - 2.0 * (A2 * A);
    }
    return geometry::retract(chart, H).embed();
  }
};

/// Centered difference of an ambient-valued field; 4th order interior,
/// one-sided 2nd order at the edges.
void diff_ambient(const std::vector<AMat>& f, double dx,
                  std::vector<AMat>& d) {
  const int M = int(f.size());
  d.resize(f.size());
  for (int i = 0; i < M; ++i) {
    if (i >= 2 && i + 2 < M)
      d[size_t(i)] =
          (f[size_t(i) - 2] - 8.0 * f[size_t(i) - 1] + 8.0 * f[size_t(i) + 1] -
           f[size_t(i) + 2]) /
          (12.0 * dx);
    else if (i == 0)
      d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
    else if (i == M - 1)
      d[size_t(M - 1)] =
          (3.0 * f[size_t(M - 1)] - 4.0 * f[size_t(M - 2)] + f[size_t(M - 3)]) /
          (2.0 * dx);
    else
      d[size_t(i)] = (f[size_t(i) + 1] - f[size_t(i) - 1]) / (2.0 * dx);
  }
}

struct GeoWorkspace {
  std::vector<AMat> pts, ux, d1, d2, d3, tmp, out;
};

/// dt * RHS written into w.out given ambient points in w.pts.
void rhs_raw(const GeoKernel& k, const FlowParams& p, double dx,
             GeoWorkspace& w) {
  const int M = int(w.pts.size());
  diff_ambient(w.pts, dx, w.tmp);
  w.ux.resize(w.tmp.size());
  for (int i = 0; i < M; ++i) k.project(w.pts[size_t(i)], w.tmp[size_t(i)], w.ux[size_t(i)]);
  diff_ambient(w.ux, dx, w.tmp);
  w.d1.resize(w.tmp.size());
  for (int i = 0; i < M; ++i) k.project(w.pts[size_t(i)], w.tmp[size_t(i)], w.d1[size_t(i)]);
  diff_ambient(w.d1, dx, w.tmp);
  w.d2.resize(w.tmp.size());
  for (int i = 0; i < M; ++i) k.project(w.pts[size_t(i)], w.tmp[size_t(i)], w.d2[size_t(i)]);
  diff_ambient(w.d2, dx, w.tmp);
  w.d3.resize(w.tmp.size());
  for (int i = 0; i < M; ++i) k.project(w.pts[size_t(i)], w.tmp[size_t(i)], w.d3[size_t(i)]);

  w.out.resize(w.pts.size());
  AMat jux, t1, t2;
  for (int i = 0; i < M; ++i) {
    const size_t s = size_t(i);
    const AMat& A = w.pts[s];
    k.jmul(A, w.d3[s], t1);
    AMat acc = p.a * t1;
    k.jmul(A, w.d1[s], t1);
    acc += p.lambda * t1;
    k.jmul(A, w.ux[s], jux);
    k.curv(A, w.d1[s], w.ux[s], jux, t1);
    acc += p.b * t1;
    k.curv(A, jux, w.ux[s], w.d1[s], t2);
    acc += p.c * t2;
    w.out[s] = acc;
  }
}

}  // namespace

std::vector<TangentVector> covariant_dx(const DiscreteCurve& curve,
                                        const std::vector<TangentVector>& field,
                                        int order) {
  if (order < 1 || order > 3)
    throw std::invalid_argument("covariant_dx: order in 1..3");
  std::vector<AMat> amb(field.size());
  for (size_t i = 0; i < field.size(); ++i) amb[i] = field[i].V;
  std::vector<AMat> d;
  for (int k = 0; k < order; ++k) {
    diff_ambient(amb, curve.grid.dx(), d);
    for (int i = 0; i < curve.grid.M; ++i)
      amb[size_t(i)] =
          tangent_project(curve.points[size_t(i)], d[size_t(i)]).V;
  }
  std::vector<TangentVector> out(field.size());
  for (int i = 0; i < curve.grid.M; ++i) {
    out[size_t(i)].base = curve.points[size_t(i)];
    out[size_t(i)].V = amb[size_t(i)];
  }
  return out;
}

std::vector<TangentVector> rhs_geo(const GeoFlowState& state) {
  const DiscreteCurve& c = state.curve;
  if (state.params.a == 0.0)
    throw std::invalid_argument("rhs_geo: a must be nonzero");
  GeoKernel k = GeoKernel::for_curve(c);
  GeoWorkspace w;
  w.pts.resize(c.points.size());
  for (size_t i = 0; i < c.points.size(); ++i) w.pts[i] = c.points[i].embed();
  rhs_raw(k, state.params, c.grid.dx(), w);
  std::vector<TangentVector> out(w.out.size());
  for (int i = 0; i < c.grid.M; ++i) {
    out[size_t(i)].base = c.points[size_t(i)];
    out[size_t(i)].V = w.out[size_t(i)];
  }
  return out;
}

std::vector<TangentVector> rhs_sphere_extrinsic(const GeoFlowState& state) {
  const DiscreteCurve& c = state.curve;
  const FlowParams& p = state.params;
  if (c.u_inf.backend() != Backend::Sphere2)
    throw std::invalid_argument("rhs_sphere_extrinsic: Sphere2 only");
  std::vector<AMat> u(c.points.size());
  for (size_t i = 0; i < c.points.size(); ++i) u[i] = c.points[i].embed();
  const double dx = c.grid.dx();
  std::vector<AMat> u1, u2, u3, u4;
  diff_ambient(u, dx, u1);
  diff_ambient(u1, dx, u2);
  diff_ambient(u2, dx, u3);
  diff_ambient(u3, dx, u4);
  const double cg = 5.0 * p.a - p.b;
  std::vector<TangentVector> out(u.size());
  for (int i = 0; i < c.grid.M; ++i) {
    const size_t s = size_t(i);
    AMat w = p.a * u4[s] + u2[s] + cg * GeoKernel::rdot(u2[s], u1[s]) * u1[s] +
             0.5 * cg * GeoKernel::rdot(u1[s], u1[s]) * u2[s];
    out[s].base = c.points[s];
    out[s].V = GeoKernel::rcross(u[s], w);
  }
  return out;
}

namespace {

GeoFlowState try_step(const GeoFlowState& state, double dt) {
  const DiscreteCurve& c = state.curve;
  const int M = c.grid.M;
  const double dx = c.grid.dx();
  GeoKernel kern = GeoKernel::for_curve(c);
  GeoWorkspace w;
  w.pts.resize(c.points.size());
  for (size_t i = 0; i < c.points.size(); ++i) w.pts[i] = c.points[i].embed();
  const std::vector<AMat> base = w.pts;
  const AMat anchor = c.u_inf.embed();

  auto stage = [&](const std::vector<AMat>& kprev, double h,
                   std::vector<AMat>& kout) {
    // advance base by h * kprev, retract, evaluate
    for (int i = 1; i < M; ++i)
      w.pts[size_t(i)] =
          kern.retract_raw(c.points[size_t(i)], base[size_t(i)] + h * kprev[size_t(i)]);
    w.pts[0] = anchor;
    rhs_raw(kern, state.params, dx, w);
    kout = w.out;
  };

  std::vector<AMat> k1, k2, k3, k4;
  w.pts = base;
  rhs_raw(kern, state.params, dx, w);
  k1 = w.out;
  stage(k1, 0.5 * dt, k2);
  stage(k2, 0.5 * dt, k3);
  stage(k3, dt, k4);

  GeoFlowState next;
  next.t = state.t + dt;
  next.params = state.params;
  next.curve.grid = c.grid;
  next.curve.u_inf = c.u_inf;
  next.curve.points.reserve(c.points.size());
  next.curve.points.push_back(c.u_inf);
  for (int i = 1; i < M; ++i) {
    const size_t s = size_t(i);
    AMat incr = base[s] + (dt / 6.0) * (k1[s] + 2.0 * k2[s] + 2.0 * k3[s] + k4[s]);
    AMat r = kern.retract_raw(c.points[s], incr);
    if (kern.backend == Backend::Sphere2) {
      Eigen::Vector3d v;
      for (int q = 0; q < 3; ++q) v(q) = r(q, 0).real();
      next.curve.points.push_back(geometry::ManifoldPoint::sphere2(v));
    } else if (kern.backend == Backend::ConstK) {
      next.curve.points.push_back(geometry::ManifoldPoint::const_k(
          c.u_inf.complex_dim(), c.u_inf.hol_k(), r));
    } else {
      next.curve.points.push_back(
          geometry::ManifoldPoint::grassmann(c.u_inf.k0(), c.u_inf.n0(), r));
    }
  }
  return next;
}

}  // namespace

GeoFlowState step_geo(const GeoFlowState& state, double dt) {
  double h = dt;
  for (int attempt = 0; attempt <= 10; ++attempt) {
    try {
      return try_step(state, h);
    } catch (const RetractionFailure&) {
      if (attempt == 10) throw;
      h *= 0.5;
    }
  }
  throw RetractionFailure("step_geo: unreachable");
}

double stable_dt(const DiscreteCurve& curve, const FlowParams& params,
                 double sigma) {
  double dx = curve.grid.dx();
  return sigma * dx * dx * dx * dx / std::abs(params.a);
}

double energy(const DiscreteCurve& curve, double alpha, double beta,
              double gamma) {
  std::vector<TangentVector> ux = derivative_field(curve);
  std::vector<TangentVector> dux = covariant_dx(curve, ux, 1);
  const int M = curve.grid.M;
  RVec f(M);
  for (int i = 0; i < M; ++i) {
    const size_t k = size_t(i);
    double e = 0.5 * alpha * metric(ux[k], ux[k]) +
               0.5 * beta * metric(dux[k], dux[k]);
    if (gamma != 0.0) {
      TangentVector jux = complex_structure(ux[k]);
      TangentVector r = curvature(ux[k], jux, jux);
      e += gamma * metric(r, ux[k]);
    }
    f(i) = e;
  }
  double dx = curve.grid.dx();
  double sum = 0.5 * (f(0) + f(M - 1));
  for (int i = 1; i + 1 < M; ++i) sum += f(i);
  return sum * dx;
}

}  // namespace dispflow::flow_geo
