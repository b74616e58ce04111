#pragma once

#include "dispflow/frames.hpp"
#include "dispflow/tensor_lab.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <array>

namespace dispflow::flow_q {

inline constexpr const char* kVersion = "flow_q-1.0";

/// d-coefficients of the transformed system:
/// (-a-b-2c, -a+b, a+b-2c, -b-2c, a-b-2c, a+b).
std::array<double, 6> d_coeffs(const FlowParams& p);

struct QSystemSpec {
  enum class Variant { GenericS, RiemannKappa, ConstK, GrassmannMatrix };
  Variant variant = Variant::RiemannKappa;
  FlowParams params;
  Grid grid;
  int n = 1;  // profile component count

  tensor_lab::STensorField S;  // GenericS
  double kappa = 1.0;          // RiemannKappa (constant Gaussian curvature)
  double K = 4.0;              // ConstK (holomorphic sectional curvature)
  int k0 = 1, m0 = 1;          // GrassmannMatrix (n = k0*m0)

  static QSystemSpec generic(Grid g, FlowParams p, tensor_lab::STensorField S);
  static QSystemSpec riemann(Grid g, FlowParams p, double kappa);
  static QSystemSpec const_k(Grid g, FlowParams p, int n, double K);
  static QSystemSpec grassmann(Grid g, FlowParams p, int k0, int m0);
};

// Profiles are M x n complex matrices; component j of a Grassmann matrix
// profile is the (j1, j2) entry with j = j2*k0 + j1 (column-major blocks).

/// Dispersive part dQ/dt|_lin = i (a D4 + lambda D2) Q with homogeneous
/// Dirichlet (zero-extension) ends.
CMat apply_linear(const QSystemSpec& spec, const CMat& Q);

/// Nonlinear + nonlocal part of dQ/dt for each variant (everything except
/// apply_linear). All variants share the same discrete derivative and
/// cumulative-integral realizations, so they agree to rounding on their
/// overlap domains.
CMat rhs_nonlinear(const QSystemSpec& spec, const CMat& Q);

/// Full dQ/dt = apply_linear + rhs_nonlinear.
CMat rhs_generic(const CMat& Q, const QSystemSpec& spec);
CMat rhs_riemann(const CMat& Q, double kappa, const FlowParams& p, Grid g);
CMat rhs_constk(const CMat& Q, int n, double K, const FlowParams& p, Grid g);
CMat rhs_grassmann(const CMat& Q, int k0, int m0, const FlowParams& p, Grid g);

/// Matrix kernel in the literature normal form: local quintic plus the two
/// genuinely nonlocal blocks, whose coefficient vanishes exactly when
/// b = beta + 8 gamma = 0. Agrees with rhs_grassmann at second order in dx
/// (the quintic is the closed form of the cumulative integral it replaces).
CMat rhs_grassmann_normal_form(const CMat& Q, int k0, int m0,
                               const FlowParams& p, Grid g);

/// Scalar fourth-order NLS with the five delta coefficients derived from
/// (gamma1, gamma2); returns dq/dt.
CMat rhs_fourth_order_nls(const CMat& Q, double gamma1, double gamma2, Grid g);
std::array<double, 5> nls_delta_coeffs(double gamma1, double gamma2);

/// IMEX stepper: Crank-Nicolson on the linear part (one banded factorization,
/// reused), explicit midpoint predictor on the nonlinear part. Boundary nodes
/// stay pinned to zero.
class QStepper {
 public:
  QStepper(QSystemSpec spec, double dt);
  CMat step(const CMat& Q);
  /// Predictor state of the last step (midpoint-time snapshot).
  const CMat& last_midpoint() const { return midpoint_; }
  double dt() const { return dt_; }

 private:
  QSystemSpec spec_;
  double dt_;
  Eigen::SparseMatrix<Cx> implicit_;
  Eigen::SparseLU<Eigen::SparseMatrix<Cx>> lu_;
  CMat midpoint_;
  CMat solve_interior(const CMat& rhs) const;
};

CMat step_q(const CMat& Q, const QSystemSpec& spec, double dt);

/// Time-dependent unitary pair removing the integral-coefficient drift of
/// the matrix system; q -> z q y maps the derived system to the matrix NLS
/// normal form.
struct GaugeState {
  CMat y, z;
  double t = 0;
  static GaugeState identity(int k0, int m0);
};

/// Generators A(t), B(t) from the current profile: cumulative integrals of
/// q*(qq*)_x q and q(q*q)_x q* from the left end to x = 0, scaled by 2b i.
std::pair<CMat, CMat> gauge_generators(const CMat& Q, int k0, int m0,
                                       const FlowParams& p, Grid g);

/// Exponential-midpoint update y <- exp(dt A) y, z <- z exp(dt B).
GaugeState gauge_evolve(const GaugeState& gauge, const CMat& q_snapshot,
                        int k0, int m0, const FlowParams& p, Grid g, double dt);

/// Node-wise q -> z q y.
CMat gauge_apply(const GaugeState& gauge, const CMat& Q, int k0, int m0);

/// Discrete mass surrogate sum |Q|^2 dx.
double mass(const CMat& Q, Grid g);

}  // namespace dispflow::flow_q
