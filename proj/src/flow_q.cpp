#include "dispflow/flow_q.hpp"

#include <cmath>

namespace dispflow::flow_q {

using tensor_lab::STensor;
using tensor_lab::STensorField;

std::array<double, 6> d_coeffs(const FlowParams& p) {
  return {-p.a - p.b - 2.0 * p.c, -p.a + p.b,       p.a + p.b - 2.0 * p.c,
          -p.b - 2.0 * p.c,       p.a - p.b - 2.0 * p.c, p.a + p.b};
}

QSystemSpec QSystemSpec::generic(Grid g, FlowParams p, STensorField S) {
  QSystemSpec s;
  s.variant = Variant::GenericS;
  s.grid = g;
  s.params = p;
  s.n = S.n;
  if (!S.constant_s && int(S.nodes.size()) != g.M)
    throw std::invalid_argument("QSystemSpec: S field / grid mismatch");
  s.S = std::move(S);
  return s;
}

QSystemSpec QSystemSpec::riemann(Grid g, FlowParams p, double kappa) {
  QSystemSpec s;
  s.variant = Variant::RiemannKappa;
  s.grid = g;
  s.params = p;
  s.n = 1;
  s.kappa = kappa;
  return s;
}

QSystemSpec QSystemSpec::const_k(Grid g, FlowParams p, int n, double K) {
  QSystemSpec s;
  s.variant = Variant::ConstK;
  s.grid = g;
  s.params = p;
  s.n = n;
  s.K = K;
  return s;
}

QSystemSpec QSystemSpec::grassmann(Grid g, FlowParams p, int k0, int m0) {
  QSystemSpec s;
  s.variant = Variant::GrassmannMatrix;
  s.grid = g;
  s.params = p;
  s.k0 = k0;
  s.m0 = m0;
  s.n = k0 * m0;
  return s;
}

namespace {

// Shared discrete operators; every kernel must go through these so the
// specialization overlaps agree to rounding.

CMat zrow(const CMat& Q, int i) {
  // zero-extension (homogeneous Dirichlet) beyond the ends
  if (i >= 0 && i < Q.rows()) return Q.row(i);
  return CMat::Zero(1, Q.cols());
}

CMat dxc(const CMat& Q, double dx) {
  const int M = int(Q.rows());
  CMat D(M, Q.cols());
  for (int i = 0; i < M; ++i)
    D.row(i) = (zrow(Q, i + 1) - zrow(Q, i - 1)) / (2.0 * dx);
  return D;
}

CMat dxx(const CMat& Q, double dx) {
  const int M = int(Q.rows());
  CMat D(M, Q.cols());
  for (int i = 0; i < M; ++i)
    D.row(i) = (zrow(Q, i + 1) - 2.0 * zrow(Q, i) + zrow(Q, i - 1)) / (dx * dx);
  return D;
}

CMat dx4(const CMat& Q, double dx) {
  const int M = int(Q.rows());
  CMat D(M, Q.cols());
  const double h4 = dx * dx * dx * dx;
  for (int i = 0; i < M; ++i)
    D.row(i) = (zrow(Q, i - 2) - 4.0 * zrow(Q, i - 1) + 6.0 * zrow(Q, i) -
                4.0 * zrow(Q, i + 1) + zrow(Q, i + 2)) /
               h4;
  return D;
}

/// Cumulative trapezoid from the left end, column-wise.
CMat cumtrapz(const CMat& F, double dx) {
  CMat I = CMat::Zero(F.rows(), F.cols());
  for (int i = 1; i < F.rows(); ++i)
    I.row(i) = I.row(i - 1) + 0.5 * dx * (F.row(i - 1) + F.row(i));
  return I;
}

/// tri(S, X, Y, Z)_j = sum_{pqr} S(j,p,q,r) X_p conj(Y_q) Z_r.
CVec tri(const STensor& S, const CVec& X, const CVec& Y, const CVec& Z) {
  const int n = S.n();
  CVec out = CVec::Zero(n);
  for (int j = 0; j < n; ++j) {
    Cx acc(0, 0);
    for (int p = 0; p < n; ++p) {
      if (X(p) == Cx(0, 0)) continue;
      for (int q = 0; q < n; ++q) {
        Cx xy = X(p) * std::conj(Y(q));
        for (int r = 0; r < n; ++r) acc += S.S(j, p, q, r) * xy * Z(r);
      }
    }
    out(j) = acc;
  }
  return out;
}

/// pair2(S, G, Q)_{j,r} = sum_{pq} S(j,p,q,r) (conj(G_q) Q_p + G_p conj(Q_q)),
/// flattened as (j, r) -> j*n + r.
CMat pair2(const STensor& S, const CVec& G, const CVec& Q) {
  const int n = S.n();
  CMat out = CMat::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int r = 0; r < n; ++r) {
      Cx acc(0, 0);
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
          acc += S.S(j, p, q, r) *
                 (std::conj(G(q)) * Q(p) + G(p) * std::conj(Q(q)));
      out(j, r) = acc;
    }
  return out;
}

STensor fd_stensor(const STensorField& F, int i, int M, double dx, int order) {
  // centered differences of the per-node S arrays, one-sided at the ends
  const int n = F.n;
  STensor out(n);
  auto at = [&](int k) -> const STensor& { return F.at(std::clamp(k, 0, M - 1)); };
  for (int j = 0; j < n; ++j)
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q)
        for (int r = 0; r < n; ++r) {
          Cx v;
          if (order == 1) {
            if (i == 0)
              v = (at(1).S(j, p, q, r) - at(0).S(j, p, q, r)) / dx;
            else if (i == M - 1)
              v = (at(M - 1).S(j, p, q, r) - at(M - 2).S(j, p, q, r)) / dx;
            else
              v = (at(i + 1).S(j, p, q, r) - at(i - 1).S(j, p, q, r)) /
                  (2.0 * dx);
          } else {
            if (i == 0 || i == M - 1) {
              int c = (i == 0) ? 1 : M - 2;
              v = (at(c + 1).S(j, p, q, r) - 2.0 * at(c).S(j, p, q, r) +
                   at(c - 1).S(j, p, q, r)) /
                  (dx * dx);
            } else {
              v = (at(i + 1).S(j, p, q, r) - 2.0 * at(i).S(j, p, q, r) +
                   at(i - 1).S(j, p, q, r)) /
                  (dx * dx);
            }
          }
          out.S(j, p, q, r) = v;
        }
  return out;
}

CMat nonlinear_generic(const QSystemSpec& spec, const CMat& Q) {
  const int M = spec.grid.M, n = spec.n;
  const double dx = spec.grid.dx();
  const auto d = d_coeffs(spec.params);
  const double b = spec.params.b, c = spec.params.c,
               lam = spec.params.lambda, a = spec.params.a;
  CMat Qx = dxc(Q, dx), Qxx = dxx(Q, dx);

  CMat rhs_terms = CMat::Zero(M, n);      // cubic/local terms
  std::vector<CMat> f1;
  f1.resize(size_t(M));  // per node: (j, r) integrand
  for (int i = 0; i < M; ++i) {
    const STensor& S = spec.S.at(i);
    CVec q = Q.row(i).transpose(), qx = Qx.row(i).transpose(),
         qxx = Qxx.row(i).transpose();
    CVec loc = d[0] * tri(S, qxx, q, q) + d[1] * tri(S, q, qxx, q) +
               d[2] * tri(S, qx, qx, q) + d[3] * tri(S, qx, q, qx) -
               lam * tri(S, q, q, q);
    CVec G1 = tri(S, qx, q, q), G2 = tri(S, q, qx, q);
    CMat F = -(b + 2.0 * c) * pair2(S, G1, q) + b * pair2(S, G2, q);
    if (!spec.S.constant_s) {
      STensor Sx = fd_stensor(spec.S, i, M, dx, 1);
      STensor Sxx = fd_stensor(spec.S, i, M, dx, 2);
      loc += d[4] * tri(Sx, qx, q, q) + d[5] * tri(Sx, q, qx, q);
      // f^2 integrand
      CMat F2 = CMat::Zero(n, n);
      for (int j = 0; j < n; ++j)
        for (int r = 0; r < n; ++r) {
          Cx acc(0, 0);
          for (int p = 0; p < n; ++p)
            for (int qi = 0; qi < n; ++qi) {
              acc += -a * Sxx.S(j, p, qi, r) *
                         (qx(p) * std::conj(q(qi)) + q(p) * std::conj(qx(qi))) -
                     3.0 * a * Sx.S(j, p, qi, r) * qx(p) * std::conj(qx(qi)) +
                     lam * Sx.S(j, p, qi, r) * q(p) * std::conj(q(qi));
            }
          F2(j, r) = acc;
        }
      F += F2;
    }
    rhs_terms.row(i) = loc.transpose();
    f1[size_t(i)] = F;
  }
  // integrate the (j,r) kernels and close with Q_r(x)
  CMat flat(M, n * n);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < n; ++j)
      for (int r = 0; r < n; ++r) flat(i, j * n + r) = f1[size_t(i)](j, r);
  CMat I = cumtrapz(flat, dx);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < n; ++j) {
      Cx acc(0, 0);
      for (int r = 0; r < n; ++r) acc += I(i, j * n + r) * Q(i, r);
      rhs_terms(i, j) += acc;
    }
  return -kI * rhs_terms;
}

CMat nonlinear_riemann(const QSystemSpec& spec, const CMat& Q) {
  const int M = spec.grid.M;
  const double dx = spec.grid.dx();
  const double k = spec.kappa;
  const auto d = d_coeffs(spec.params);
  const double c = spec.params.c, lam = spec.params.lambda;
  CMat Qx = dxc(Q, dx), Qxx = dxx(Q, dx);
  CMat rhs_terms(M, 1), f1(M, 1);
  for (int i = 0; i < M; ++i) {
    Cx q = Q(i, 0), qx = Qx(i, 0), qxx = Qxx(i, 0);
    double n2 = std::norm(q);
    rhs_terms(i, 0) = 0.5 * k *
                          (d[0] * qxx * n2 + d[1] * std::conj(qxx) * q * q +
                           d[2] * std::norm(qx) * q +
                           d[3] * qx * qx * std::conj(q)) -
                      0.5 * lam * k * n2 * q;
    f1(i, 0) = -c * k * k * n2 * (qx * std::conj(q)).real();
  }
  CMat I = cumtrapz(f1, dx);
  for (int i = 0; i < M; ++i) rhs_terms(i, 0) += I(i, 0) * Q(i, 0);
  return -kI * rhs_terms;
}

CMat nonlinear_constk(const QSystemSpec& spec, const CMat& Q) {
  const int M = spec.grid.M, n = spec.n;
  const double dx = spec.grid.dx();
  const double K = spec.K;
  const auto d = d_coeffs(spec.params);
  const double b = spec.params.b, c = spec.params.c, lam = spec.params.lambda;
  CMat Qx = dxc(Q, dx), Qxx = dxx(Q, dx);
  CMat rhs_terms = CMat::Zero(M, n);
  CMat f1(M, n * n);
  for (int i = 0; i < M; ++i) {
    CVec q = Q.row(i).transpose(), qx = Qx.row(i).transpose(),
         qxx = Qxx.row(i).transpose();
    double n2 = q.squaredNorm();
    Cx p1 = qx.dot(q);          // sum conj(qx) q ... see below
    // Eigen's dot conjugates the first argument: qx.dot(q) = sum conj(qx_a) q_a
    Cx sum_qx_cq = std::conj(p1);      // sum qx conj(q)
    Cx sum_qxx_cq = std::conj(qxx.dot(q));  // sum qxx conj(q)
    Cx sum_cqxx_q = qxx.dot(q);             // sum conj(qxx) q
    Cx sum_cqx_q = p1;                      // sum conj(qx) q
    double nx2 = qx.squaredNorm();
    CVec loc = 0.25 * K * d[0] * (n2 * qxx + sum_qxx_cq * q) +
               0.5 * K * d[1] * sum_cqxx_q * q +
               0.25 * K * d[2] * (sum_cqx_q * qx + nx2 * q) +
               0.5 * K * d[3] * sum_qx_cq * qx - 0.5 * K * lam * n2 * q;
    rhs_terms.row(i) = loc.transpose();
    CVec G1 = 0.25 * K * (n2 * qx + sum_qx_cq * q);
    CVec G2 = 0.5 * K * sum_cqx_q * q;
    Cx A1(0, 0), A2(0, 0);
    for (int p = 0; p < n; ++p) {
      A1 += std::conj(G1(p)) * q(p) + G1(p) * std::conj(q(p));
      A2 += std::conj(G2(p)) * q(p) + G2(p) * std::conj(q(p));
    }
    for (int j = 0; j < n; ++j)
      for (int r = 0; r < n; ++r) {
        Cx t1 = std::conj(G1(r)) * q(j) + G1(j) * std::conj(q(r));
        Cx t2 = std::conj(G2(r)) * q(j) + G2(j) * std::conj(q(r));
        if (r == j) {
          t1 += A1;
          t2 += A2;
        }
        f1(i, j * n + r) =
            -(b + 2.0 * c) * 0.25 * K * t1 + b * 0.25 * K * t2;
      }
  }
  CMat I = cumtrapz(f1, dx);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < n; ++j) {
      Cx acc(0, 0);
      for (int r = 0; r < n; ++r) acc += I(i, j * n + r) * Q(i, r);
      rhs_terms(i, j) += acc;
    }
  return -kI * rhs_terms;
}

std::vector<CMat> to_blocks(const CMat& Q, int k0, int m0) {
  std::vector<CMat> q(size_t(Q.rows()));
  for (int i = 0; i < Q.rows(); ++i) {
    CMat b(k0, m0);
    for (int j2 = 0; j2 < m0; ++j2)
      for (int j1 = 0; j1 < k0; ++j1) b(j1, j2) = Q(i, j2 * k0 + j1);
    q[size_t(i)] = b;
  }
  return q;
}

CMat from_block_rows(const std::vector<CMat>& rows, int k0, int m0) {
  CMat Q(int(rows.size()), k0 * m0);
  for (size_t i = 0; i < rows.size(); ++i)
    for (int j2 = 0; j2 < m0; ++j2)
      for (int j1 = 0; j1 < k0; ++j1)
        Q(int(i), j2 * k0 + j1) = rows[i](j1, j2);
  return Q;
}

CMat nonlinear_grassmann(const QSystemSpec& spec, const CMat& Q) {
  const int M = spec.grid.M, k0 = spec.k0, m0 = spec.m0;
  const double dx = spec.grid.dx();
  const auto d = d_coeffs(spec.params);
  const double b = spec.params.b, c = spec.params.c, lam = spec.params.lambda;
  CMat Qx = dxc(Q, dx), Qxx = dxx(Q, dx);
  std::vector<CMat> q = to_blocks(Q, k0, m0), qx = to_blocks(Qx, k0, m0),
                    qxx = to_blocks(Qxx, k0, m0);
  std::vector<CMat> loc;
  loc.resize(size_t(M));
  CMat mflat(M, k0 * k0), nflat(M, m0 * m0);
  for (int i = 0; i < M; ++i) {
    const size_t s = size_t(i);
    CMat qd = q[s].adjoint(), qxd = qx[s].adjoint(), qxxd = qxx[s].adjoint();
    loc[s] = d[0] * (qxx[s] * qd * q[s] + q[s] * qd * qxx[s]) +
             2.0 * d[1] * (q[s] * qxxd * q[s]) +
             d[2] * (qx[s] * qxd * q[s] + q[s] * qxd * qx[s]) +
             2.0 * d[3] * (qx[s] * qd * qx[s]) -
             2.0 * lam * (q[s] * qd * q[s]);
    CMat G1 = qx[s] * qd * q[s] + q[s] * qd * qx[s];
    CMat G2 = 2.0 * (q[s] * qxd * q[s]);
    CMat Mi = -(b + 2.0 * c) * (q[s] * G1.adjoint() + G1 * qd) +
              b * (q[s] * G2.adjoint() + G2 * qd);
    CMat Ni = -(b + 2.0 * c) * (G1.adjoint() * q[s] + qd * G1) +
              b * (G2.adjoint() * q[s] + qd * G2);
    for (int r = 0; r < k0; ++r)
      for (int cc = 0; cc < k0; ++cc) mflat(i, cc * k0 + r) = Mi(r, cc);
    for (int r = 0; r < m0; ++r)
      for (int cc = 0; cc < m0; ++cc) nflat(i, cc * m0 + r) = Ni(r, cc);
  }
  CMat Im = cumtrapz(mflat, dx), In = cumtrapz(nflat, dx);
  std::vector<CMat> rows;
  rows.resize(size_t(M));
  for (int i = 0; i < M; ++i) {
    const size_t s = size_t(i);
    CMat Mi(k0, k0), Ni(m0, m0);
    for (int r = 0; r < k0; ++r)
      for (int cc = 0; cc < k0; ++cc) Mi(r, cc) = Im(i, cc * k0 + r);
    for (int r = 0; r < m0; ++r)
      for (int cc = 0; cc < m0; ++cc) Ni(r, cc) = In(i, cc * m0 + r);
    rows[s] = loc[s] + Mi * q[s] + q[s] * Ni;
  }
  return -kI * from_block_rows(rows, k0, m0);
}

}  // namespace

CMat apply_linear(const QSystemSpec& spec, const CMat& Q) {
  const double dx = spec.grid.dx();
  return kI * (spec.params.a * dx4(Q, dx) + spec.params.lambda * dxx(Q, dx));
}

CMat rhs_nonlinear(const QSystemSpec& spec, const CMat& Q) {
  if (Q.rows() != spec.grid.M || Q.cols() != spec.n)
    throw std::invalid_argument("rhs_nonlinear: profile shape mismatch");
  switch (spec.variant) {
    case QSystemSpec::Variant::GenericS:
      return nonlinear_generic(spec, Q);
    case QSystemSpec::Variant::RiemannKappa:
      return nonlinear_riemann(spec, Q);
    case QSystemSpec::Variant::ConstK:
      return nonlinear_constk(spec, Q);
    case QSystemSpec::Variant::GrassmannMatrix:
      return nonlinear_grassmann(spec, Q);
  }
  throw std::logic_error("rhs_nonlinear: bad variant");
}

CMat rhs_generic(const CMat& Q, const QSystemSpec& spec) {
  return apply_linear(spec, Q) + rhs_nonlinear(spec, Q);
}

CMat rhs_riemann(const CMat& Q, double kappa, const FlowParams& p, Grid g) {
  QSystemSpec s = QSystemSpec::riemann(g, p, kappa);
  return apply_linear(s, Q) + rhs_nonlinear(s, Q);
}

CMat rhs_constk(const CMat& Q, int n, double K, const FlowParams& p, Grid g) {
  QSystemSpec s = QSystemSpec::const_k(g, p, n, K);
  return apply_linear(s, Q) + rhs_nonlinear(s, Q);
}

CMat rhs_grassmann(const CMat& Q, int k0, int m0, const FlowParams& p,
                   Grid g) {
  QSystemSpec s = QSystemSpec::grassmann(g, p, k0, m0);
  return apply_linear(s, Q) + rhs_nonlinear(s, Q);
}

CMat rhs_grassmann_normal_form(const CMat& Q, int k0, int m0,
                               const FlowParams& p, Grid g) {
  QSystemSpec spec = QSystemSpec::grassmann(g, p, k0, m0);
  const int M = g.M;
  const double dx = g.dx();
  const auto d = d_coeffs(p);
  CMat Qx = dxc(Q, dx), Qxx = dxx(Q, dx);
  std::vector<CMat> q = to_blocks(Q, k0, m0), qx = to_blocks(Qx, k0, m0),
                    qxx = to_blocks(Qxx, k0, m0);
  CMat mflat(M, m0 * m0), nflat(M, k0 * k0);
  std::vector<CMat> loc;
  loc.resize(size_t(M));
  for (int i = 0; i < M; ++i) {
    const size_t s = size_t(i);
    CMat qd = q[s].adjoint(), qxd = qx[s].adjoint(), qxxd = qxx[s].adjoint();
    CMat qq = q[s] * qd;  // k0 x k0
    loc[s] = d[0] * (qxx[s] * qd * q[s] + q[s] * qd * qxx[s]) +
             2.0 * d[1] * (q[s] * qxxd * q[s]) +
             d[2] * (qx[s] * qxd * q[s] + q[s] * qxd * qx[s]) +
             2.0 * d[3] * (qx[s] * qd * qx[s]) -
             2.0 * p.lambda * (q[s] * qd * q[s]) +
             (-2.0 * p.b - 4.0 * p.c) * (qq * qq * q[s]);
    // integrands of the two surviving nonlocal blocks
    CMat dqq = qx[s] * qd + q[s] * qxd;    // (q q*)_x
    CMat dq2 = qxd * q[s] + qd * qx[s];    // (q* q)_x
    CMat gi = qd * dqq * q[s];             // m0 x m0
    CMat hi = q[s] * dq2 * qd;             // k0 x k0
    for (int r = 0; r < m0; ++r)
      for (int cc = 0; cc < m0; ++cc) mflat(i, cc * m0 + r) = gi(r, cc);
    for (int r = 0; r < k0; ++r)
      for (int cc = 0; cc < k0; ++cc) nflat(i, cc * k0 + r) = hi(r, cc);
  }
  CMat Ig = cumtrapz(mflat, dx), Ih = cumtrapz(nflat, dx);
  std::vector<CMat> rows;
  rows.resize(size_t(M));
  for (int i = 0; i < M; ++i) {
    const size_t s = size_t(i);
    CMat Gi(m0, m0), Hi(k0, k0);
    for (int r = 0; r < m0; ++r)
      for (int cc = 0; cc < m0; ++cc) Gi(r, cc) = Ig(i, cc * m0 + r);
    for (int r = 0; r < k0; ++r)
      for (int cc = 0; cc < k0; ++cc) Hi(r, cc) = Ih(i, cc * k0 + r);
    rows[s] = loc[s] + 2.0 * p.b * (q[s] * Gi + Hi * q[s]);
  }
  return apply_linear(spec, Q) + (-kI) * from_block_rows(rows, k0, m0);
}

std::array<double, 5> nls_delta_coeffs(double g1, double g2) {
  return {3.0 * g1 + 2.0 * g2, 2.0 * g1 + g2, 9.0 * g1 + 4.0 * g2,
          3.5 * g1 + 2.0 * g2, g1 + 0.5 * g2};
}

CMat rhs_fourth_order_nls(const CMat& Q, double g1, double g2, Grid g) {
  if (Q.cols() != 1)
    throw std::invalid_argument("rhs_fourth_order_nls: scalar profiles only");
  const double dx = g.dx();
  const auto dl = nls_delta_coeffs(g1, g2);
  CMat Qx = dxc(Q, dx), Qxx = dxx(Q, dx), Q4 = dx4(Q, dx);
  CMat out(g.M, 1);
  for (int i = 0; i < g.M; ++i) {
    Cx q = Q(i, 0), qx = Qx(i, 0), qxx = Qxx(i, 0), q4 = Q4(i, 0);
    double n2 = std::norm(q);
    Cx val = g1 * q4 + qxx + 2.0 * n2 * q - 4.0 * dl[0] * n2 * qxx -
             4.0 * dl[1] * q * q * std::conj(qxx) -
             4.0 * dl[2] * q * std::norm(qx) -
             4.0 * dl[3] * qx * qx * std::conj(q) -
             24.0 * dl[4] * n2 * n2 * q;
    out(i, 0) = kI * val;
  }
  return out;
}

QStepper::QStepper(QSystemSpec spec, double dt)
    : spec_(std::move(spec)), dt_(dt) {
  const int M = spec_.grid.M;
  const int N = M - 2;
  const double dx = spec_.grid.dx();
  const double h4 = dx * dx * dx * dx, h2 = dx * dx;
  const Cx ia = kI * spec_.params.a, il = kI * spec_.params.lambda;
  std::vector<Eigen::Triplet<Cx>> trips;
  trips.reserve(size_t(N) * 5);
  auto L_entry = [&](int off) -> Cx {
    switch (off) {
      case -2:
      case 2:
        return ia / h4;
      case -1:
      case 1:
        return ia * (-4.0) / h4 + il / h2;
      default:
        return ia * 6.0 / h4 + il * (-2.0) / h2;
    }
  };
  for (int r = 0; r < N; ++r)
    for (int off = -2; off <= 2; ++off) {
      int cc = r + off;
      if (cc < 0 || cc >= N) continue;
      Cx v = -(0.5 * dt_) * L_entry(off);
      if (off == 0) v += 1.0;
      trips.emplace_back(r, cc, v);
    }
  implicit_ = Eigen::SparseMatrix<Cx>(N, N);
  implicit_.setFromTriplets(trips.begin(), trips.end());
  lu_.compute(implicit_);
  if (lu_.info() != Eigen::Success)
    throw std::invalid_argument("QStepper: implicit operator not factorizable");
}

CMat QStepper::solve_interior(const CMat& rhs) const {
  CMat out = lu_.solve(rhs);
  if (lu_.info() != Eigen::Success)
    throw std::runtime_error("QStepper: banded solve failed");
  return out;
}

CMat QStepper::step(const CMat& Q) {
  const int M = spec_.grid.M;
  const int N = M - 2;
  CMat Lq = apply_linear(spec_, Q);
  CMat N0 = rhs_nonlinear(spec_, Q);
  CMat rhs1 = (Q + 0.5 * dt_ * N0).middleRows(1, N);
  CMat half = solve_interior(rhs1);
  midpoint_ = CMat::Zero(M, spec_.n);
  midpoint_.middleRows(1, N) = half;
  CMat N1 = rhs_nonlinear(spec_, midpoint_);
  CMat rhs2 = (Q + 0.5 * dt_ * Lq + dt_ * N1).middleRows(1, N);
  CMat out = CMat::Zero(M, spec_.n);
  out.middleRows(1, N) = solve_interior(rhs2);
  return out;
}

CMat step_q(const CMat& Q, const QSystemSpec& spec, double dt) {
  QStepper st(spec, dt);
  return st.step(Q);
}

GaugeState GaugeState::identity(int k0, int m0) {
  GaugeState g;
  g.y = CMat::Identity(m0, m0);
  g.z = CMat::Identity(k0, k0);
  return g;
}

std::pair<CMat, CMat> gauge_generators(const CMat& Q, int k0, int m0,
                                       const FlowParams& p, Grid g) {
  if (g.M % 2 == 0)
    throw std::invalid_argument("gauge_generators: grid must contain x = 0");
  const double dx = g.dx();
  CMat Qx = dxc(Q, dx);
  std::vector<CMat> q = to_blocks(Q, k0, m0), qx = to_blocks(Qx, k0, m0);
  const int i0 = (g.M - 1) / 2;
  CMat IA = CMat::Zero(m0, m0), IB = CMat::Zero(k0, k0);
  CMat prevA = CMat::Zero(m0, m0), prevB = CMat::Zero(k0, k0);
  for (int i = 0; i <= i0; ++i) {
    const size_t s = size_t(i);
    CMat dqq = qx[s] * q[s].adjoint() + q[s] * qx[s].adjoint();
    CMat dq2 = qx[s].adjoint() * q[s] + q[s].adjoint() * qx[s];
    CMat fA = q[s].adjoint() * dqq * q[s];
    CMat fB = q[s] * dq2 * q[s].adjoint();
    if (i > 0) {
      IA += 0.5 * dx * (prevA + fA);
      IB += 0.5 * dx * (prevB + fB);
    }
    prevA = fA;
    prevB = fB;
  }
  Cx coeff = 2.0 * p.b * kI;
  return {coeff * IA, coeff * IB};
}

GaugeState gauge_evolve(const GaugeState& gauge, const CMat& q_snapshot,
                        int k0, int m0, const FlowParams& p, Grid g,
                        double dt) {
  auto [A, B] = gauge_generators(q_snapshot, k0, m0, p, g);
  GaugeState out;
  out.y = unitary_exp(dt * A) * gauge.y;
  out.z = gauge.z * unitary_exp(dt * B);
  out.t = gauge.t + dt;
  return out;
}

CMat gauge_apply(const GaugeState& gauge, const CMat& Q, int k0, int m0) {
  std::vector<CMat> q = to_blocks(Q, k0, m0);
  for (auto& qi : q) qi = gauge.z * qi * gauge.y;
  return from_block_rows(q, k0, m0);
}

double mass(const CMat& Q, Grid g) {
  double s = 0;
  for (int i = 0; i < g.M; ++i) s += Q.row(i).squaredNorm();
  return s * g.dx();
}

}  // namespace dispflow::flow_q
