#include "dispflow/frames.hpp"

#include <cmath>

namespace dispflow::frames {

using geometry::Backend;
using geometry::complex_combine;
using geometry::hermitian_inner;
using geometry::metric;
using geometry::retract;
using geometry::tangent_project;

DiscreteCurve::Validation DiscreteCurve::validate() const {
  Validation v;
  v.anchor_dist = geometry::ambient_dist(points.front(), u_inf);
  const double dx = grid.dx();
  double mx = 0;
  for (const auto& p : points)
    v.max_constraint = std::max(v.max_constraint, p.constraint_violation());
  for (int i = 0; i + 1 < grid.M; ++i)
    mx = std::max(mx, (points[i + 1].embed() - points[i].embed()).norm() / dx);
  v.max_speed = mx;
  v.left_speed = (points[1].embed() - points[0].embed()).norm() / dx;
  v.right_speed =
      (points[grid.M - 1].embed() - points[grid.M - 2].embed()).norm() / dx;
  return v;
}

std::vector<TangentVector> canonical_frame(const ManifoldPoint& u_inf) {
  const int n = u_inf.complex_dim();
  std::vector<TangentVector> frame;
  frame.reserve(n);
  if (u_inf.backend() == Backend::Sphere2) {
    Eigen::Vector3d u;
    for (int i = 0; i < 3; ++i) u(i) = u_inf.embed()(i, 0).real();
    // axis least aligned with u
    int k = 0;
    for (int i = 1; i < 3; ++i)
      if (std::abs(u(i)) < std::abs(u(k))) k = i;
    Eigen::Vector3d axis = Eigen::Vector3d::Zero();
    axis(k) = 1.0;
    Eigen::Vector3d e1 = (axis - axis.dot(u) * u).normalized();
    AMat V(3, 1);
    for (int i = 0; i < 3; ++i) V(i, 0) = Cx(e1(i), 0.0);
    frame.push_back(TangentVector{u_inf, V});
    return frame;
  }
  const int n0 = u_inf.n0(), k0 = u_inf.k0(), m0 = n0 - k0;
  // B with the rank-k0 eigenspace in the first columns
  CMat B;
  CMat A = u_inf.embed();
  if ((A - ManifoldPoint::grassmann_origin(k0, n0).embed()).norm() < 1e-13) {
    B = CMat::Identity(n0, n0);
  } else {
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(A));
    B = CMat(n0, n0);
    for (int c = 0; c < k0; ++c) B.col(c) = es.eigenvectors().col(n0 - 1 - c);
    for (int c = 0; c < m0; ++c)
      B.col(k0 + c) = es.eigenvectors().col(m0 - 1 - c);
  }
  for (int j2 = 0; j2 < m0; ++j2)
    for (int j1 = 0; j1 < k0; ++j1) {
      CMat E = CMat::Zero(n0, n0);
      E(j1, k0 + j2) = 1.0;
      E(k0 + j2, j1) = 1.0;
      frame.push_back(TangentVector{u_inf, B * E * B.adjoint()});
    }
  return frame;
}

namespace {

/// Loewdin re-orthonormalization over the complexified Hermitian form.
/// Returns false (leaving `frame` untouched) when the Gram matrix pivot
/// drops below 1e-10.
bool loewdin(std::vector<TangentVector>& frame) {
  const int n = int(frame.size());
  CMat G(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) G(j, k) = hermitian_inner(frame[j], frame[k]);
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(G));
  if (es.eigenvalues().minCoeff() < 1e-10) return false;
  CVec inv_sqrt(n);
  for (int k = 0; k < n; ++k) inv_sqrt(k) = 1.0 / std::sqrt(es.eigenvalues()(k));
  CMat Gm = es.eigenvectors() * inv_sqrt.asDiagonal() *
            es.eigenvectors().adjoint();  // Hermitian G^{-1/2}
  CMat C = Gm.conjugate();
  std::vector<TangentVector> out(frame.size());
  for (int p = 0; p < n; ++p) out[size_t(p)] = complex_combine(frame, C.col(p));
  frame = std::move(out);
  return true;
}

}  // namespace

std::vector<TangentVector> transport_frame(
    const std::vector<TangentVector>& frame, const ManifoldPoint& to,
    bool via_midpoint) {
  const ManifoldPoint& from = frame.front().base;
  std::vector<TangentVector> out;
  out.reserve(frame.size());
  if (via_midpoint) {
    ManifoldPoint mid = retract(from, 0.5 * (from.embed() + to.embed()));
    for (const auto& ej : frame)
      out.push_back(tangent_project(to, tangent_project(mid, ej.V).V));
  } else {
    for (const auto& ej : frame) out.push_back(tangent_project(to, ej.V));
  }
  if (!loewdin(out))
    throw FrameFailure("transport_frame: re-orthonormalization pivot < 1e-10");
  return out;
}

std::vector<TangentVector> transport_frame_extrapolated(
    const std::vector<TangentVector>& frame, const ManifoldPoint& to) {
  // The leading residual of the projected transport scales with the square
  // of the step; the half-step route carries half of it. Expressing the
  // full-step frame in the half-step frame and backing the coefficient off
  // cancels that term.
  std::vector<TangentVector> full = transport_frame(frame, to, false);
  std::vector<TangentVector> half = transport_frame(frame, to, true);
  const int n = int(frame.size());
  CMat A(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      A(k, j) = hermitian_inner(full[size_t(j)], half[size_t(k)]);
  CMat Ainv = A.adjoint();  // unitary to rounding
  std::vector<TangentVector> out;
  out.reserve(frame.size());
  for (int p = 0; p < n; ++p)
    out.push_back(complex_combine(half, Ainv.col(p)));
  if (!loewdin(out))
    throw FrameFailure("transport_frame: re-orthonormalization pivot < 1e-10");
  return out;
}

ParallelFrame build_frame(const DiscreteCurve& curve,
                          const std::vector<TangentVector>& frame_inf) {
  ParallelFrame f;
  f.e.resize(size_t(curve.grid.M));
  std::vector<TangentVector> cur;
  cur.reserve(frame_inf.size());
  // anchor: re-project the reference basis at the first node
  for (const auto& ej : frame_inf)
    cur.push_back(tangent_project(curve.points[0], ej.V));
  if (!loewdin(cur))
    throw FrameFailure("build_frame: anchor frame degenerate at left end");
  f.e[0] = cur;
  for (int i = 0; i + 1 < curve.grid.M; ++i) {
    cur = transport_frame_extrapolated(cur, curve.points[size_t(i) + 1]);
    f.e[size_t(i) + 1] = cur;
  }
  return f;
}

ParallelFrame build_frame_lift(const DiscreteCurve& curve,
                               const std::vector<TangentVector>& frame_inf) {
  if (curve.u_inf.backend() == Backend::Sphere2)
    throw std::invalid_argument("build_frame_lift: projector backends only");
  std::vector<CMat> C = co_diagonal_lift(curve);
  ParallelFrame f;
  f.e.resize(size_t(curve.grid.M));
  for (int i = 0; i < curve.grid.M; ++i) {
    f.e[size_t(i)].reserve(frame_inf.size());
    for (const auto& ej : frame_inf) {
      CMat V = C[size_t(i)] * ej.V * C[size_t(i)].adjoint();
      f.e[size_t(i)].push_back(
          TangentVector{curve.points[size_t(i)], hermitize(V)});
    }
  }
  return f;
}

std::vector<TangentVector> derivative_field(const DiscreteCurve& curve) {
  const int M = curve.grid.M;
  const double dx = curve.grid.dx();
  auto P = [&](int i) -> const AMat& { return curve.points[size_t(i)].embed(); };
  std::vector<TangentVector> ux;
  ux.resize(size_t(M));
  for (int i = 0; i < M; ++i) {
    AMat d;
    if (i >= 2 && i + 2 < M) {
      d = (P(i - 2) - 8.0 * P(i - 1) + 8.0 * P(i + 1) - P(i + 2)) / (12.0 * dx);
    } else if (i == 0) {
      d = (-3.0 * P(0) + 4.0 * P(1) - P(2)) / (2.0 * dx);
    } else if (i == M - 1) {
      d = (3.0 * P(M - 1) - 4.0 * P(M - 2) + P(M - 3)) / (2.0 * dx);
    } else {
      d = (P(i + 1) - P(i - 1)) / (2.0 * dx);
    }
    ux[size_t(i)] = tangent_project(curve.points[size_t(i)], d);
  }
  return ux;
}

ComplexProfile hasimoto_transform(const DiscreteCurve& curve,
                                  const ParallelFrame& frame) {
  const int M = curve.grid.M, n = curve.n();
  std::vector<TangentVector> ux = derivative_field(curve);
  ComplexProfile prof;
  prof.grid = curve.grid;
  prof.Q = CMat(M, n);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < n; ++j)
      prof.Q(i, j) = hermitian_inner(ux[size_t(i)], frame.at(i)[size_t(j)]);
  return prof;
}

DiscreteCurve reconstruct(const ComplexProfile& profile,
                          const ManifoldPoint& u_inf,
                          const std::vector<TangentVector>& frame_inf) {
  const int M = profile.grid.M;
  const double dx = profile.grid.dx();
  if (profile.n() != u_inf.complex_dim())
    throw std::invalid_argument("reconstruct: profile/backend dim mismatch");
  DiscreteCurve curve;
  curve.grid = profile.grid;
  curve.u_inf = u_inf;
  curve.points.reserve(size_t(M));
  curve.points.push_back(u_inf);

  std::vector<TangentVector> fr;
  for (const auto& ej : frame_inf) fr.push_back(tangent_project(u_inf, ej.V));
  if (!loewdin(fr)) throw FrameFailure("reconstruct: degenerate anchor frame");

  for (int i = 0; i + 1 < M; ++i) {
    const ManifoldPoint& u = curve.points.back();
    CVec q0 = profile.Q.row(i).transpose();
    TangentVector v1 = complex_combine(fr, q0);
    ManifoldPoint uh = retract(u, u.embed() + 0.5 * dx * v1.V);
    std::vector<TangentVector> fh = transport_frame(fr, uh, false);
    CVec qmid = 0.5 * (profile.Q.row(i) + profile.Q.row(i + 1)).transpose();
    TangentVector v2 = complex_combine(fh, qmid);
    ManifoldPoint next = retract(u, u.embed() + dx * v2.V);
    fr = transport_frame_extrapolated(fr, next);
    curve.points.push_back(next);
  }
  return curve;
}

std::vector<CMat> co_diagonal_lift(const DiscreteCurve& curve) {
  if (curve.u_inf.backend() == Backend::Sphere2)
    throw std::invalid_argument("co_diagonal_lift: projector backends only");
  const int M = curve.grid.M, n0 = curve.u_inf.n0();
  const double dx = curve.grid.dx();
  std::vector<CMat> C;
  C.reserve(size_t(M));
  C.push_back(CMat::Identity(n0, n0));
  for (int i = 0; i + 1 < M; ++i) {
    const AMat& u0 = curve.points[size_t(i)].embed();
    const AMat& u1 = curve.points[size_t(i) + 1].embed();
    ManifoldPoint pm = retract(curve.points[size_t(i)], 0.5 * (u0 + u1));
    AMat uxm = tangent_project(pm, (u1 - u0) / dx).V;
    const AMat& um = pm.embed();
    CMat K = uxm * um - um * uxm;  // skew-Hermitian
    CMat Cn = unitary_exp(dx * K) * C.back();
    // Align the conjugated reference projector with the curve point by the
    // direct rotation (unitary polar factor); keeps C A0 C* = u exact and
    // re-unitarizes the step in one go.
    CMat lifted = Cn * curve.u_inf.embed() * Cn.adjoint();
    const CMat& target = curve.points[size_t(i) + 1].embed();
    CMat I = CMat::Identity(n0, n0);
    CMat Mrot = target * lifted + (I - target) * (I - lifted);
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(Mrot.adjoint() * Mrot));
    if (es.eigenvalues().minCoeff() < 1e-12)
      throw FrameFailure("co_diagonal_lift: alignment rotation degenerate");
    CVec inv_sqrt(n0);
    for (int k = 0; k < n0; ++k)
      inv_sqrt(k) = 1.0 / std::sqrt(es.eigenvalues()(k));
    CMat W = Mrot * (es.eigenvectors() * inv_sqrt.asDiagonal() *
                     es.eigenvectors().adjoint());
    C.push_back(W * Cn);
  }
  return C;
}

std::vector<CMat> lift_offdiagonal_block(const DiscreteCurve& curve,
                                         const std::vector<CMat>& lift) {
  // Generator realization: C* C_x = C* [u_x, u] C = [C* u_x C, A0], whose
  // diagonal blocks vanish identically because u_x is tangent. The top-right
  // block is then the corresponding block of C* u_x C.
  const int M = curve.grid.M, k0 = curve.u_inf.k0();
  const int m0 = curve.u_inf.n0() - k0;
  std::vector<TangentVector> ux = derivative_field(curve);
  std::vector<CMat> out;
  out.resize(size_t(M));
  for (int i = 0; i < M; ++i) {
    CMat W = lift[size_t(i)].adjoint() * ux[size_t(i)].V * lift[size_t(i)];
    out[size_t(i)] = -W.topRightCorner(k0, m0);
  }
  return out;
}

std::vector<CMat> lift_offdiagonal_block_fd(const DiscreteCurve& curve,
                                            const std::vector<CMat>& lift) {
  const int M = curve.grid.M, n0 = curve.u_inf.n0(), k0 = curve.u_inf.k0();
  const int m0 = n0 - k0;
  const double dx = curve.grid.dx();
  auto Cm = [&](int i) -> const CMat& { return lift[size_t(i)]; };
  std::vector<CMat> out;
  out.resize(size_t(M));
  for (int i = 0; i < M; ++i) {
    CMat Cx_;
    if (i >= 2 && i + 2 < M)
      Cx_ = (Cm(i - 2) - 8.0 * Cm(i - 1) + 8.0 * Cm(i + 1) - Cm(i + 2)) /
            (12.0 * dx);
    else if (i == 0)
      Cx_ = (-3.0 * Cm(0) + 4.0 * Cm(1) - Cm(2)) / (2.0 * dx);
    else if (i == M - 1)
      Cx_ = (3.0 * Cm(M - 1) - 4.0 * Cm(M - 2) + Cm(M - 3)) / (2.0 * dx);
    else
      Cx_ = (Cm(i + 1) - Cm(i - 1)) / (2.0 * dx);
    CMat W = Cm(i).adjoint() * Cx_;
    out[size_t(i)] = W.topRightCorner(k0, m0);
  }
  return out;
}

// --- serialization -------------------------------------------------------

namespace {

nlohmann::json cmat_to_json(const CMat& A) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      row.push_back({A(i, j).real(), A(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

CMat cmat_from_json(const nlohmann::json& j) {
  const int rows = int(j.size()), cols = int(j.at(0).size());
  CMat A(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      A(r, c) = Cx(j.at(r).at(c).at(0).get<double>(),
                   j.at(r).at(c).at(1).get<double>());
  return A;
}

}  // namespace

nlohmann::json point_to_json(const ManifoldPoint& p) {
  nlohmann::json j;
  switch (p.backend()) {
    case Backend::Sphere2: {
      j["kind"] = "sphere2";
      j["u"] = {p.embed()(0, 0).real(), p.embed()(1, 0).real(),
                p.embed()(2, 0).real()};
      break;
    }
    case Backend::ConstK:
      j["kind"] = "const_k";
      j["n"] = p.complex_dim();
      j["K"] = p.hol_k();
      j["A"] = cmat_to_json(p.embed());
      break;
    case Backend::Grassmann:
      j["kind"] = "grassmann";
      j["k0"] = p.k0();
      j["n0"] = p.n0();
      j["A"] = cmat_to_json(p.embed());
      break;
  }
  return j;
}

ManifoldPoint point_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "sphere2") {
    Eigen::Vector3d u(j.at("u").at(0).get<double>(),
                      j.at("u").at(1).get<double>(),
                      j.at("u").at(2).get<double>());
    return ManifoldPoint::sphere2(u);
  }
  if (kind == "const_k")
    return ManifoldPoint::const_k(j.at("n").get<int>(),
                                  j.at("K").get<double>(),
                                  cmat_from_json(j.at("A")));
  if (kind == "grassmann")
    return ManifoldPoint::grassmann(j.at("k0").get<int>(),
                                    j.at("n0").get<int>(),
                                    cmat_from_json(j.at("A")));
  throw std::invalid_argument("point_from_json: unknown backend kind");
}

nlohmann::json curve_to_json(const DiscreteCurve& c) {
  nlohmann::json j;
  j["grid"] = {{"L", c.grid.L}, {"M", c.grid.M}};
  j["backend"] = point_to_json(c.u_inf);
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : c.points) {
    if (p.backend() == Backend::Sphere2)
      pts.push_back({p.embed()(0, 0).real(), p.embed()(1, 0).real(),
                     p.embed()(2, 0).real()});
    else
      pts.push_back(cmat_to_json(p.embed()));
  }
  j["points"] = pts;
  return j;
}

DiscreteCurve curve_from_json(const nlohmann::json& j) {
  DiscreteCurve c;
  c.grid.L = j.at("grid").at("L").get<double>();
  c.grid.M = j.at("grid").at("M").get<int>();
  c.u_inf = point_from_json(j.at("backend"));
  for (const auto& pj : j.at("points")) {
    if (c.u_inf.backend() == Backend::Sphere2) {
      Eigen::Vector3d u(pj.at(0).get<double>(), pj.at(1).get<double>(),
                        pj.at(2).get<double>());
      c.points.push_back(ManifoldPoint::sphere2(u));
    } else if (c.u_inf.backend() == Backend::ConstK) {
      c.points.push_back(ManifoldPoint::const_k(
          c.u_inf.complex_dim(), c.u_inf.hol_k(), cmat_from_json(pj)));
    } else {
      c.points.push_back(ManifoldPoint::grassmann(c.u_inf.k0(), c.u_inf.n0(),
                                                  cmat_from_json(pj)));
    }
  }
  if (int(c.points.size()) != c.grid.M)
    throw std::invalid_argument("curve_from_json: point count != M");
  return c;
}

nlohmann::json profile_to_json(const ComplexProfile& p) {
  nlohmann::json j;
  j["grid"] = {{"L", p.grid.L}, {"M", p.grid.M}};
  j["n"] = p.n();
  nlohmann::json q = nlohmann::json::array();
  for (Eigen::Index i = 0; i < p.Q.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < p.Q.cols(); ++c)
      row.push_back({p.Q(i, c).real(), p.Q(i, c).imag()});
    q.push_back(row);
  }
  j["Q"] = q;
  return j;
}

ComplexProfile profile_from_json(const nlohmann::json& j) {
  ComplexProfile p;
  p.grid.L = j.at("grid").at("L").get<double>();
  p.grid.M = j.at("grid").at("M").get<int>();
  const int n = j.at("n").get<int>();
  p.Q = CMat(p.grid.M, n);
  for (int i = 0; i < p.grid.M; ++i)
    for (int c = 0; c < n; ++c)
      p.Q(i, c) = Cx(j.at("Q").at(i).at(c).at(0).get<double>(),
                     j.at("Q").at(i).at(c).at(1).get<double>());
  return p;
}

}  // namespace dispflow::frames
