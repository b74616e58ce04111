#include "dispflow/tensor_lab.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dispflow::tensor_lab {

using geometry::TangentVector;

double STensor::max_abs_diff(const STensor& o) const {
  double m = 0;
  for (size_t k = 0; k < S_.size(); ++k)
    m = std::max(m, std::abs(S_[k] - o.S_[k]));
  return m;
}

STensor s_from_frame(const std::vector<TangentVector>& frame_e) {
  const int n = int(frame_e.size());
  if (n == 0) throw std::invalid_argument("s_from_frame: empty frame");
  std::vector<TangentVector> je(frame_e.size());
  for (int p = 0; p < n; ++p) je[p] = geometry::complex_structure(frame_e[p]);

  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      double d = (p == q) ? 1.0 : 0.0;
      if (std::abs(geometry::metric(frame_e[p], frame_e[q]) - d) > 1e-8 ||
          std::abs(geometry::metric(frame_e[p], je[q])) > 1e-8)
        throw FrameFailure("s_from_frame: frame not orthonormal to 1e-8");
    }

  STensor out(n);
  std::vector<Cx> A(out.idx(n - 1, n - 1, n - 1, n - 1) + 1);
  std::vector<Cx> B(A.size());
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r) {
        TangentVector Ra = geometry::curvature(frame_e[p], frame_e[q], frame_e[r]);
        TangentVector Rb = geometry::curvature(frame_e[p], je[q], frame_e[r]);
        for (int j = 0; j < n; ++j) {
          Cx a(geometry::metric(Ra, frame_e[j]), geometry::metric(Ra, je[j]));
          Cx b(geometry::metric(Rb, frame_e[j]), geometry::metric(Rb, je[j]));
          A[out.idx(j, p, q, r)] = a;
          B[out.idx(j, p, q, r)] = b;
          out.S(j, p, q, r) = 0.5 * (a + kI * b);
        }
      }
  out.set_ab(std::move(A), std::move(B));
  return out;
}

STensor s_const_k(int n, double K) {
  if (n < 1) throw std::invalid_argument("s_const_k: n >= 1");
  STensor out(n);
  for (int j = 0; j < n; ++j)
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q)
        for (int r = 0; r < n; ++r) {
          double v = 0.0;
          if (q == r && p == j) v += 1.0;
          if (p == q && r == j) v += 1.0;
          out.S(j, p, q, r) = 0.25 * K * v;
        }
  return out;
}

STensor s_grassmann(int k0, int m0) {
  if (k0 < 1 || m0 < 1) throw std::invalid_argument("s_grassmann: k0,m0 >= 1");
  const int n = k0 * m0;
  auto flat = [k0](int i1, int i2) { return i2 * k0 + i1; };
  STensor out(n);
  for (int j1 = 0; j1 < k0; ++j1)
    for (int j2 = 0; j2 < m0; ++j2)
      for (int p1 = 0; p1 < k0; ++p1)
        for (int p2 = 0; p2 < m0; ++p2)
          for (int q1 = 0; q1 < k0; ++q1)
            for (int q2 = 0; q2 < m0; ++q2)
              for (int r1 = 0; r1 < k0; ++r1)
                for (int r2 = 0; r2 < m0; ++r2) {
                  double v = 0.0;
                  if (p2 == q2 && r2 == j2 && q1 == r1 && p1 == j1) v += 1.0;
                  if (r2 == q2 && p2 == j2 && q1 == p1 && r1 == j1) v += 1.0;
                  if (v != 0.0)
                    out.S(flat(j1, j2), flat(p1, p2), flat(q1, q2),
                          flat(r1, r2)) = v;
                }
  return out;
}

CVec contract(const STensor& S, const CVec& U, const CVec& V, const CVec& W) {
  const int n = S.n();
  if (U.size() != n || V.size() != n || W.size() != n)
    throw std::invalid_argument("contract: coordinate length mismatch");
  CVec out = CVec::Zero(n);
  for (int j = 0; j < n; ++j) {
    Cx acc(0, 0);
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) {
        Cx pair = U(p) * std::conj(V(q)) - V(p) * std::conj(U(q));
        if (pair == Cx(0, 0)) continue;
        for (int r = 0; r < n; ++r) acc += S.S(j, p, q, r) * pair * W(r);
      }
    out(j) = acc;
  }
  return out;
}

double IdentityReport::max_violation() const {
  double m = 0;
  for (const auto& e : entries) m = std::max(m, e.second);
  return m;
}

std::string IdentityReport::to_json() const {
  std::ostringstream os;
  os.precision(17);
  os << "{";
  for (size_t k = 0; k < entries.size(); ++k) {
    if (k) os << ",";
    os << "\"" << entries[k].first << "\":" << entries[k].second;
  }
  os << "}";
  return os.str();
}

IdentityReport identity_report(const STensor& S) {
  const int n = S.n();
  double antisym_a = 0, sym_b = 0, bianchi_a = 0, a_from_b = 0;
  double re_a_pair = 0, im_b_pair = 0, mixed_ab_pair = 0;
  double t_swap = 0, s_outer = 0;
  for (int j = 0; j < n; ++j)
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q)
        for (int r = 0; r < n; ++r) {
          Cx apqr = S.curv_a(j, p, q, r);
          Cx bpqr = S.curv_b(j, p, q, r);
          antisym_a = std::max(antisym_a,
                               std::abs(apqr + S.curv_a(j, q, p, r)));
          sym_b = std::max(sym_b, std::abs(bpqr - S.curv_b(j, q, p, r)));
          bianchi_a = std::max(
              bianchi_a,
              std::abs(apqr + S.curv_a(j, q, r, p) + S.curv_a(j, r, p, q)));
          a_from_b = std::max(
              a_from_b, std::abs(apqr - kI * (S.curv_b(j, q, r, p) -
                                              S.curv_b(j, r, p, q))));
          re_a_pair = std::max(
              re_a_pair, std::max(std::abs(apqr.real() -
                                           S.curv_a(q, r, j, p).real()),
                                  std::abs(apqr.real() -
                                           S.curv_a(p, j, r, q).real())));
          im_b_pair = std::max(
              im_b_pair, std::max(std::abs(bpqr.imag() -
                                           S.curv_b(q, r, j, p).imag()),
                                  std::abs(bpqr.imag() -
                                           S.curv_b(p, j, r, q).imag())));
          mixed_ab_pair = std::max(
              mixed_ab_pair,
              std::max(std::abs(apqr.imag() - S.curv_b(q, r, j, p).real()),
                       std::abs(apqr.imag() + S.curv_b(p, j, r, q).real())));
          t_swap = std::max(t_swap,
                            std::abs(S.t_view(j, p, q, r) - S.S(j, q, p, r)));
          s_outer =
              std::max(s_outer, std::abs(S.S(j, p, q, r) - S.S(j, r, q, p)));
        }
  IdentityReport rep;
  rep.entries = {{"curv_a_antisymmetric_pq", antisym_a},
                 {"curv_b_symmetric_pq", sym_b},
                 {"curv_a_first_bianchi", bianchi_a},
                 {"curv_a_from_curv_b", a_from_b},
                 {"curv_a_real_pair_symmetry", re_a_pair},
                 {"curv_b_imag_pair_symmetry", im_b_pair},
                 {"mixed_ab_pair_symmetry", mixed_ab_pair},
                 {"t_equals_s_qp_swap", t_swap},
                 {"s_outer_pr_symmetry", s_outer}};
  return rep;
}

}  // namespace dispflow::tensor_lab
