#pragma once

#include "dispflow/geometry.hpp"

#include <map>

namespace dispflow::tensor_lab {

inline constexpr const char* kVersion = "tensor_lab-1.0";

/// Frame-relative curvature coefficients at one node.
///
/// S(j,p,q,r) packs the two real component families of the curvature tensor
/// in a parallel frame {e_j, Je_j}:
///   curvA(j,p,q,r) = h(R(e_p,e_q)e_r, e_j)    + i h(R(e_p,e_q)e_r, Je_j)
///   curvB(j,p,q,r) = h(R(e_p,Je_q)e_r, e_j)   + i h(R(e_p,Je_q)e_r, Je_j)
///   S = (curvA + i curvB) / 2,   T = (-curvA + i curvB) / 2.
/// When only S is stored, curvA/curvB are derived through the index-swap
/// relation T(j,p,q,r) = S(j,q,p,r).
class STensor {
 public:
  STensor() = default;
  explicit STensor(int n) : n_(n), S_(size_t(n) * n * n * n, Cx(0, 0)) {}

  int n() const { return n_; }

  Cx& S(int j, int p, int q, int r) { return S_[idx(j, p, q, r)]; }
  const Cx& S(int j, int p, int q, int r) const { return S_[idx(j, p, q, r)]; }

  bool has_ab() const { return !A_.empty(); }
  Cx curv_a(int j, int p, int q, int r) const {
    return has_ab() ? A_[idx(j, p, q, r)]
                    : S(j, p, q, r) - S(j, q, p, r);
  }
  Cx curv_b(int j, int p, int q, int r) const {
    return has_ab() ? B_[idx(j, p, q, r)]
                    : -kI * (S(j, p, q, r) + S(j, q, p, r));
  }
  Cx t_view(int j, int p, int q, int r) const {
    return 0.5 * (-curv_a(j, p, q, r) + kI * curv_b(j, p, q, r));
  }

  void set_ab(std::vector<Cx> A, std::vector<Cx> B) {
    A_ = std::move(A);
    B_ = std::move(B);
  }
  size_t idx(int j, int p, int q, int r) const {
    return ((size_t(j) * n_ + p) * n_ + q) * n_ + r;
  }

  double max_abs_diff(const STensor& o) const;

 private:
  int n_ = 0;
  std::vector<Cx> S_, A_, B_;
};

/// Per-node S field. `constant_s` marks locally-symmetric backends where the
/// coefficients are x-independent; the x-derivative couplings are then
/// suppressed exactly instead of being computed as ~0 numbers.
struct STensorField {
  int n = 0;
  bool constant_s = true;
  std::vector<STensor> nodes;  // size 1 when constant_s

  const STensor& at(int i) const {
    return constant_s ? nodes.front() : nodes[size_t(i)];
  }
};

/// Assemble S from the curvature tensor at one node of an orthonormal frame
/// {e_1..e_n} (the J-partners are derived). Throws FrameFailure when the
/// frame is not orthonormal to 1e-8.
STensor s_from_frame(const std::vector<geometry::TangentVector>& frame_e);

/// Closed form for constant holomorphic sectional curvature K:
/// S(j,p,q,r) = K/4 (delta_qr delta_pj + delta_pq delta_rj).
STensor s_const_k(int n, double K);

/// Closed form for the Grassmannian of k0-planes with m0 = n0 - k0,
/// integer-valued in {0,1,2}; indices flatten as j = j2*k0 + j1 (0-based).
STensor s_grassmann(int k0, int m0);

/// <R(U,V)W>_j from frame coordinates of U, V, W.
CVec contract(const STensor& S, const CVec& U, const CVec& V, const CVec& W);

struct IdentityReport {
  // name -> max violation over all indices
  std::vector<std::pair<std::string, double>> entries;
  double max_violation() const;
  std::string to_json() const;
};

/// Machine-check of the frame-coefficient identities: antisymmetry/symmetry
/// in (p,q), the first Bianchi sum, the A-from-B reconstruction, the three
/// pair-symmetry families, the T/S index swap, and the outer (p,r) symmetry
/// of S.
IdentityReport identity_report(const STensor& S);

}  // namespace dispflow::tensor_lab
