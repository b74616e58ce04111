#pragma once

#include "dispflow/geometry.hpp"

#include <json.hpp>

namespace dispflow::frames {

inline constexpr const char* kVersion = "frames-1.0";

using geometry::ManifoldPoint;
using geometry::TangentVector;

/// Uniform-grid curve on [-L, L] with a left-end reference point. The
/// reference point stands in for the fixed end point at x -> -infinity of the
/// truncated line.
struct DiscreteCurve {
  Grid grid;
  std::vector<ManifoldPoint> points;
  ManifoldPoint u_inf;

  int n() const { return u_inf.complex_dim(); }

  struct Validation {
    double anchor_dist = 0;
    double left_speed = 0, right_speed = 0, max_speed = 0;
    double max_constraint = 0;
    bool ok(double tol = 1e-8) const {
      double scale = std::max(1.0, max_speed);
      return anchor_dist <= tol && max_constraint <= 1e-8 &&
             left_speed <= tol * scale && right_speed <= tol * scale;
    }
  };
  Validation validate() const;
};

/// Per-node orthonormal frame e_1..e_n (J-partners derived on demand).
struct ParallelFrame {
  std::vector<std::vector<TangentVector>> e;  // [node][j]
  const std::vector<TangentVector>& at(int i) const { return e[size_t(i)]; }
};

/// Per-node complex n-vector profile Q, stored as an M x n matrix.
struct ComplexProfile {
  Grid grid;
  CMat Q;  // M x n
  int n() const { return int(Q.cols()); }
};

/// Reference orthonormal basis at a point: on projector backends the
/// eigenbasis-conjugated elementary off-diagonal matrices, on the sphere a
/// deterministic unit tangent.
std::vector<TangentVector> canonical_frame(const ManifoldPoint& u_inf);

/// Discrete parallel transport of one frame from `from` to `to` through the
/// chord midpoint: project at the midpoint, project at the target, then
/// re-orthonormalize with the Hermitian Gram of the complexified frame (the
/// J-pairing is preserved exactly). Throws FrameFailure on rank collapse.
std::vector<TangentVector> transport_frame(
    const std::vector<TangentVector>& frame, const ManifoldPoint& to,
    bool via_midpoint = true);

/// Transport with the leading projection residual cancelled by combining the
/// half-step and full-step routes; this is what build_frame/reconstruct use.
std::vector<TangentVector> transport_frame_extrapolated(
    const std::vector<TangentVector>& frame, const ManifoldPoint& to);

/// Left-to-right frame construction anchored at frame_inf (node 0 frame is
/// frame_inf re-projected at points[0]).
ParallelFrame build_frame(const DiscreteCurve& curve,
                          const std::vector<TangentVector>& frame_inf);

/// Exact-holonomy frame on projector backends: e_j(x) = C(x) e_j^inf C(x)*
/// with C the co-diagonal lifting. The transport residual of this route lies
/// in the isotropy group, so frame-relative curvature coefficients match the
/// closed forms to machine precision.
ParallelFrame build_frame_lift(const DiscreteCurve& curve,
                               const std::vector<TangentVector>& frame_inf);

/// Tangent field u_x by centered differences (4th order interior, one-sided
/// 2nd order in the two-node boundary layers), projected node-wise.
std::vector<TangentVector> derivative_field(const DiscreteCurve& curve);

/// Q_j = h(u_x, e_j) + i h(u_x, J e_j) per node.
ComplexProfile hasimoto_transform(const DiscreteCurve& curve,
                                  const ParallelFrame& frame);

/// Inverse direction: integrate u and the frame jointly from the left end,
/// u' = sum_p (Re Q_p e_p + Im Q_p J e_p), with a midpoint (second-order)
/// retraction step.
DiscreteCurve reconstruct(const ComplexProfile& profile,
                          const ManifoldPoint& u_inf,
                          const std::vector<TangentVector>& frame_inf);

/// Unitary path C with C(-L) = I solving C_x = [u_x, u] C (projector
/// backends only), stepped by the exponential midpoint rule and polar-
/// corrected each step.
std::vector<CMat> co_diagonal_lift(const DiscreteCurve& curve);

/// Top-right k0 x m0 block of C* C_x, realized through the generator
/// C* [u_x, u] C (diagonal blocks vanish identically there); its negative
/// matches the Q matrix of the canonical-frame transform. Assumes the curve
/// is anchored at the coordinate origin projector.
std::vector<CMat> lift_offdiagonal_block(const DiscreteCurve& curve,
                                         const std::vector<CMat>& lift);

/// Same block from a centered finite difference of the lift itself; kept as
/// an independent cross-check (second-order accurate).
std::vector<CMat> lift_offdiagonal_block_fd(const DiscreteCurve& curve,
                                            const std::vector<CMat>& lift);

// --- serialization -------------------------------------------------------

nlohmann::json point_to_json(const ManifoldPoint& p);
ManifoldPoint point_from_json(const nlohmann::json& j);
nlohmann::json curve_to_json(const DiscreteCurve& c);
DiscreteCurve curve_from_json(const nlohmann::json& j);
nlohmann::json profile_to_json(const ComplexProfile& p);
ComplexProfile profile_from_json(const nlohmann::json& j);

}  // namespace dispflow::frames
