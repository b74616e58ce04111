#pragma once

#include "dispflow/frames.hpp"

namespace dispflow::flow_geo {

inline constexpr const char* kVersion = "flow_geo-1.0";

using frames::DiscreteCurve;
using geometry::TangentVector;

struct GeoFlowState {
  DiscreteCurve curve;
  double t = 0.0;
  FlowParams params;
};

/// Iterated covariant derivative along the curve: tangent projection of the
/// centered difference (4th order interior, one-sided 2nd order in the
/// two-node boundary layers), applied `order` times.
std::vector<TangentVector> covariant_dx(const DiscreteCurve& curve,
                                        const std::vector<TangentVector>& field,
                                        int order = 1);

/// Right-hand side a J D^3 u_x + lambda J D u_x + b R(D u_x, u_x) J u_x
/// + c R(J u_x, u_x) D u_x, evaluated through the backend's curvature.
std::vector<TangentVector> rhs_geo(const GeoFlowState& state);

/// Extrinsic evaluation of the two-sphere specialization
/// u ^ { a u_xxxx + u_xx + (5a-b)(u_xx . u_x) u_x + (5a-b)/2 (u_x . u_x) u_xx },
/// valid for lambda = 1, c = 3(a-b)/2.
std::vector<TangentVector> rhs_sphere_extrinsic(const GeoFlowState& state);

/// Classical RK4 in the ambient space with node-wise retraction; the left
/// end stays pinned to u_inf. On retraction failure the step is retried with
/// dt/2, at most 10 times; the returned state records the dt actually taken.
GeoFlowState step_geo(const GeoFlowState& state, double dt);

/// Stability bound sigma * dx^4 / |a| for the explicit scheme.
double stable_dt(const DiscreteCurve& curve, const FlowParams& params,
                 double sigma = 0.2);

/// E = alpha/2 int h(u_x,u_x) + beta/2 int h(Du_x,Du_x)
///   + gamma int h(R(u_x,Ju_x)Ju_x,u_x), by the trapezoid rule.
double energy(const DiscreteCurve& curve, double alpha, double beta,
              double gamma);

}  // namespace dispflow::flow_geo
