#pragma once

#include "dispflow/flow_geo.hpp"
#include "dispflow/flow_q.hpp"

#include <filesystem>

namespace dispflow::bench {

inline constexpr const char* kVersion = "bench-1.0";

using geometry::Backend;
using geometry::ManifoldPoint;

struct BackendSpec {
  Backend kind = Backend::Grassmann;
  int k0 = 1, n0 = 2;  // Grassmann
  int n = 1;           // ConstK
  double K = 4.0;      // ConstK

  ManifoldPoint origin() const;
  int complex_dim() const;
  std::string label() const;

  static BackendSpec sphere2();
  static BackendSpec const_k(int n, double K);
  static BackendSpec grassmann(int k0, int n0);
};

struct InitialSpec {
  std::string profile = "gaussian_envelope";
  double amplitude = 0.2;
  double width = 2.0;
  double carrier = 0.5;
  uint64_t seed = 7;
};

struct ExperimentConfig {
  BackendSpec backend;
  Grid grid;
  FlowParams params = FlowParams::from_energy(0.0, 1.0, 0.0);
  InitialSpec initial;
  std::string system = "geo";  // cmd_run: "geo" | "q"
  double horizon = 0.2;
  int samples = 4;
  double sigma = 0.2;         // explicit geo stability safety factor
  double dt_q_factor = 0.25;  // dt_q = factor * dx^2
  std::vector<int> refinements = {129, 257, 513};
  double tol_scale = 1.0;
  uint64_t seed = 0;
  std::string out_dir;
  double inject_s_perturbation = 0.0;  // detector-sanity hook
  std::vector<BackendSpec> verify_backends;

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  uint64_t hash() const { return fnv1a(to_json().dump()); }
};

/// Named initial profiles on a grid: M x n complex data.
CMat initial_profile(const InitialSpec& init, const BackendSpec& backend,
                     Grid grid);

/// Curve built from the named profile through the inverse transform.
frames::DiscreteCurve initial_curve(const InitialSpec& init,
                                    const BackendSpec& backend, Grid grid);

struct CheckResult {
  std::string name;
  double value = 0;
  double tolerance = 0;
  bool pass = false;
};

struct Report {
  std::vector<CheckResult> checks;
  nlohmann::json extra;
  bool pass() const;
  nlohmann::json to_json(const ExperimentConfig& cfg) const;
};

/// Identity suites, closed-form agreements, specialization equalities and
/// the lift/transform block identity.
Report cmd_verify(const ExperimentConfig& cfg);

/// Geometric flow vs directly integrated transformed system across grid
/// refinements, with gauge-robust discrepancy metrics.
Report cmd_equiv(const ExperimentConfig& cfg);

/// Single-system run; writes CSV time series and JSON snapshots into
/// cfg.out_dir, returns the report (with file paths in `extra`).
Report cmd_run(const ExperimentConfig& cfg);

/// Roundtrip / transport / block-identity convergence orders.
Report cmd_convergence(const ExperimentConfig& cfg);

/// Gauge-robust distance pair between two profiles on the same grid:
/// {relative L2 of |Q| profiles, phase-aligned relative L2}.
std::pair<double, double> gauge_robust_distance(const CMat& Qa, const CMat& Qb,
                                                Grid grid);

/// Transformed-system spec matching a backend on a grid.
flow_q::QSystemSpec make_q_spec(const BackendSpec& backend,
                                const FlowParams& p, Grid grid);

}  // namespace dispflow::bench
