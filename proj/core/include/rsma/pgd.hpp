#pragma once

#include <complex>
#include <string>
#include <vector>

#include "rsma/model.hpp"
#include "rsma/projection.hpp"

namespace rsma {

/// Quadratic-transform auxiliaries. z0 is tied to the weakest (index 0) user.
struct AuxiliaryVars {
  std::complex<double> z0;
  CVector z;  // length U
};

struct PhiValues {
  double phi0 = 1.0;
  RVector phi;  // length U

  bool all_positive() const { return phi0 > 0.0 && (phi.array() > 0.0).all(); }
};

/// Gradients of the penalty objective with respect to R^c, v0 and v_k, plus
/// the per-term pieces the unfolded layers reweight.
///
/// Complex gradients use the real-coordinate convention
/// d/dRe(v) + i d/dIm(v), so a step along them is an ascent step.
struct GradientSet {
  RVector d_rc;          // alpha_k - lambda
  CVector d_v0;          // M
  CMatrix d_vk;          // M x U
  CMatrix zeta;          // M x U, zeta_k (not yet divided by Phi_k)
  CMatrix o;             // M x U, o_k (already divided by Phi_0)
  /// beta[k].col(j) = beta_{j,k}; column k is zero.
  std::vector<CMatrix> beta;
  PhiValues phi;
};

struct PgdConfig {
  RVector rate_step;    // l_{1,k}
  double common_step = 0.05;  // l_2
  RVector private_step; // l_{3,k}
  double lambda = 2.0;
  int max_iters = 500;
  double tol = 1e-6;    // |WSR_{i+1} - WSR_i| stopping threshold
  bool backtracking = false;
  int max_halvings = 30;

  void validate(const ScenarioConfig& scenario) const;
};

/// Fixed steps 0.05, lambda = 2 max_k alpha_k, no backtracking.
PgdConfig default_pgd_config(const ScenarioConfig& scenario);

/// Reference solver settings: backtracking on, 2000 iterations.
PgdConfig oracle_pgd_config(const ScenarioConfig& scenario);

AuxiliaryVars update_aux(const ChannelSample& sample, const BeamState& state);

/// Phi_k = 1 + 2 Re{conj(z_k) h_k^H v_k} - |z_k|^2 (sigma^2 + sum_{j!=k} |h_k^H v_j|^2),
/// Phi_0 likewise with h_0, v0 and the full private interference sum.
PhiValues phi(const ChannelSample& sample, const BeamState& state, const AuxiliaryVars& aux);

/// sum_k alpha_k (R_k^c + log2 Phi_k) - lambda (sum_k R_k^c - log2 Phi_0).
/// Throws NumericalError when any Phi is nonpositive.
double penalty_objective(const ChannelSample& sample, const BeamState& state,
                         const AuxiliaryVars& aux, double lambda);

GradientSet gradients(const ChannelSample& sample, const BeamState& state,
                      const AuxiliaryVars& aux, double lambda);

/// Gradient-ascent update followed by projection (always mode).
BeamState pgd_step(const ChannelSample& sample, const BeamState& state, const AuxiliaryVars& aux,
                   const PgdConfig& config);

struct PgdTracePoint {
  int iter = 0;
  double wsr = 0.0;
  bool feasible = false;
};

struct PgdResult {
  BeamState best;
  double best_wsr = 0.0;
  bool best_feasible = false;
  std::vector<PgdTracePoint> trace;
  int iterations = 0;
  bool converged = false;
};

/// Projects `init`, then repeats update_aux -> pgd_step until the WSR change
/// drops below config.tol or max_iters is reached. Returns the best feasible
/// iterate (best overall if none was feasible). With backtracking, a step that
/// lowers WSR is retried with halved steps.
PgdResult pgd_solve(const ChannelSample& sample, const PgdConfig& config, const BeamState& init);

/// CSV with columns iter,wsr,feasible.
std::string trace_csv(const std::vector<PgdTracePoint>& trace);

}  // namespace rsma
