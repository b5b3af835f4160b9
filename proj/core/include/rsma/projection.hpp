#pragma once

#include <string>

#include "rsma/model.hpp"

namespace rsma {

/// Beam powers below this are treated as "no direction".
inline constexpr double kZeroPowerEps = 1e-12;

/// Beams split into powers and unit directions. Ordering is private beams
/// first, common beam last: [v_1, ..., v_U, v_0].
struct PowerSplit {
  RVector a;        // squared norms, length U+1
  CMatrix v_bar;    // M x (U+1) unit-norm columns
};

/// Affine system A_aug [omega; psi] = b with A_aug = [A | -I]. Rows 0..U-1 are
/// the QoS rows, row U is the power row (all -1).
struct ProjectionSystem {
  RVector a;       // powers being projected, length U+1
  CMatrix v_bar;   // directions the powers are attached to
  RMatrix a_aug;   // (U+1) x 2(U+1)
  RVector b;       // [r_k sigma^2 ..., -(P_max - P_c)]

  int size() const { return static_cast<int>(a.size()); }
  auto constraint_matrix() const { return a_aug.leftCols(size()); }
};

struct ProjectedPowers {
  RVector omega;   // length U+1, same ordering as PowerSplit
  RVector psi;     // slacks, length U+1
  double residual = 0.0;  // ||A_aug omega_tilde - b||
};

enum class ProjectionMode { always, skip_if_feasible };

/// a_k = ||v_k||^2 and v_bar_k = v_k / sqrt(a_k). Beams with a_k below
/// kZeroPowerEps get the unit-normalized matched filter h_k/||h_k|| instead
/// (the common beam uses the weakest user's channel).
PowerSplit power_split(const ChannelSample& sample, const BeamState& state);

ProjectionSystem build_constraint_system(const ChannelSample& sample, const PowerSplit& split);

/// Closed-form Euclidean projection of [a; 0] onto {x : a_aug x = b}:
///   x = a~ - a_aug^T (a_aug a_aug^T)^+ (a_aug a~ - b).
/// Trailing columns of a_aug beyond a.size() are slack coordinates starting at 0.
/// The Gram matrix is factored by Cholesky, falling back to an eigenvalue
/// pseudo-inverse (cutoff 1e-10 * largest eigenvalue) when it is near singular.
/// Throws NumericalError when the result is not finite.
ProjectedPowers affine_project(const RVector& a, const RMatrix& a_aug, const RVector& b);
ProjectedPowers affine_project(const ProjectionSystem& system);

/// affine_project followed by an active-set refinement: a negative slack pins
/// its row to equality (slack column dropped) and a negative power is held at
/// zero by an extra equality row; the closed form is re-solved until neither
/// occurs. Pinned rows target b_i plus a 1e-12 relative interior margin so
/// rounding cannot flip a strict feasibility check. Returned powers are
/// nonnegative and sum to at most P_max - P_c (rescaled if the equality system
/// is inconsistent).
ProjectedPowers project_powers(const ProjectionSystem& system);

/// v_k = sqrt(max(omega_k, 0)) v_bar_k. Returns beams with a zero common-rate vector.
BeamState apply_power(const CMatrix& v_bar, const RVector& omega);

/// The user with the largest weight (lowest index on ties) gets the whole
/// common-stream capacity min_k c_k; everyone else gets 0.
RVector project_common_rate(const ChannelSample& sample, const BeamState& state);

/// power_split -> build_constraint_system -> project_powers -> apply_power ->
/// project_common_rate. In skip_if_feasible mode, beams that already meet the
/// power and QoS constraints (tol 0) are kept and only the common rate is
/// reallocated.
BeamState project(const ChannelSample& sample, const BeamState& state,
                  ProjectionMode mode = ProjectionMode::always);

/// JSON dump of (A_aug, b, a, omega~) for failure triage.
std::string projection_debug_json(const ProjectionSystem& system, const ProjectedPowers& result);

}  // namespace rsma
