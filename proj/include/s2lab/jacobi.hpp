/// @file jacobi.hpp
/// @brief Residual fields for the differential inequalities satisfied by
///        Delta u (flat) and by the mean curvature H (graph).
///
/// Two "trace" inequalities are checked pointwise, in the form
/// left-minus-right so that nonnegativity is the pass condition:
///
///   flat:    Delta_F(Delta u) - (2-eps) |grad_F Delta u|^2 / Delta u
///              - Delta f + C(eps) |Df|^2                      >= 0
///   graph:   Delta_F H - (2-eps) |grad_F H|^2 / H
///              - Delta_M f + C(eps) f^{-1} |grad_M f|^2       >= 0
///
/// and a "boundary" variant for phi(w-u) * A, A = Delta u or H, with the
/// quartic cutoff phi(t) = (t^+)^4, which vanishes on {w <= u} and therefore
/// integrates by parts with no boundary term.
///
/// The penalty constant C(eps) = 18/eps + 3 is a fixed policy (any large
/// enough constant makes the inequality true; pinning one makes the reports
/// comparable across runs) and is recorded in every report.  Derivatives of
/// the data f come from its bundle, so analytic and finite-difference inputs
/// are distinguished by provenance.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "s2lab/fields.hpp"
#include "s2lab/sigma2.hpp"

namespace s2lab {

// ---------------------------------------------------------------------------
// quartic cutoff profile
// ---------------------------------------------------------------------------

/// phi(t) = (t^+)^4, the C^2 cutoff used by the boundary inequality.
double cutoff_phi(double t);
/// phi'(t) = 4 (t^+)^3.
double cutoff_phi_d1(double t);
/// phi''(t) = 12 (t^+)^2.
double cutoff_phi_d2(double t);

/// Checks the concavity contract  phi'' * phi >= (2/3) phi'^2  at each
/// sample (exactly 12 t^6 >= 32/3 t^6 for t > 0, 0 >= 0 otherwise).
bool phi_contract_check(const std::vector<double>& samples);

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

enum class JacobiVariant { hessian, curvature };

const char* jacobi_variant_name(JacobiVariant v);

/// Penalty constant policy C(eps) = 18/eps + 3.
double default_penalty_constant(double eps);

struct ConstantPolicy {
    double c_eps = 0.0;
    std::string formula;
};

struct JacobiReport {
    ScalarField residual;      ///< pointwise left-minus-right value
    ScalarField slack;         ///< retained (eps/2) |grad_F A|^2 / A term
    RegionMask mask;           ///< nodes the minimum was taken over
    double min_residual = 0.0;
    Index argmin = -1;         ///< node of the minimum; -1 if mask empty
    double epsilon = 0.0;
    ConstantPolicy constant_policy;
    JacobiVariant variant = JacobiVariant::hessian;
    DerivProvenance f_provenance = DerivProvenance::finite_difference;
};

// ---------------------------------------------------------------------------
// trace inequalities
// ---------------------------------------------------------------------------

/// Flat-Laplacian inequality; requires eps in (0,1), Delta u > 0 and f >= 1
/// on the mask.  Pass penalty_constant > 0 to override the C(eps) policy.
JacobiReport trace_jacobi_hessian(const FieldBundle& u, const FieldBundle& f,
                                  double eps, const RegionMask& mask,
                                  double penalty_constant = -1.0);

/// Mean-curvature inequality with surface operators; requires eps in (0,1],
/// H > 0 and f > 0 on the mask.
JacobiReport trace_jacobi_curvature(const FieldBundle& u, const FieldBundle& f,
                                    double eps, const RegionMask& mask,
                                    double penalty_constant = -1.0);

// ---------------------------------------------------------------------------
// boundary inequality
// ---------------------------------------------------------------------------

/// Residual of  Delta_F[phi(w-u) A] - phi'(w-u) Delta_F(w-u) A
///              - [Delta f - C * penalty] phi(w-u)
/// on the contact set {w > u} (zero elsewhere), A = Delta u or H by variant,
/// penalty = |Df|^2 or f^{-1} |grad_M f|^2.  The constant multiplying the
/// penalty is C(1) = 21 under the same policy (the eps-split inside the
/// proof is fixed at 1/2 and no eps remains in the displayed inequality).
JacobiReport boundary_jacobi(const FieldBundle& u, const FieldBundle& w,
                             const FieldBundle& f, JacobiVariant variant,
                             const RegionMask& mask,
                             double penalty_constant = -1.0);

// ---------------------------------------------------------------------------
// counterexample scan
// ---------------------------------------------------------------------------

struct NonconvexScanRow {
    double param = 0.0;
    ConeClass worst_cone = ConeClass::convex;  ///< weakest cone label on mask
    double min_residual = 0.0;
    bool below_tolerance = false;  ///< residual dipped below -tolerance
};

struct NonconvexScanReport {
    std::vector<NonconvexScanRow> rows;
    double eps = 0.0;
    double tolerance = 0.0;
};

/// Evaluates the flat trace residual across a parametric family without
/// enforcing the convexity/f >= 1 hypotheses, to exhibit where the
/// inequality stops holding.  make_f receives the member's bundle (so f can
/// be manufactured from u).  Negative outcomes are reported, not thrown.
NonconvexScanReport nonconvex_scan(
    const std::vector<double>& params,
    const std::function<FieldBundle(double)>& make_u,
    const std::function<FieldBundle(const FieldBundle&)>& make_f,
    const RegionMask& mask, double eps, double tolerance);

}  // namespace s2lab
