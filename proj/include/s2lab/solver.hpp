/// @file solver.hpp
/// @brief Damped Newton solver for the discrete sigma2 Hessian equation with
///        Dirichlet data, plus the manufactured-solution catalog and the
///        convexity certificate.
///
/// Discretization.  Interior nodes are those at least two layers away from
/// every box face; the outer two layers carry Dirichlet data so every
/// centred second-difference stencil (19 points in 3d: star for the diagonal
/// entries, plaquette corners for the mixed ones) reads only defined values.
/// The residual is  R(u) = sigma2(D2_h u) - f  at interior nodes.
///
/// Newton step.  sigma2 is quadratic in the Hessian, so the directional
/// derivative along v is exactly  tr(F D2_h v)  with F = (Delta u) I - D2 u
/// frozen at the iterate; the linear system is solved matrix-free with
/// BiCGSTAB and Jacobi (diagonal) preconditioning, diag = -(2/h^2) tr F.
/// Steps are damped by backtracking on the sup-norm of the residual, and —
/// under the `project` policy — rejected if they would leave the ellipticity
/// cone (sigma1 > 0 and sigma2 > 0 at every interior node) from inside it.
///
/// Initial iterate.  Unless a warm start is supplied, the solver first does
/// one linear solve  Delta u0 = sqrt(2n/(n-1) f)  with the given boundary
/// data: the radial-quadratic trace surrogate of the equation, which lands
/// well inside the cone for the convex data this lab studies.

#pragma once

#include <string>
#include <vector>

#include "s2lab/fields.hpp"
#include "s2lab/masks.hpp"

namespace s2lab {

// ---------------------------------------------------------------------------
// options and diagnostics
// ---------------------------------------------------------------------------

enum class ConvexityPolicy {
    monitor,  ///< record cone membership only
    project   ///< reject steps that exit the cone from inside it
};

struct SolveOptions {
    int max_iters = 30;
    double residual_tol = 1e-10;    ///< interior sup-norm target
    double backtrack_factor = 0.5;  ///< step shrink per rejection, in (0,1)
    int max_backtracks = 20;
    ConvexityPolicy convexity = ConvexityPolicy::project;
    double linear_tol = 1e-2;       ///< inexact-Newton cap (relative residual)
    int max_linear_iters = 4000;
};

struct ConeSummary {
    Index convex = 0;
    Index strictly_2_convex = 0;
    Index weakly_2_convex = 0;
    Index outside = 0;
};

struct SolveDiagnostics {
    int iterations = 0;                    ///< accepted Newton steps
    std::vector<double> residual_history;  ///< sup norms, initial + accepted
    bool converged = false;
    std::string abort_reason;              ///< empty on success
    double f_min = 0.0;                    ///< min forcing over the interior
    double min_hessian_eig = 0.0;          ///< final-iterate certificate
    bool convexity_pass = false;
    ConeSummary cone;                      ///< final-iterate cone census
};

struct SolveResult {
    ScalarField u;
    SolveDiagnostics diag;
};

/// Unknown-node mask: two full layers inside every face.
RegionMask solver_interior(const Grid& grid);

/// Dirichlet-node mask: the complement (outermost two layers).
RegionMask solver_boundary(const Grid& grid);

/// Solves sigma2(D2_h u) = f at interior nodes with u fixed to `boundary`
/// on the outer two layers.  `initial`, when given, seeds the Newton loop
/// (its boundary layers are overwritten by `boundary`).  Throws
/// std::domain_error when min f <= 0 on the interior; aborts (converged =
/// false, abort_reason set) on line-search failure, cone exit or iteration
/// exhaustion.
SolveResult solve_dirichlet(const ScalarField& f, const ScalarField& boundary,
                            const SolveOptions& opts = {},
                            const ScalarField* initial = nullptr);

// ---------------------------------------------------------------------------
// residual / linearization kernels (shared with tests and audits)
// ---------------------------------------------------------------------------

/// sigma2(D2_h u) - f at interior nodes, 0 elsewhere.
ScalarField sigma2_residual_field(const ScalarField& u, const ScalarField& f,
                                  const RegionMask& interior);

/// Exact directional derivative  tr(F(D2_h u) D2_h v)  at interior nodes,
/// 0 elsewhere (v is read as 0 outside the interior mask is NOT assumed;
/// the caller controls v).
ScalarField linearized_apply(const ScalarField& u, const ScalarField& v,
                             const RegionMask& interior);

// ---------------------------------------------------------------------------
// manufactured-solution catalog
// ---------------------------------------------------------------------------

struct ManufacturedParams {
    std::vector<double> diag = {1.0, 2.0, 3.0};  ///< quadratic case spectrum
    double eps = 0.1;   ///< cosine-product amplitude, keep < 1/3 for convexity
    double beta = 0.5;  ///< radial quartic coefficient, >= 0
    int k = 1;          ///< oscillation count for the forcing family
};

struct ManufacturedCase {
    FieldBundle u_exact;  ///< analytic bundle; for the forcing family this is
                          ///< the reference quadratic, not a solution
    bool has_exact = true;
    ScalarField f;        ///< sigma2 of the exact Hessian (or the family law)
    ScalarField boundary; ///< u_exact sampled everywhere; solver reads layers
};

/// Catalog names: quadratic, paraboloid_perturbed, exp_sum, radial_quartic,
/// f_oscillatory_family.  The forcing family is
///   f_k = 1 + sin(k x_1) / (2k),
/// whose Lipschitz norm stays <= 1/2 while the second-derivative norm grows
/// like k/2; its boundary data is the k-independent convex quadratic with
/// sigma2 = 3/2 (the family's supremum), so sweep members differ only in f.
/// Throws std::invalid_argument for unknown names or non-convex parameters.
ManufacturedCase manufactured_case(const std::string& name, const Grid& grid,
                                   const ManufacturedParams& params = {});

// ---------------------------------------------------------------------------
// convexity certificate
// ---------------------------------------------------------------------------

struct ConvexityCertificate {
    double min_eig = 0.0;   ///< min FD-Hessian eigenvalue over the mask
    double hess_sup = 0.0;  ///< max |eigenvalue| over the mask
    bool pass = false;      ///< min_eig >= -1e-8 * hess_sup
};

ConvexityCertificate convexity_certificate(const ScalarField& u, const RegionMask& mask);

}  // namespace s2lab
