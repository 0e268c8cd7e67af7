/// @file audit.hpp
/// @brief End-to-end orchestration and reporting.
///
/// Two entry points share one machinery:
///
///  * run_full_pipeline — for every sweep member: solve the Dirichlet problem,
///    certify convexity, normalize, measure the tube gap, build and verify the
///    barrier, extract the contact region and quartic cutoff, evaluate both
///    Jacobi inequalities, run the L^p recursion ledger and the sup-ratio
///    comparison.  Stages run on every grid spacing in the config; the row
///    reports the finest grid and the drift against the coarsest one (the
///    barrier is measured once, on the coarsest grid, and reused as a closed
///    form so the drift reflects quadrature only).
///
///  * run_independence_experiment — the headline study: sweep the oscillation
///    count k of the forcing family f_k = 1 + sin(k x1)/(2k), whose Lipschitz
///    norm stays below 1/2 while its second derivatives grow linearly in k,
///    and record the solution's Laplacian at the origin.  The summary asserts
///    the spread max/min of that value stays below the configured tolerance:
///    interior curvature of the solutions tracks the Lipschitz modulus of the
///    forcing, not its higher derivatives.  Sweep members share boundary data
///    and differ only in f, so each member's solve warm-starts from the
///    previous member's solution on the same grid.
///
/// Members whose solve diverges mark the report incomplete; members that fail
/// the convexity certificate (or any mathematical hypothesis downstream,
/// reported as std::domain_error by a stage) are routed to the
/// out-of-hypothesis list and never produce a row.  Convexity is certified on
/// the inscribed unit ball — the region the interior estimate concerns —
/// because box Dirichlet data bends solutions near the box edges regardless
/// of the sweep member.  Plumbing errors (std::invalid_argument,
/// std::runtime_error) propagate with a stage tag.
///
/// Reports serialize to JSON (bit-exact round trip), CSV rows and plot-data
/// CSV files; identical config + seed reproduce byte-identical files.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "s2lab/fields.hpp"

namespace s2lab {

struct AuditConfig {
    int dimension = 3;
    std::vector<double> h_list;  ///< >= 2 spacings (refinement stability)
    std::string family = "f_oscillatory_family";
    std::vector<double> sweep;   ///< nonempty; meaning depends on the family
    double eps = 0.5;            ///< Jacobi trace-inequality epsilon
    double tube_radius = 0.5;
    int p_max = 8;               ///< L^p ledger depth
    std::string out_dir;         ///< empty: keep everything in memory
    std::uint64_t seed = 20240901;
    double half_width = 2.0;     ///< box half-width; >= 1 (unit-ball stages)
    double spread_tol = 1.2;     ///< spread acceptance knob, echoed in manifest
    int max_solver_iters = 30;
    std::string mode = "independence";  ///< "independence" | "full_pipeline"
};

/// Parses and validates; unknown keys are rejected.  Throws
/// std::invalid_argument on malformed text or invariant violations.
AuditConfig audit_config_from_json(const std::string& json_text);
std::string audit_config_to_json(const AuditConfig& cfg);

/// One certified sweep member, measured on the finest grid.
struct AuditRow {
    double param = 0.0;
    double h = 0.0;                 ///< finest spacing (the row's grid)
    double lip_f = 0.0;             ///< FD Lipschitz constant of the forcing
                                    ///< (oscillatory family: central stencils
                                    ///< on a grid resolving every oscillation)
    double c2_proxy = 0.0;          ///< max FD second difference of f
                                    ///< (oscillatory family: same fine grid)
    double c2_solve_grid = 0.0;     ///< second-difference proxy on the solve grid
    double c2_closed_form = -1.0;   ///< analytic bound; -1 when unavailable
    double gap_delta = 0.0;         ///< measured tube gap (coarse grid, frozen)
    double trace_origin = 0.0;      ///< Laplacian of the solution at x = 0
    double trace_jacobi_min = 0.0;
    double boundary_jacobi_min = 0.0;
    double min_jacobi_residual = 0.0;  ///< min of the two reports
    double max_rho = 0.0;           ///< L^p ledger growth constant
    double c11_ratio = 0.0;         ///< sup-versus-integral comparison
    double rho_drift = 0.0;         ///< |coarse-fine| / fine, frozen barrier
    double c11_drift = 0.0;
    bool convexity_pass = false;    ///< always true for emitted rows
    std::vector<double> rho_profile;  ///< finest grid, p = 1 .. p_max - 1
};

struct AuditSummary {
    double trace_min = 0.0;
    double trace_max = 0.0;
    double spread = 0.0;     ///< trace_max / trace_min over certified rows
    double lip_max = 0.0;
    double c2_ratio = 0.0;   ///< max / min of the C^2 proxies across the sweep
    double spread_tol = 1.2;
    bool spread_ok = false;
    bool complete = false;   ///< false when any member's solve diverged
    int certified = 0;
    int excluded = 0;
};

struct AuditReport {
    AuditConfig config;
    std::string mode;
    std::vector<AuditRow> rows;                  ///< certified members only
    std::vector<std::string> out_of_hypothesis;  ///< stage-tagged exclusions
    AuditSummary summary;
};

/// Families: the manufactured catalog (param -> quadratic diagonal value,
/// perturbation eps, quartic beta, oscillation count k) plus
/// "two_convex_quadratic" (param t in [0,1] interpolates the boundary data
/// from the identity quadratic to a trace-positive saddle -- a solvable
/// problem whose solution fails the convexity certificate, exercising the
/// out-of-hypothesis route).
AuditReport run_full_pipeline(const AuditConfig& cfg);

/// Requires family == "f_oscillatory_family" and integer sweep values >= 1.
/// Rows and spread use the finest grid; the refinement drift columns come
/// from the coarsest one.  Solves warm-start from the previous member (the
/// Dirichlet data is k-independent by construction).
AuditReport run_independence_experiment(const AuditConfig& cfg);

std::string report_to_json(const AuditReport& report);
AuditReport report_from_json(const std::string& json_text);

/// Writes report.json, rows.csv, plot_trace_vs_param.csv,
/// plot_rho_profile.csv and manifest.json under out_dir; returns the paths.
std::vector<std::string> emit_reports(const AuditReport& report,
                                      const std::string& out_dir);

}  // namespace s2lab
