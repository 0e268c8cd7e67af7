#include "s2lab/jacobi.hpp"

#include <cmath>
#include <stdexcept>

#include "s2lab/fd.hpp"
#include "s2lab/graph_frame.hpp"

namespace s2lab {

namespace {

/// F : S with both arguments packed upper-triangular (off-diagonals doubled).
double packed_contract(const double* F, const double* S, int dim) {
    double total = 0.0;
    int k = 0;
    for (int i = 0; i < dim; ++i) {
        total += F[k] * S[k];
        ++k;
        for (int j = i + 1; j < dim; ++j, ++k) total += 2.0 * F[k] * S[k];
    }
    return total;
}

/// F^{ij} a_i b_j with packed F.
double packed_bilinear(const double* F, const double* a, const double* b, int dim) {
    double total = 0.0;
    int k = 0;
    for (int i = 0; i < dim; ++i) {
        total += F[k] * a[i] * b[i];
        ++k;
        for (int j = i + 1; j < dim; ++j, ++k) total += F[k] * (a[i] * b[j] + a[j] * b[i]);
    }
    return total;
}

double trace_packed(const double* S, int dim) {
    double t = 0.0;
    for (int i = 0; i < dim; ++i) t += S[sym_index(dim, i, i)];
    return t;
}

void check_bundle(const FieldBundle& b, const Grid& grid, const char* what) {
    require_same_layout(b.value.grid, grid, what);
    require_same_layout(b.grad.grid, grid, what);
    require_same_layout(b.hess.grid, grid, what);
}

ConstantPolicy make_policy(double eps, double override_c, bool boundary) {
    ConstantPolicy p;
    if (override_c > 0) {
        p.c_eps = override_c;
        p.formula = "caller override";
    } else if (boundary) {
        p.c_eps = default_penalty_constant(1.0);
        p.formula = "C(1) = 18/1 + 3 (boundary variant, internal split eps = 1/2)";
    } else {
        p.c_eps = default_penalty_constant(eps);
        p.formula = "C(eps) = 18/eps + 3";
    }
    return p;
}

void finalize_min(JacobiReport& rep) {
    rep.min_residual = 0.0;
    rep.argmin = -1;
    bool first = true;
    for (Index i = 0; i < rep.residual.size(); ++i) {
        if (!rep.mask.contains(i)) continue;
        if (first || rep.residual[i] < rep.min_residual) {
            rep.min_residual = rep.residual[i];
            rep.argmin = i;
            first = false;
        }
    }
}

/// Flat residual with no hypothesis enforcement (shared by the checked entry
/// point and the counterexample scan).
JacobiReport trace_hessian_unchecked(const FieldBundle& u, const FieldBundle& f,
                                     double eps, const RegionMask& mask,
                                     double penalty_constant) {
    const Grid& grid = u.value.grid;
    const int dim = grid.dim;

    JacobiReport rep;
    rep.variant = JacobiVariant::hessian;
    rep.epsilon = eps;
    rep.constant_policy = make_policy(eps, penalty_constant, /*boundary=*/false);
    rep.mask = mask;
    rep.f_provenance = f.provenance;
    rep.residual = ScalarField(grid);
    rep.slack = ScalarField(grid);

    ScalarField A(grid);
    SymmetricMatrixField F(grid);
    for (Index i = 0; i < grid.size(); ++i) {
        A[i] = trace_packed(u.hess.at(i), dim);
        linearized_coefficients(u.hess.at(i), dim, F.at(i));
    }
    const FieldBundle Ab = make_fd_bundle(A);

    const double C = rep.constant_policy.c_eps;
    for (Index i = 0; i < grid.size(); ++i) {
        const double* Fi = F.at(i);
        const double lapF_A = packed_contract(Fi, Ab.hess.at(i), dim);
        const double gradF_A2 = packed_bilinear(Fi, Ab.grad.at(i), Ab.grad.at(i), dim);
        const double lap_f = trace_packed(f.hess.at(i), dim);
        double df2 = 0.0;
        for (int c = 0; c < dim; ++c) df2 += f.grad.at(i)[c] * f.grad.at(i)[c];
        const double ratio = (A[i] != 0.0) ? gradF_A2 / A[i] : 0.0;
        rep.residual[i] = lapF_A - (2.0 - eps) * ratio - lap_f + C * df2;
        rep.slack[i] = 0.5 * eps * ratio;
    }
    finalize_min(rep);
    return rep;
}

}  // namespace

// ---------------------------------------------------------------------------
// cutoff profile
// ---------------------------------------------------------------------------

double cutoff_phi(double t) {
    if (t <= 0.0) return 0.0;
    const double t2 = t * t;
    return t2 * t2;
}

double cutoff_phi_d1(double t) { return t <= 0.0 ? 0.0 : 4.0 * t * t * t; }

double cutoff_phi_d2(double t) { return t <= 0.0 ? 0.0 : 12.0 * t * t; }

bool phi_contract_check(const std::vector<double>& samples) {
    for (double t : samples) {
        const double lhs = cutoff_phi_d2(t) * cutoff_phi(t);
        const double rhs = (2.0 / 3.0) * cutoff_phi_d1(t) * cutoff_phi_d1(t);
        if (lhs < rhs) return false;
    }
    return true;
}

const char* jacobi_variant_name(JacobiVariant v) {
    return v == JacobiVariant::hessian ? "hessian" : "curvature";
}

double default_penalty_constant(double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("penalty constant needs eps > 0");
    return 18.0 / eps + 3.0;
}

// ---------------------------------------------------------------------------
// trace inequalities
// ---------------------------------------------------------------------------

JacobiReport trace_jacobi_hessian(const FieldBundle& u, const FieldBundle& f,
                                  double eps, const RegionMask& mask,
                                  double penalty_constant) {
    const Grid& grid = u.value.grid;
    check_bundle(u, grid, "trace_jacobi_hessian u");
    check_bundle(f, grid, "trace_jacobi_hessian f");
    require_same_layout(mask.grid, grid, "trace_jacobi_hessian mask");
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("trace_jacobi_hessian: eps must lie in (0,1)");
    for (Index i = 0; i < grid.size(); ++i) {
        if (!mask.contains(i)) continue;
        if (!(trace_packed(u.hess.at(i), grid.dim) > 0.0))
            throw std::domain_error("trace_jacobi_hessian: Delta u <= 0 on mask");
        if (!(f.value[i] >= 1.0))
            throw std::domain_error("trace_jacobi_hessian: f < 1 on mask (normalize first)");
    }
    return trace_hessian_unchecked(u, f, eps, mask, penalty_constant);
}

JacobiReport trace_jacobi_curvature(const FieldBundle& u, const FieldBundle& f,
                                    double eps, const RegionMask& mask,
                                    double penalty_constant) {
    const Grid& grid = u.value.grid;
    check_bundle(u, grid, "trace_jacobi_curvature u");
    check_bundle(f, grid, "trace_jacobi_curvature f");
    require_same_layout(mask.grid, grid, "trace_jacobi_curvature mask");
    if (!(eps > 0.0 && eps <= 1.0))
        throw std::invalid_argument("trace_jacobi_curvature: eps must lie in (0,1]");

    const GraphFrame frame = build_graph_frame(u);
    for (Index i = 0; i < grid.size(); ++i) {
        if (!mask.contains(i)) continue;
        if (!(frame.H[i] > 0.0))
            throw std::domain_error("trace_jacobi_curvature: H <= 0 on mask");
        if (!(f.value[i] > 0.0))
            throw std::domain_error("trace_jacobi_curvature: f <= 0 on mask");
    }

    JacobiReport rep;
    rep.variant = JacobiVariant::curvature;
    rep.epsilon = eps;
    rep.constant_policy = make_policy(eps, penalty_constant, /*boundary=*/false);
    rep.mask = mask;
    rep.f_provenance = f.provenance;
    rep.residual = ScalarField(grid);
    rep.slack = ScalarField(grid);

    const FieldBundle Hb = make_fd_bundle(frame.H);
    const ScalarField lapF_H = laplace_F(Hb, frame);
    const ScalarField gradF_H2 = gradF_inner(Hb.grad, Hb.grad, frame);
    const ScalarField lapM_f = laplace_beltrami(f, frame);
    const ScalarField gradM_f2 = grad_surface_inner(f.grad, f.grad, frame);

    const double C = rep.constant_policy.c_eps;
    for (Index i = 0; i < grid.size(); ++i) {
        const double H = frame.H[i];
        const double ratio = (H != 0.0) ? gradF_H2[i] / H : 0.0;
        const double pen = (f.value[i] != 0.0) ? gradM_f2[i] / f.value[i] : 0.0;
        rep.residual[i] = lapF_H[i] - (2.0 - eps) * ratio - lapM_f[i] + C * pen;
        rep.slack[i] = 0.5 * eps * ratio;
    }
    finalize_min(rep);
    return rep;
}

// ---------------------------------------------------------------------------
// boundary inequality
// ---------------------------------------------------------------------------

JacobiReport boundary_jacobi(const FieldBundle& u, const FieldBundle& w,
                             const FieldBundle& f, JacobiVariant variant,
                             const RegionMask& mask, double penalty_constant) {
    const Grid& grid = u.value.grid;
    const int dim = grid.dim;
    check_bundle(u, grid, "boundary_jacobi u");
    check_bundle(w, grid, "boundary_jacobi w");
    check_bundle(f, grid, "boundary_jacobi f");
    require_same_layout(mask.grid, grid, "boundary_jacobi mask");

    JacobiReport rep;
    rep.variant = variant;
    rep.epsilon = 0.5;  // the split fixed inside the proof; not a free knob
    rep.constant_policy = make_policy(0.5, penalty_constant, /*boundary=*/true);
    rep.f_provenance = f.provenance;
    rep.residual = ScalarField(grid);
    rep.slack = ScalarField(grid);

    // contact set {w > u} within the caller's mask
    rep.mask = RegionMask(grid);
    for (Index i = 0; i < grid.size(); ++i)
        rep.mask.m[i] = (mask.contains(i) && w.value[i] > u.value[i]) ? 1 : 0;

    // difference bundle d = w - u (derivative provenance: worst of the two)
    FieldBundle d;
    d.value = ScalarField(grid);
    d.grad = VectorField(grid);
    d.hess = SymmetricMatrixField(grid);
    d.provenance = (u.provenance == DerivProvenance::analytic &&
                    w.provenance == DerivProvenance::analytic)
                       ? DerivProvenance::analytic
                       : DerivProvenance::finite_difference;
    for (Index i = 0; i < grid.size(); ++i) {
        d.value[i] = w.value[i] - u.value[i];
        for (int c = 0; c < dim; ++c) d.grad.at(i)[c] = w.grad.at(i)[c] - u.grad.at(i)[c];
        for (int k = 0; k < sym_size(dim); ++k) d.hess.at(i)[k] = w.hess.at(i)[k] - u.hess.at(i)[k];
    }

    const double C = rep.constant_policy.c_eps;

    if (variant == JacobiVariant::hessian) {
        ScalarField A(grid), composite(grid);
        SymmetricMatrixField F(grid);
        for (Index i = 0; i < grid.size(); ++i) {
            A[i] = trace_packed(u.hess.at(i), dim);
            linearized_coefficients(u.hess.at(i), dim, F.at(i));
            composite[i] = cutoff_phi(d.value[i]) * A[i];
        }
        for (Index i = 0; i < grid.size(); ++i) {
            if (!rep.mask.contains(i)) continue;
            if (!(A[i] > 0.0))
                throw std::domain_error("boundary_jacobi: Delta u <= 0 on contact set");
            if (!(f.value[i] >= 1.0))
                throw std::domain_error("boundary_jacobi: f < 1 on contact set");
        }
        const FieldBundle cb = make_fd_bundle(composite);
        for (Index i = 0; i < grid.size(); ++i) {
            if (!rep.mask.contains(i)) continue;
            const double* Fi = F.at(i);
            const double lapF_c = packed_contract(Fi, cb.hess.at(i), dim);
            const double lapF_d = packed_contract(Fi, d.hess.at(i), dim);
            const double lap_f = trace_packed(f.hess.at(i), dim);
            double df2 = 0.0;
            for (int c = 0; c < dim; ++c) df2 += f.grad.at(i)[c] * f.grad.at(i)[c];
            const double phi = cutoff_phi(d.value[i]);
            const double dphi = cutoff_phi_d1(d.value[i]);
            rep.residual[i] = lapF_c - dphi * lapF_d * A[i] - (lap_f - C * df2) * phi;
        }
    } else {
        const GraphFrame frame = build_graph_frame(u);
        for (Index i = 0; i < grid.size(); ++i) {
            if (!rep.mask.contains(i)) continue;
            if (!(frame.H[i] > 0.0))
                throw std::domain_error("boundary_jacobi: H <= 0 on contact set");
            if (!(f.value[i] > 0.0))
                throw std::domain_error("boundary_jacobi: f <= 0 on contact set");
        }
        ScalarField composite(grid);
        for (Index i = 0; i < grid.size(); ++i)
            composite[i] = cutoff_phi(d.value[i]) * frame.H[i];
        const FieldBundle cb = make_fd_bundle(composite);
        const ScalarField lapF_c = laplace_F(cb, frame);
        const ScalarField lapF_d = laplace_F(d, frame);
        const ScalarField lapM_f = laplace_beltrami(f, frame);
        const ScalarField gradM_f2 = grad_surface_inner(f.grad, f.grad, frame);
        for (Index i = 0; i < grid.size(); ++i) {
            if (!rep.mask.contains(i)) continue;
            const double phi = cutoff_phi(d.value[i]);
            const double dphi = cutoff_phi_d1(d.value[i]);
            const double pen = gradM_f2[i] / f.value[i];
            rep.residual[i] =
                lapF_c[i] - dphi * lapF_d[i] * frame.H[i] - (lapM_f[i] - C * pen) * phi;
        }
    }
    finalize_min(rep);
    if (rep.argmin < 0) rep.min_residual = 0.0;  // empty contact set: identically zero
    return rep;
}

// ---------------------------------------------------------------------------
// counterexample scan
// ---------------------------------------------------------------------------

NonconvexScanReport nonconvex_scan(
    const std::vector<double>& params,
    const std::function<FieldBundle(double)>& make_u,
    const std::function<FieldBundle(const FieldBundle&)>& make_f,
    const RegionMask& mask, double eps, double tolerance) {
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("nonconvex_scan: eps must lie in (0,1)");
    NonconvexScanReport report;
    report.eps = eps;
    report.tolerance = tolerance;
    for (double a : params) {
        const FieldBundle u = make_u(a);
        require_same_layout(u.value.grid, mask.grid, "nonconvex_scan member");
        const FieldBundle f = make_f(u);

        NonconvexScanRow row;
        row.param = a;
        // weakest cone label over the mask (precedence: convex strongest)
        row.worst_cone = ConeClass::convex;
        for (Index i = 0; i < mask.grid.size(); ++i) {
            if (!mask.contains(i)) continue;
            const ConeReport cr = cone_classify(u.hess.at(i), mask.grid.dim);
            if (static_cast<int>(cr.label) > static_cast<int>(row.worst_cone))
                row.worst_cone = cr.label;
        }
        const JacobiReport jr = trace_hessian_unchecked(u, f, eps, mask, -1.0);
        row.min_residual = jr.min_residual;
        row.below_tolerance = jr.min_residual < -tolerance;
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace s2lab
