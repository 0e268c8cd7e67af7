#include "s2lab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "s2lab/fd.hpp"
#include "s2lab/sigma2.hpp"

namespace s2lab {

namespace {

/// centred packed Hessian of u at an interior node (all +-1 neighbours and
/// the four plaquette corners per axis pair exist there)
void hessian_at(const ScalarField& u, const Grid& g, Index i, double* packed) {
    const double inv_h2 = 1.0 / (g.spacing * g.spacing);
    int k = 0;
    for (int a = 0; a < g.dim; ++a) {
        const Index sa = g.stride[a];
        for (int b = a; b < g.dim; ++b, ++k) {
            if (a == b) {
                packed[k] = (u[i + sa] - 2.0 * u[i] + u[i - sa]) * inv_h2;
            } else {
                const Index sb = g.stride[b];
                packed[k] = (u[i + sa + sb] - u[i + sa - sb] - u[i - sa + sb] +
                             u[i - sa - sb]) *
                            0.25 * inv_h2;
            }
        }
    }
}

struct InteriorSystem {
    const Grid* grid = nullptr;
    std::vector<Index> nodes;            // interior flat indices, ascending
    SymmetricMatrixField F;              // frozen linearization coefficients
    std::vector<double> inv_diag;        // Jacobi preconditioner, per node slot

    explicit InteriorSystem(const Grid& g, const RegionMask& interior)
        : grid(&g), F(g) {
        nodes.reserve(interior.count());
        for (Index i = 0; i < g.size(); ++i)
            if (interior.contains(i)) nodes.push_back(i);
        inv_diag.assign(nodes.size(), 1.0);
    }

    /// freeze F at the iterate (identity_laplacian = true gives the plain
    /// Laplacian system used for the initial iterate)
    void freeze(const ScalarField& u, bool identity_laplacian) {
        const int dim = grid->dim;
        const int sz = sym_size(dim);
        double packed[kMaxDim * (kMaxDim + 1) / 2];
        double coeffs[kMaxDim * (kMaxDim + 1) / 2];
        const double inv_h2 = 1.0 / (grid->spacing * grid->spacing);
        for (std::size_t s = 0; s < nodes.size(); ++s) {
            double* dst = F.at(nodes[s]);
            if (identity_laplacian) {
                for (int k = 0; k < sz; ++k) dst[k] = 0.0;
                for (int c = 0; c < dim; ++c) dst[sym_index(dim, c, c)] = 1.0;
            } else {
                hessian_at(u, *grid, nodes[s], packed);
                linearized_coefficients(packed, dim, coeffs);
                for (int k = 0; k < sz; ++k) dst[k] = coeffs[k];
            }
            double tr = 0.0;
            for (int c = 0; c < dim; ++c) tr += dst[sym_index(dim, c, c)];
            double d = -2.0 * inv_h2 * tr;
            if (std::abs(d) < 1e-300) d = -2.0 * inv_h2;  // degenerate guard
            inv_diag[s] = 1.0 / d;
        }
    }

    /// y = tr(F D2_h v) on interior slots; v is a full-grid array read with
    /// zeros wherever the caller left them
    void matvec(const std::vector<double>& v, std::vector<double>& y) const {
        const Grid& g = *grid;
        const int dim = g.dim;
        const double inv_h2 = 1.0 / (g.spacing * g.spacing);
        for (std::size_t s = 0; s < nodes.size(); ++s) {
            const Index i = nodes[s];
            const double* Fp = F.at(i);
            double acc = 0.0;
            int k = 0;
            for (int a = 0; a < dim; ++a) {
                const Index sa = g.stride[a];
                for (int b = a; b < dim; ++b, ++k) {
                    if (a == b) {
                        acc += Fp[k] * (v[i + sa] - 2.0 * v[i] + v[i - sa]) * inv_h2;
                    } else {
                        const Index sb = g.stride[b];
                        acc += 2.0 * Fp[k] *
                               (v[i + sa + sb] - v[i + sa - sb] - v[i - sa + sb] +
                                v[i - sa - sb]) *
                               0.25 * inv_h2;
                    }
                }
            }
            y[s] = acc;
        }
    }
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// preconditioned BiCGSTAB on the interior slots; solution written into the
/// full-grid array `x_full` (zeros elsewhere); returns achieved rel residual
double bicgstab(const InteriorSystem& sys, const std::vector<double>& b,
                std::vector<double>& x_full, double rel_tol, int max_iters) {
    const std::size_t m = sys.nodes.size();
    const double bnorm = std::sqrt(dot(b, b));
    if (bnorm == 0.0) return 0.0;

    std::vector<double> r = b, r_hat = b;
    std::vector<double> p(m, 0.0), v(m, 0.0), s(m), t(m), scratch(m);
    std::vector<double> phat_full(x_full.size(), 0.0), shat_full(x_full.size(), 0.0);
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    double rnorm = bnorm;

    for (int it = 0; it < max_iters; ++it) {
        const double rho_next = dot(r_hat, r);
        if (std::abs(rho_next) < 1e-300) break;  // breakdown: return best
        if (it == 0) {
            p = r;
        } else {
            const double beta = (rho_next / rho) * (alpha / omega);
            for (std::size_t i = 0; i < m; ++i)
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        rho = rho_next;

        for (std::size_t i = 0; i < m; ++i)
            phat_full[sys.nodes[i]] = sys.inv_diag[i] * p[i];
        sys.matvec(phat_full, v);
        const double rhv = dot(r_hat, v);
        if (std::abs(rhv) < 1e-300) break;
        alpha = rho / rhv;

        for (std::size_t i = 0; i < m; ++i) s[i] = r[i] - alpha * v[i];
        double snorm = std::sqrt(dot(s, s));
        if (snorm <= rel_tol * bnorm) {
            for (std::size_t i = 0; i < m; ++i)
                x_full[sys.nodes[i]] += alpha * phat_full[sys.nodes[i]];
            return snorm / bnorm;
        }

        for (std::size_t i = 0; i < m; ++i)
            shat_full[sys.nodes[i]] = sys.inv_diag[i] * s[i];
        sys.matvec(shat_full, t);
        const double tt = dot(t, t);
        if (tt < 1e-300) break;
        omega = dot(t, s) / tt;

        for (std::size_t i = 0; i < m; ++i) {
            const Index n = sys.nodes[i];
            x_full[n] += alpha * phat_full[n] + omega * shat_full[n];
            r[i] = s[i] - omega * t[i];
        }
        rnorm = std::sqrt(dot(r, r));
        if (rnorm <= rel_tol * bnorm) return rnorm / bnorm;
        if (std::abs(omega) < 1e-300) break;
    }
    return rnorm / bnorm;
}

/// residual R = sigma2(D2_h u) - f on the interior slots
void residual_on(const InteriorSystem& sys, const ScalarField& u,
                 const ScalarField& f, std::vector<double>& out) {
    const int dim = sys.grid->dim;
    double packed[kMaxDim * (kMaxDim + 1) / 2];
    for (std::size_t s = 0; s < sys.nodes.size(); ++s) {
        hessian_at(u, *sys.grid, sys.nodes[s], packed);
        out[s] = sigma2_direct(packed, dim) - f[sys.nodes[s]];
    }
}

double sup_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// strict Gamma_2 membership of the iterate at every interior node
bool in_cone(const InteriorSystem& sys, const ScalarField& u) {
    const int dim = sys.grid->dim;
    double packed[kMaxDim * (kMaxDim + 1) / 2];
    for (Index i : sys.nodes) {
        hessian_at(u, *sys.grid, i, packed);
        double tr = 0.0;
        for (int c = 0; c < dim; ++c) tr += packed[sym_index(dim, c, c)];
        if (tr <= 0.0) return false;
        if (sigma2_direct(packed, dim) <= 0.0) return false;
    }
    return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// masks
// ---------------------------------------------------------------------------

RegionMask solver_interior(const Grid& grid) { return box_interior_mask(grid, 2); }

RegionMask solver_boundary(const Grid& grid) {
    RegionMask inner = solver_interior(grid);
    RegionMask outer(grid);
    for (Index i = 0; i < grid.size(); ++i) outer.m[i] = !inner.contains(i);
    return outer;
}

// ---------------------------------------------------------------------------
// shared kernels
// ---------------------------------------------------------------------------

ScalarField sigma2_residual_field(const ScalarField& u, const ScalarField& f,
                                  const RegionMask& interior) {
    require_same_layout(u.grid, f.grid, "solver forcing");
    require_same_layout(u.grid, interior.grid, "solver interior");
    ScalarField out(u.grid);
    double packed[kMaxDim * (kMaxDim + 1) / 2];
    for (Index i = 0; i < u.grid.size(); ++i) {
        if (!interior.contains(i)) continue;
        hessian_at(u, u.grid, i, packed);
        out[i] = sigma2_direct(packed, u.grid.dim) - f[i];
    }
    return out;
}

ScalarField linearized_apply(const ScalarField& u, const ScalarField& v,
                             const RegionMask& interior) {
    require_same_layout(u.grid, v.grid, "linearization direction");
    require_same_layout(u.grid, interior.grid, "solver interior");
    ScalarField out(u.grid);
    const int dim = u.grid.dim;
    double packed[kMaxDim * (kMaxDim + 1) / 2];
    double coeffs[kMaxDim * (kMaxDim + 1) / 2];
    double dv[kMaxDim * (kMaxDim + 1) / 2];
    for (Index i = 0; i < u.grid.size(); ++i) {
        if (!interior.contains(i)) continue;
        hessian_at(u, u.grid, i, packed);
        linearized_coefficients(packed, dim, coeffs);
        hessian_at(v, u.grid, i, dv);
        double acc = 0.0;
        int k = 0;
        for (int a = 0; a < dim; ++a)
            for (int b = a; b < dim; ++b, ++k)
                acc += (a == b ? 1.0 : 2.0) * coeffs[k] * dv[k];
        out[i] = acc;
    }
    return out;
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

SolveResult solve_dirichlet(const ScalarField& f, const ScalarField& boundary,
                            const SolveOptions& opts, const ScalarField* initial) {
    require_same_layout(f.grid, boundary.grid, "solver boundary");
    if (initial) require_same_layout(f.grid, initial->grid, "solver warm start");
    if (opts.residual_tol <= 0.0)
        throw std::invalid_argument("solve: residual_tol must be positive");
    if (opts.backtrack_factor <= 0.0 || opts.backtrack_factor >= 1.0)
        throw std::invalid_argument("solve: backtracking factor must be in (0,1)");

    const Grid& g = f.grid;
    const RegionMask interior = solver_interior(g);
    if (interior.count() == 0)
        throw std::invalid_argument("solve: grid has no interior nodes");

    InteriorSystem sys(g, interior);

    SolveResult res;
    res.diag.f_min = std::numeric_limits<double>::infinity();
    for (Index i : sys.nodes) res.diag.f_min = std::min(res.diag.f_min, f[i]);
    if (res.diag.f_min <= 0.0)
        throw std::domain_error("solve: forcing must be strictly positive (degenerate equation)");

    // iterate with Dirichlet layers pinned
    ScalarField u = boundary;
    if (initial) {
        u = *initial;
        for (Index i = 0; i < g.size(); ++i)
            if (!interior.contains(i)) u[i] = boundary[i];
    } else {
        // trace-surrogate start: Delta u0 = sqrt(2n/(n-1) f), one linear solve
        for (Index i : sys.nodes) u[i] = 0.0;
        sys.freeze(u, /*identity_laplacian=*/true);
        std::vector<double> rhs(sys.nodes.size());
        const double factor = 2.0 * g.dim / double(g.dim - 1);
        double packed[kMaxDim * (kMaxDim + 1) / 2];
        for (std::size_t s = 0; s < sys.nodes.size(); ++s) {
            const Index i = sys.nodes[s];
            hessian_at(u, g, i, packed);
            double lap = 0.0;
            for (int c = 0; c < g.dim; ++c) lap += packed[sym_index(g.dim, c, c)];
            rhs[s] = std::sqrt(factor * f[i]) - lap;
        }
        std::vector<double> delta(g.size(), 0.0);
        bicgstab(sys, rhs, delta, 1e-10, opts.max_linear_iters);
        for (Index i : sys.nodes) u[i] += delta[i];
    }

    std::vector<double> R(sys.nodes.size());
    residual_on(sys, u, f, R);
    double res_sup = sup_norm(R);
    res.diag.residual_history.push_back(res_sup);

    const double res0 = std::max(res_sup, 1e-30);
    ScalarField trial = u;
    std::vector<double> Rt(sys.nodes.size());

    while (res_sup > opts.residual_tol) {
        if (res.diag.iterations >= opts.max_iters) {
            res.diag.abort_reason = "iteration budget exhausted";
            break;
        }
        sys.freeze(u, /*identity_laplacian=*/false);
        std::vector<double> rhs(sys.nodes.size());
        for (std::size_t s = 0; s < sys.nodes.size(); ++s) rhs[s] = -R[s];
        const double eta =
            std::max(1e-12, std::min(opts.linear_tol, 0.5 * res_sup / res0));
        std::vector<double> delta(g.size(), 0.0);
        bicgstab(sys, rhs, delta, eta, opts.max_linear_iters);

        const bool feasible = in_cone(sys, u);
        double alpha = 1.0;
        bool accepted = false;
        for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
            for (Index i : sys.nodes) trial[i] = u[i] + alpha * delta[i];
            if (opts.convexity == ConvexityPolicy::project && feasible &&
                !in_cone(sys, trial)) {
                alpha *= opts.backtrack_factor;
                continue;
            }
            residual_on(sys, trial, f, Rt);
            const double trial_sup = sup_norm(Rt);
            if (trial_sup <= res_sup * (1.0 - 1e-4 * alpha)) {
                accepted = true;
                break;
            }
            alpha *= opts.backtrack_factor;
        }
        if (!accepted) {
            res.diag.abort_reason =
                (opts.convexity == ConvexityPolicy::project && feasible)
                    ? "line search failed (step rejected by residual decrease or cone exit)"
                    : "line search failed (no residual decrease)";
            break;
        }
        std::swap(u.v, trial.v);
        std::swap(R, Rt);
        res_sup = sup_norm(R);
        res.diag.residual_history.push_back(res_sup);
        ++res.diag.iterations;
    }
    res.diag.converged = res_sup <= opts.residual_tol;

    // final certificate and cone census on the discrete Hessian
    {
        const int dim = g.dim;
        double packed[kMaxDim * (kMaxDim + 1) / 2];
        Eigen::MatrixXd M(dim, dim);
        double min_eig = std::numeric_limits<double>::infinity();
        double sup_eig = 0.0;
        for (Index i : sys.nodes) {
            hessian_at(u, g, i, packed);
            const ConeReport cr = cone_classify(packed, dim);
            switch (cr.label) {
                case ConeClass::convex: ++res.diag.cone.convex; break;
                case ConeClass::strictly_2_convex: ++res.diag.cone.strictly_2_convex; break;
                case ConeClass::weakly_2_convex: ++res.diag.cone.weakly_2_convex; break;
                case ConeClass::outside: ++res.diag.cone.outside; break;
            }
            int k = 0;
            for (int a = 0; a < dim; ++a)
                for (int b = a; b < dim; ++b, ++k) {
                    M(a, b) = packed[k];
                    M(b, a) = packed[k];
                }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
            min_eig = std::min(min_eig, es.eigenvalues()(0));
            sup_eig = std::max(sup_eig, std::max(std::abs(es.eigenvalues()(0)),
                                                 std::abs(es.eigenvalues()(dim - 1))));
        }
        res.diag.min_hessian_eig = min_eig;
        res.diag.convexity_pass = min_eig >= -1e-8 * sup_eig;
    }

    res.u = std::move(u);
    return res;
}

// ---------------------------------------------------------------------------
// manufactured catalog
// ---------------------------------------------------------------------------

namespace {

ManufacturedCase blank_case(const Grid& g) {
    ManufacturedCase c;
    c.u_exact.value = ScalarField(g);
    c.u_exact.grad = VectorField(g);
    c.u_exact.hess = SymmetricMatrixField(g);
    c.u_exact.provenance = DerivProvenance::analytic;
    c.f = ScalarField(g);
    c.boundary = ScalarField(g);
    return c;
}

}  // namespace

ManufacturedCase manufactured_case(const std::string& name, const Grid& g,
                                   const ManufacturedParams& p) {
    const int n = g.dim;
    ManufacturedCase c = blank_case(g);
    double x[kMaxDim];

    if (name == "quadratic") {
        if (int(p.diag.size()) != n)
            throw std::invalid_argument("manufactured quadratic: diag size != dim");
        for (double d : p.diag)
            if (d <= 0.0)
                throw std::invalid_argument("manufactured quadratic: spectrum must be positive");
        double s2 = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s2 += p.diag[i] * p.diag[j];
        for (GridWalker w(g); !w.done(); w.advance()) {
            g.node_coords(w.idx(), x);
            const Index i = w.flat();
            double val = 0.0;
            for (int cdx = 0; cdx < n; ++cdx) {
                val += 0.5 * p.diag[cdx] * x[cdx] * x[cdx];
                c.u_exact.grad.at(i)[cdx] = p.diag[cdx] * x[cdx];
                c.u_exact.hess.at(i)[sym_index(n, cdx, cdx)] = p.diag[cdx];
            }
            c.u_exact.value[i] = val;
            c.f[i] = s2;
        }
    } else if (name == "paraboloid_perturbed") {
        if (p.eps < 0.0 || p.eps >= 1.0 / 3.0)
            throw std::invalid_argument(
                "manufactured paraboloid_perturbed: eps must lie in [0, 1/3)");
        double packed[kMaxDim * (kMaxDim + 1) / 2];
        for (GridWalker w(g); !w.done(); w.advance()) {
            g.node_coords(w.idx(), x);
            const Index i = w.flat();
            double prod = 1.0, val = 0.0;
            for (int cdx = 0; cdx < n; ++cdx) {
                prod *= std::cos(x[cdx]);
                val += 0.5 * x[cdx] * x[cdx];
            }
            c.u_exact.value[i] = val + p.eps * prod;
            int k = 0;
            for (int a = 0; a < n; ++a) {
                double da = x[a];  // gradient of the quadratic part
                double dprod = -std::sin(x[a]);
                for (int cdx = 0; cdx < n; ++cdx)
                    if (cdx != a) dprod *= std::cos(x[cdx]);
                c.u_exact.grad.at(i)[a] = da + p.eps * dprod;
                for (int b = a; b < n; ++b, ++k) {
                    double dd;
                    if (a == b) {
                        dd = -prod;  // second cosine derivative flips sign
                    } else {
                        dd = std::sin(x[a]) * std::sin(x[b]);
                        for (int cdx = 0; cdx < n; ++cdx)
                            if (cdx != a && cdx != b) dd *= std::cos(x[cdx]);
                    }
                    packed[k] = (a == b ? 1.0 : 0.0) + p.eps * dd;
                    c.u_exact.hess.at(i)[k] = packed[k];
                }
            }
            c.f[i] = sigma2_direct(packed, n);
        }
    } else if (name == "exp_sum") {
        for (GridWalker w(g); !w.done(); w.advance()) {
            g.node_coords(w.idx(), x);
            const Index i = w.flat();
            double val = 0.0, s2 = 0.0;
            for (int a = 0; a < n; ++a) {
                const double e = std::exp(x[a]);
                val += e;
                c.u_exact.grad.at(i)[a] = e;
                c.u_exact.hess.at(i)[sym_index(n, a, a)] = e;
            }
            for (int a = 0; a < n; ++a)
                for (int b = a + 1; b < n; ++b) s2 += std::exp(x[a] + x[b]);
            c.u_exact.value[i] = val;
            c.f[i] = s2;
        }
    } else if (name == "radial_quartic") {
        if (p.beta < 0.0)
            throw std::invalid_argument("manufactured radial_quartic: beta must be >= 0");
        for (GridWalker w(g); !w.done(); w.advance()) {
            g.node_coords(w.idx(), x);
            const Index i = w.flat();
            double r2 = 0.0;
            for (int a = 0; a < n; ++a) r2 += x[a] * x[a];
            c.u_exact.value[i] = 0.5 * r2 + 0.25 * p.beta * r2 * r2;
            int k = 0;
            for (int a = 0; a < n; ++a) {
                c.u_exact.grad.at(i)[a] = x[a] * (1.0 + p.beta * r2);
                for (int b = a; b < n; ++b, ++k)
                    c.u_exact.hess.at(i)[k] =
                        (a == b ? 1.0 + p.beta * r2 : 0.0) + 2.0 * p.beta * x[a] * x[b];
            }
            c.f[i] = sigma2_direct(c.u_exact.hess.at(i), n);
        }
    } else if (name == "f_oscillatory_family") {
        if (p.k < 1)
            throw std::invalid_argument("manufactured forcing family: k must be >= 1");
        // boundary quadratic with sigma2 = 3/2, the supremum of the family
        const double a0 = std::sqrt(1.5 / (0.5 * n * (n - 1)));
        c.has_exact = false;
        for (GridWalker w(g); !w.done(); w.advance()) {
            g.node_coords(w.idx(), x);
            const Index i = w.flat();
            double r2 = 0.0;
            for (int a = 0; a < n; ++a) r2 += x[a] * x[a];
            c.u_exact.value[i] = 0.5 * a0 * r2;
            for (int a = 0; a < n; ++a) {
                c.u_exact.grad.at(i)[a] = a0 * x[a];
                c.u_exact.hess.at(i)[sym_index(n, a, a)] = a0;
            }
            c.f[i] = 1.0 + std::sin(p.k * x[0]) / (2.0 * p.k);
        }
    } else {
        throw std::invalid_argument("manufactured case: unknown name '" + name + "'");
    }
    c.boundary = c.u_exact.value;
    return c;
}

// ---------------------------------------------------------------------------
// convexity certificate
// ---------------------------------------------------------------------------

ConvexityCertificate convexity_certificate(const ScalarField& u, const RegionMask& mask) {
    require_same_layout(u.grid, mask.grid, "convexity mask");
    const int dim = u.grid.dim;
    const SymmetricMatrixField hess = fd_hessian(u);
    ConvexityCertificate cert;
    cert.min_eig = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd M(dim, dim);
    bool any = false;
    for (Index i = 0; i < u.grid.size(); ++i) {
        if (!mask.contains(i)) continue;
        any = true;
        const double* h = hess.at(i);
        int k = 0;
        for (int a = 0; a < dim; ++a)
            for (int b = a; b < dim; ++b, ++k) {
                M(a, b) = h[k];
                M(b, a) = h[k];
            }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
        cert.min_eig = std::min(cert.min_eig, es.eigenvalues()(0));
        cert.hess_sup = std::max(cert.hess_sup,
                                 std::max(std::abs(es.eigenvalues()(0)),
                                          std::abs(es.eigenvalues()(dim - 1))));
    }
    if (!any) {
        cert.min_eig = 0.0;
        cert.pass = false;
        return cert;
    }
    cert.pass = cert.min_eig >= -1e-8 * cert.hess_sup;
    return cert;
}

}  // namespace s2lab
