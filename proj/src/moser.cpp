#include "s2lab/moser.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "s2lab/graph_frame.hpp"

namespace s2lab {

namespace {

constexpr double kTol = 1e-12;

int minimal_k0(int n, double gamma) {
    // guard against ln4/ln2 rounding up to 3 in floating point
    return static_cast<int>(std::ceil(std::log(double(n)) / std::log(gamma) - 1e-9));
}

void check_dimension(int n) {
    if (n < 2) throw std::invalid_argument("schedule: dimension must be >= 2");
    if (n == 2)
        throw std::domain_error(
            "schedule: dimension 2 needs no iteration (Sobolev embedding gives "
            "the bound directly); gamma = n/(n-2) is undefined");
}

/// trace of the packed Hessian at one node
double hessian_trace(const SymmetricMatrixField& hess, Index i, int dim) {
    const double* h = hess.at(i);
    double t = 0.0;
    for (int c = 0; c < dim; ++c) t += h[sym_index(dim, c, c)];
    return t;
}

/// derivative of the quintic smoothstep (s' = s'' = 0 at both ends); only
/// the slope of the bump enters the divergence bound
double smoothstep5_d1(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return 30.0 * t * t * (1.0 - t) * (1.0 - t);
}

/// largest radius of a ball centred at 0 contained in the grid box
double inscribed_radius(const Grid& g) {
    double r = std::numeric_limits<double>::infinity();
    for (int a = 0; a < g.dim; ++a) {
        const double lo = -g.origin[a];
        const double hi = g.origin[a] + g.spacing * (g.shape[a] - 1);
        r = std::min(r, std::min(lo, hi));
    }
    return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// schedule
// ---------------------------------------------------------------------------

MoserSchedule schedule_with_k0(int n, int k0) {
    check_dimension(n);
    if (k0 < 2)
        throw std::domain_error("schedule: at least two iteration steps required");

    MoserSchedule s;
    s.n = n;
    s.gamma = double(n) / double(n - 2);
    s.k0 = k0;
    s.k0_minimal = minimal_k0(n, s.gamma);
    s.p.resize(k0 + 1);
    s.q.resize(k0 + 1);
    s.r.resize(k0 + 1);

    s.p[0] = std::pow(s.gamma, k0);
    s.q[0] = 2.0 * n * s.p[0];
    s.r[0] = 0.5;
    for (int k = 1; k <= k0; ++k) {
        s.p[k] = s.p[k - 1] / s.gamma + 2.0;
        s.q[k] = s.q[k - 1] / s.gamma - 2.0;
        s.r[k] = s.r[k - 1] + std::ldexp(1.0, -(k0 - k + 2));
    }

    s.strict_pk = true;
    for (int k = 0; k <= k0; ++k) {
        if (s.p[k] < n - kTol * n)
            throw std::domain_error("schedule: exponent p_" + std::to_string(k) +
                                    " fell below the dimension");
        if (s.p[k] <= n + kTol * n) s.strict_pk = false;
        if (s.q[k] < 2.0 - kTol)
            throw std::domain_error("schedule: weight exponent q_" + std::to_string(k) +
                                    " fell below 2");
        if (s.q[k] > 2.0 * n * s.p[k] * (1.0 + kTol))
            throw std::domain_error("schedule: ratio q_k/p_k exceeded 2n at k = " +
                                    std::to_string(k));
    }
    if (s.p[k0] > n + 1.0 + kTol)
        throw std::domain_error("schedule: endpoint exponent p_k0 exceeds n + 1");
    if (s.q[k0] < n - kTol)
        throw std::domain_error("schedule: endpoint weight q_k0 fell below n");
    if (s.r[k0] >= 1.0)
        throw std::domain_error("schedule: radii reached the unit ball");
    return s;
}

MoserSchedule build_schedule(int n) {
    check_dimension(n);
    const double gamma = double(n) / double(n - 2);
    int k0 = std::max(2, minimal_k0(n, gamma));
    for (; k0 <= 64; ++k0) {
        try {
            return schedule_with_k0(n, k0);
        } catch (const std::domain_error&) {
            // try the next k0; all invariants are monotone-friendly in k0
        }
    }
    throw std::runtime_error("schedule: no admissible step count up to k0 = 64");
}

// ---------------------------------------------------------------------------
// L^p recursion ledger
// ---------------------------------------------------------------------------

RecursionLedger w2p_recursion_check(const FieldBundle& u, const ScalarField& f,
                                    const ScalarField& phi, const RegionMask& omega,
                                    JacobiVariant variant, const W2pOptions& opt) {
    require_same_layout(u.value.grid, f.grid, "w2p forcing");
    require_same_layout(u.value.grid, phi.grid, "w2p cutoff");
    require_same_layout(u.value.grid, omega.grid, "w2p region");
    if (opt.p_max < 2) throw std::invalid_argument("w2p: p_max must be >= 2");

    const Grid& g = u.value.grid;
    const int dim = g.dim;
    const Index total = g.size();

    for (Index i = 0; i < total; ++i)
        if (phi[i] < 0.0) throw std::domain_error("w2p: cutoff field must be >= 0");

    // A = Delta u (flat) or mean curvature H (graph); weight is the area
    // element of the integration measure
    ScalarField A(g);
    ScalarField weight(g, 1.0);
    if (variant == JacobiVariant::hessian) {
        for (Index i = 0; i < total; ++i) A[i] = hessian_trace(u.hess, i, dim);
    } else {
        const GraphFrame frame = build_graph_frame(u);
        A = frame.H;
        weight = frame.W;
    }
    for (Index i = 0; i < total; ++i) {
        if (!omega.contains(i)) continue;
        if (A[i] <= 0.0)
            throw std::domain_error(variant == JacobiVariant::hessian
                                        ? "w2p: Delta u must be positive on the region"
                                        : "w2p: mean curvature must be positive on the region");
        if (variant == JacobiVariant::hessian ? (f[i] < 1.0 - kTol) : (f[i] <= 0.0))
            throw std::domain_error("w2p: forcing hypothesis violated on the region");
    }

    RecursionLedger ledger;
    ledger.p_max = opt.p_max;
    ledger.c_cap = opt.c_cap;
    ledger.h = g.spacing;
    ledger.variant = variant;

    // log-domain accumulation: I_p can underflow/overflow for large p long
    // before the ratios do, so ratios and the envelope use log I_p directly
    const double log_cell = dim * std::log(g.spacing);
    std::vector<double> log_integral(opt.p_max, -std::numeric_limits<double>::infinity());
    for (int p = 1; p <= opt.p_max; ++p) {
        double m = -std::numeric_limits<double>::infinity();
        for (Index i = 0; i < total; ++i) {
            if (!omega.contains(i)) continue;
            const double e = p * std::log(A[i]) +
                             (p > 1 ? (p - 1) * std::log(phi[i]) : 0.0) +
                             std::log(weight[i]);
            m = std::max(m, e);
        }
        if (std::isfinite(m)) {
            double acc = 0.0;
            for (Index i = 0; i < total; ++i) {
                if (!omega.contains(i)) continue;
                const double e = p * std::log(A[i]) +
                                 (p > 1 ? (p - 1) * std::log(phi[i]) : 0.0) +
                                 std::log(weight[i]);
                acc += std::exp(e - m);
            }
            log_integral[p - 1] = m + std::log(acc) + log_cell;
        }
        ledger.integral.push_back(std::exp(log_integral[p - 1]));
        if (!std::isfinite(ledger.integral.back()) && std::isfinite(log_integral[p - 1]))
            throw std::runtime_error("w2p: integral overflowed double range");
    }

    for (int p = 1; p < opt.p_max; ++p) {
        const double li = log_integral[p - 1], ln = log_integral[p];
        const double rho =
            std::isfinite(li) ? std::exp(ln - std::log(double(p)) - li) : 0.0;
        ledger.ratio.push_back(rho);
        ledger.c_star = std::max(ledger.c_star, rho);
        if (std::isfinite(opt.c_cap) && rho > opt.c_cap)
            throw std::runtime_error("w2p: recursion ratio rho_" + std::to_string(p) +
                                     " exceeded the configured cap");
    }

    // factorial envelope  I_p <= p! c_*^{p-1} I_1, checked in log domain
    ledger.envelope_ok = true;
    for (int p = 1; p <= opt.p_max; ++p) {
        const double lp = log_integral[p - 1];
        if (!std::isfinite(lp)) continue;  // I_p = 0 is inside any envelope
        if (!std::isfinite(log_integral[0]) ||
            (p > 1 && ledger.c_star == 0.0)) {
            ledger.envelope_ok = false;
            break;
        }
        const double cap = std::lgamma(p + 1.0) +
                           (p - 1) * std::log(ledger.c_star > 0.0 ? ledger.c_star : 1.0) +
                           log_integral[0];
        if (lp > cap + 1e-9) {
            ledger.envelope_ok = false;
            break;
        }
    }

    double max_phi = 0.0;
    for (Index i = 0; i < total; ++i)
        if (omega.contains(i)) max_phi = std::max(max_phi, phi[i]);
    ledger.sup_excess = std::pow(max_phi, 0.25);
    return ledger;
}

// ---------------------------------------------------------------------------
// base-case mass bound
// ---------------------------------------------------------------------------

MassReport base_case_mass(const FieldBundle& u, const RegionMask& mask,
                          JacobiVariant variant) {
    require_same_layout(u.value.grid, mask.grid, "base-case mask");
    const Grid& g = u.value.grid;
    const int dim = g.dim;

    const double r1 = 1.0;
    const double r2 = inscribed_radius(g) - g.spacing;
    if (r2 <= r1 + 0.5 * g.spacing)
        throw std::invalid_argument(
            "base-case: grid too small for a bump that is 1 on the unit ball");

    ScalarField A(g);
    ScalarField weight(g, 1.0);
    if (variant == JacobiVariant::hessian) {
        for (Index i = 0; i < g.size(); ++i) A[i] = hessian_trace(u.hess, i, dim);
    } else {
        const GraphFrame frame = build_graph_frame(u);
        A = frame.H;
        weight = frame.W;
    }

    double x[kMaxDim];
    double scale = 0.0;
    for (Index i = 0; i < g.size(); ++i) scale = std::max(scale, std::abs(A[i]));

    MassReport rep;
    ScalarField grad_term(g);  // |D bump| |Du|, analytic bump derivative
    double max_w = 1.0;
    for (GridWalker w(g); !w.done(); w.advance()) {
        const Index i = w.flat();
        g.node_coords(w.idx(), x);
        double rad = 0.0;
        for (int c = 0; c < dim; ++c) rad += x[c] * x[c];
        rad = std::sqrt(rad);

        if (mask.contains(i)) {
            if (rad > r1 + 1e-9)
                throw std::invalid_argument("base-case: mask leaves the unit ball");
        }
        if (rad < r2) {
            // sign hypothesis everywhere the bump is active, so dropping the
            // cutoff against A is one-sided
            if (A[i] < -1e-9 * std::max(1.0, scale))
                throw std::domain_error("base-case: integrand is negative inside the bump");
            max_w = std::max(max_w, weight[i]);
        }
        const double t = (r2 - rad) / (r2 - r1);
        const double dbump = smoothstep5_d1(t) / (r2 - r1);
        double du = 0.0;
        for (int c = 0; c < dim; ++c) du += u.grad.at(i)[c] * u.grad.at(i)[c];
        grad_term[i] = dbump * std::sqrt(du);
    }

    ScalarField integrand(g);
    for (Index i = 0; i < g.size(); ++i) integrand[i] = A[i] * weight[i];
    rep.mass = integrate(integrand, mask).value;

    const RegionMask support =
        mask_from_predicate(g, [&](const double* y) {
            double rad = 0.0;
            for (int c = 0; c < dim; ++c) rad += y[c] * y[c];
            return std::sqrt(rad) < r2;
        });
    const double flux = integrate(grad_term, support).value;
    rep.bound = 2.0 * (variant == JacobiVariant::curvature ? max_w : 1.0) * flux;
    rep.ok = rep.mass <= rep.bound + 1e-12 * std::max(1.0, std::abs(rep.bound));
    return rep;
}

// ---------------------------------------------------------------------------
// sup-versus-integral comparison
// ---------------------------------------------------------------------------

C11Report c11_comparison(const FieldBundle& u, const ScalarField& phi,
                         const MoserSchedule& schedule, JacobiVariant variant) {
    require_same_layout(u.value.grid, phi.grid, "sup-integral cutoff");
    const Grid& g = u.value.grid;
    const int dim = g.dim;
    if (dim != schedule.n)
        throw std::invalid_argument("sup-integral: schedule dimension mismatch");
    if (inscribed_radius(g) < 1.0 - kTol)
        throw std::invalid_argument("sup-integral: grid does not cover the unit ball");

    const Index total = g.size();
    for (Index i = 0; i < total; ++i)
        if (phi[i] < 0.0) throw std::domain_error("sup-integral: cutoff must be >= 0");

    ScalarField A(g);
    ScalarField weight(g, 1.0);
    if (variant == JacobiVariant::hessian) {
        for (Index i = 0; i < total; ++i) A[i] = hessian_trace(u.hess, i, dim);
    } else {
        const GraphFrame frame = build_graph_frame(u);
        A = frame.H;
        weight = frame.W;
    }

    const RegionMask half = ball_mask(g, 0.5);
    const RegionMask unit = ball_mask(g, 1.0);

    double scale = 0.0;
    for (Index i = 0; i < total; ++i)
        if (unit.contains(i)) scale = std::max(scale, std::abs(A[i]));
    for (Index i = 0; i < total; ++i)
        if (unit.contains(i) && A[i] < -1e-9 * std::max(1.0, scale))
            throw std::domain_error("sup-integral: A is negative on the unit ball");

    C11Report rep;
    const int n = schedule.n;
    for (Index i = 0; i < total; ++i) {
        if (!half.contains(i)) continue;
        const double v = std::pow(phi[i], 2 * n) * A[i];
        if (v > rep.lhs) {
            rep.lhs = v;
            rep.argmax = i;
        }
    }
    ScalarField integrand(g);
    for (Index i = 0; i < total; ++i)
        integrand[i] = std::pow(phi[i], n) * std::pow(std::max(A[i], 0.0), n + 1) * weight[i];
    rep.rhs = integrate(integrand, unit).value;

    if (rep.rhs > 0.0) {
        rep.ratio = rep.lhs / rep.rhs;
    } else if (rep.lhs > 0.0) {
        throw std::runtime_error(
            "sup-integral: positive sup with zero integral (cutoff/mask bug)");
    }
    return rep;
}

// ---------------------------------------------------------------------------
// iteration constants
// ---------------------------------------------------------------------------

IterationConstants iteration_constants(const MoserSchedule& s) {
    const double gamma = s.gamma;
    IterationConstants c;
    for (int k = 1; k <= s.k0; ++k) {
        const double w = std::pow(gamma, k - s.k0);
        c.sum_a += w;
        c.sum_b += (s.k0 - k) * w;
        c.product_log += 4.0 * w * std::log(s.p[k] - 2.0);
    }
    const double gm1 = gamma - 1.0;
    c.cap_sums = gamma * gamma / (gm1 * gm1) + gamma / gm1;
    c.cap_product_log = 4.0 * std::log(gamma) * gamma / (gm1 * gm1) +
                        4.0 * std::log(double(s.n)) * gamma / gm1;
    if (c.sum_a > c.cap_sums + kTol || c.sum_b > c.cap_sums + kTol)
        throw std::runtime_error("iteration constants: geometric sum exceeded its cap");
    if (c.product_log > c.cap_product_log + kTol)
        throw std::runtime_error("iteration constants: product log exceeded its cap");
    return c;
}

}  // namespace s2lab
