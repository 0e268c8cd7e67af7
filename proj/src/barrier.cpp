#include "s2lab/barrier.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "s2lab/fd.hpp"
#include "s2lab/graph_frame.hpp"
#include "s2lab/masks.hpp"
#include "s2lab/sigma2.hpp"

namespace s2lab {

namespace {

std::vector<double> identity_rotation(int n) {
    std::vector<double> R(n * n, 0.0);
    for (int i = 0; i < n; ++i) R[i * n + i] = 1.0;
    return R;
}

void require_rotation(const std::vector<double>& R, int n, const char* what) {
    if (static_cast<int>(R.size()) != n * n)
        throw std::invalid_argument(std::string(what) + ": rotation has wrong size");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double dot = 0.0;
            for (int k = 0; k < n; ++k) dot += R[k * n + i] * R[k * n + j];
            if (std::abs(dot - (i == j ? 1.0 : 0.0)) > 1e-8)
                throw std::invalid_argument(std::string(what) + ": rotation not orthogonal");
        }
}

/// Quadratic axis coefficients in rotated coordinates: w's pure-quadratic
/// part is sum_k q_k y_k^2.
void axis_coefficients(const Barrier& b, double* q) {
    const int n = b.dim;
    if (b.kind == BarrierKind::euclidean) {
        q[0] = q[1] = 2.0 * b.delta * (n - 2);
    } else {
        q[0] = q[1] = b.delta * b.M;
    }
    for (int k = 2; k < n; ++k) q[k] = -b.delta;
}

double constant_term(const Barrier& b) {
    return b.kind == BarrierKind::euclidean ? b.delta / 8.0 : b.delta / 4.0;
}

/// |(y1, y2)| for the barrier plane of rotation R.
double tube_rho(const std::vector<double>& R, int n, const double* x) {
    double y0 = 0.0, y1 = 0.0;
    for (int j = 0; j < n; ++j) {
        y0 += R[j] * x[j];
        y1 += R[n + j] * x[j];
    }
    return std::hypot(y0, y1);
}

}  // namespace

// ---------------------------------------------------------------------------
// normalization
// ---------------------------------------------------------------------------

NormalizedSolution normalize_solution(const FieldBundle& u, const ScalarField& f) {
    const Grid& grid = u.value.grid;
    require_same_layout(f.grid, grid, "normalize_solution f");
    double f_min = f[0];
    for (Index i = 0; i < f.size(); ++i) f_min = std::min(f_min, f[i]);
    if (!(f_min > 0.0))
        throw std::domain_error("normalize_solution: forcing must be positive everywhere");

    const Index o = grid.origin_node();
    const double u0 = u.value[o];
    const double* du0 = u.grad.at(o);
    // The squared scale is the primary quantity: f_hat = scale2 * f has to
    // come out >= 1 at the argmin in floating point as well (downstream
    // hypothesis gates test f >= 1 exactly), so the reciprocal carries a
    // 4-ulp safety factor instead of trusting sqrt(x)^2 * x to round up.
    const double scale2 =
        f_min >= 1.0
            ? 1.0
            : (1.0 + 4.0 * std::numeric_limits<double>::epsilon()) / f_min;
    const double scale = std::sqrt(scale2);

    NormalizedSolution out;
    out.scale = scale;
    out.u_hat = ScalarField(grid);
    out.f_hat = ScalarField(grid);
    double x[kMaxDim];
    for (GridWalker w(grid); !w.done(); w.advance()) {
        grid.node_coords(w.idx(), x);
        const Index i = w.flat();
        double plane = u0;
        for (int c = 0; c < grid.dim; ++c) plane += du0[c] * x[c];
        out.u_hat[i] = scale * (u.value[i] - plane);
        out.f_hat[i] = scale2 * f[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// tube gap
// ---------------------------------------------------------------------------

namespace {

struct WallSamples {
    std::vector<double> coords;  ///< K * n, nodes of B1
    std::vector<double> values;  ///< K, u_hat there
    int n = 0;
};

/// min of u_hat over the discrete wall; returns false when the shell caught
/// no node.  Early-aborts once the running minimum drops below `floor`.
bool wall_min(const WallSamples& s, const std::vector<double>& R, double r_t,
              double band, double floor_value, double* out_min, Index* out_count) {
    const int n = s.n;
    double best = 0.0;
    Index count = 0;
    const std::size_t K = s.values.size();
    for (std::size_t k = 0; k < K; ++k) {
        const double* x = s.coords.data() + k * n;
        const double rho = tube_rho(R, n, x);
        if (std::abs(rho - r_t) > band) continue;
        const double v = s.values[k];
        if (count == 0 || v < best) best = v;
        ++count;
        if (out_count == nullptr && best < floor_value) {
            *out_min = best;
            return true;  // already worse than the incumbent, caller discards
        }
    }
    if (count == 0) return false;
    *out_min = best;
    if (out_count) *out_count = count;
    return true;
}

std::vector<double> axis_pair_rotation(int n, int i, int j) {
    std::vector<double> R(n * n, 0.0);
    R[0 * n + i] = 1.0;
    R[1 * n + j] = 1.0;
    int row = 2;
    for (int k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        R[row * n + k] = 1.0;
        ++row;
    }
    return R;
}

std::vector<double> random_rotation(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    Eigen::MatrixXd Q = qr.householderQ();
    // fix the sign convention so the factorization is unique
    const Eigen::MatrixXd Rf = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j)
        if (Rf(j, j) < 0) Q.col(j) = -Q.col(j);
    std::vector<double> R(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) R[i * n + j] = Q(j, i);  // rows of R = Q columns
    return R;
}

/// Left-multiplies R by the Givens rotation mixing output rows p and q.
std::vector<double> givens_apply(const std::vector<double>& R, int n, int p, int q,
                                 double theta) {
    std::vector<double> out = R;
    const double c = std::cos(theta), s = std::sin(theta);
    for (int j = 0; j < n; ++j) {
        const double rp = R[p * n + j], rq = R[q * n + j];
        out[p * n + j] = c * rp + s * rq;
        out[q * n + j] = -s * rp + c * rq;
    }
    return out;
}

}  // namespace

TubeGap find_tube_gap(const ScalarField& u_hat, double tube_radius,
                      const TubeGapOptions& opt) {
    const Grid& grid = u_hat.grid;
    const int n = grid.dim;
    if (n < 2) throw std::invalid_argument("find_tube_gap: need dim >= 2");
    if (!(tube_radius > 0.0 && tube_radius < 1.0))
        throw std::invalid_argument("find_tube_gap: tube radius must lie in (0,1)");
    const double band = opt.band > 0.0 ? opt.band : grid.spacing;

    // the grid must actually contain the unit ball
    for (int axis = 0; axis < n; ++axis) {
        const double lo = grid.origin[axis];
        const double hi = grid.coord(axis, grid.shape[axis] - 1);
        if (lo > -1.0 + 1e-12 || hi < 1.0 - 1e-12)
            throw std::invalid_argument("find_tube_gap: grid does not cover the unit ball");
    }

    // normalization preconditions
    const Index o = grid.origin_node();
    if (std::abs(u_hat[o]) > 1e-6)
        throw std::domain_error("find_tube_gap: u_hat(0) != 0 (normalize first)");
    const RegionMask b1 = ball_mask(grid, 1.0);
    for (Index i = 0; i < grid.size(); ++i)
        if (b1.contains(i) && u_hat[i] < -1e-6)
            throw std::domain_error("find_tube_gap: u_hat negative inside B1");
    {
        const SymmetricMatrixField hess = fd_hessian(u_hat);
        double s2_min = 0.0;
        bool first = true;
        for (Index i = 0; i < grid.size(); ++i) {
            if (!b1.contains(i)) continue;
            const double s2 = sigma2_direct(hess.at(i), n);
            if (first || s2 < s2_min) s2_min = s2;
            first = false;
        }
        if (first || s2_min < opt.sigma2_floor)
            throw std::domain_error(
                "find_tube_gap: sigma2 of the Hessian drops below the floor on B1 "
                "(degenerate input)");
    }

    WallSamples samples;
    samples.n = n;
    {
        double x[kMaxDim];
        for (GridWalker w(grid); !w.done(); w.advance()) {
            if (!b1.contains(w.flat())) continue;
            grid.node_coords(w.idx(), x);
            samples.coords.insert(samples.coords.end(), x, x + n);
            samples.values.push_back(u_hat[w.flat()]);
        }
    }

    // candidates: axis pairs, then seeded random rotations
    std::vector<std::vector<double>> candidates;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) candidates.push_back(axis_pair_rotation(n, i, j));
    std::mt19937_64 rng(opt.seed);
    for (int k = 0; k < opt.random_candidates; ++k) candidates.push_back(random_rotation(n, rng));

    std::vector<double> best_R;
    double best_delta = -1.0;
    for (const auto& R : candidates) {
        double d = 0.0;
        if (!wall_min(samples, R, tube_radius, band, best_delta, &d, nullptr)) continue;
        if (d > best_delta) {
            best_delta = d;
            best_R = R;
        }
    }
    if (best_R.empty())
        throw std::invalid_argument("find_tube_gap: wall band caught no grid node "
                                    "(radius unresolved at this spacing)");

    // greedy Givens refinement mixing the tube plane with its complement
    double theta = 0.2;
    for (int sweep = 0; sweep < opt.refine_sweeps && theta > 1e-4; ++sweep) {
        bool improved = false;
        for (int p = 0; p < 2 && p < n; ++p)
            for (int q = 2; q < n; ++q)
                for (double sgn : {1.0, -1.0}) {
                    const std::vector<double> R2 = givens_apply(best_R, n, p, q, sgn * theta);
                    double d = 0.0;
                    if (!wall_min(samples, R2, tube_radius, band, best_delta, &d, nullptr))
                        continue;
                    if (d > best_delta) {
                        best_delta = d;
                        best_R = R2;
                        improved = true;
                    }
                }
        if (!improved) theta *= 0.5;
    }

    TubeGap gap;
    gap.rotation = best_R;
    gap.tube_radius = tube_radius;
    gap.band = band;
    if (!wall_min(samples, best_R, tube_radius, band, -1.0, &gap.delta, &gap.wall_nodes))
        throw std::runtime_error("find_tube_gap: wall band vanished after refinement");
    if (!(gap.delta > opt.min_delta))
        throw std::runtime_error("find_tube_gap: no rotation achieves a positive gap");
    return gap;
}

// ---------------------------------------------------------------------------
// barriers
// ---------------------------------------------------------------------------

double Barrier::value(const double* x) const {
    double q[kMaxDim];
    axis_coefficients(*this, q);
    double total = constant_term(*this) + support_plane.eval(x);
    for (int k = 0; k < dim; ++k) {
        double yk = 0.0;
        for (int j = 0; j < dim; ++j) yk += rotation[k * dim + j] * x[j];
        total += q[k] * yk * yk;
    }
    return total;
}

void Barrier::gradient(const double* x, double* g) const {
    double q[kMaxDim];
    axis_coefficients(*this, q);
    for (int j = 0; j < dim; ++j) g[j] = support_plane.c1.empty() ? 0.0 : support_plane.c1[j];
    for (int k = 0; k < dim; ++k) {
        double yk = 0.0;
        for (int j = 0; j < dim; ++j) yk += rotation[k * dim + j] * x[j];
        for (int j = 0; j < dim; ++j) g[j] += 2.0 * q[k] * yk * rotation[k * dim + j];
    }
}

void Barrier::hessian_packed(double* h) const {
    double q[kMaxDim];
    axis_coefficients(*this, q);
    int idx = 0;
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j, ++idx) {
            double s = 0.0;
            for (int k = 0; k < dim; ++k) s += 2.0 * q[k] * rotation[k * dim + i] * rotation[k * dim + j];
            h[idx] = s;
        }
}

double Barrier::quadratic_part(const double* x) const {
    return value(x) - support_plane.eval(x);
}

Barrier build_barrier_euclidean(double delta, int n, const std::vector<double>& rotation) {
    if (n < 3) throw std::invalid_argument("build_barrier_euclidean: need n >= 3");
    if (!(delta > 0.0)) throw std::invalid_argument("build_barrier_euclidean: delta must be > 0");
    std::vector<double> R = rotation.empty() ? identity_rotation(n) : rotation;
    require_rotation(R, n, "build_barrier_euclidean");
    Barrier b;
    b.kind = BarrierKind::euclidean;
    b.dim = n;
    b.delta = delta;
    b.rotation = std::move(R);
    b.support_plane.c0 = 0.0;
    b.support_plane.c1.assign(n, 0.0);
    return b;
}

Barrier build_barrier_curvature(double delta, double M, const AffineFunction& L,
                                const std::vector<double>& rotation) {
    if (!(delta > 0.0)) throw std::invalid_argument("build_barrier_curvature: delta must be > 0");
    if (!(M > 0.0)) throw std::invalid_argument("build_barrier_curvature: M must be > 0");
    const int n = static_cast<int>(L.c1.size());
    if (n < 3) throw std::invalid_argument("build_barrier_curvature: need n >= 3 (via L)");
    std::vector<double> R = rotation.empty() ? identity_rotation(n) : rotation;
    require_rotation(R, n, "build_barrier_curvature");
    Barrier b;
    b.kind = BarrierKind::curvature;
    b.dim = n;
    b.delta = delta;
    b.M = M;
    b.r = std::sqrt(1.0 / (4.0 * (M + 1.0)));
    b.rotation = std::move(R);
    b.support_plane = L;
    return b;
}

// ---------------------------------------------------------------------------
// certificates
// ---------------------------------------------------------------------------

namespace {

Index omega_component_count(const ScalarField& u_hat, const Barrier& b) {
    const Grid& grid = u_hat.grid;
    RegionMask below(grid);
    double x[kMaxDim];
    for (GridWalker w(grid); !w.done(); w.advance()) {
        grid.node_coords(w.idx(), x);
        below.m[w.flat()] = u_hat[w.flat()] < b.value(x) ? 1 : 0;
    }
    const Index o = grid.origin_node();
    if (!below.contains(o)) return 0;
    return connected_component(below, o).count();
}

}  // namespace

BarrierCertificate verify_barrier(const FieldBundle& u, const Barrier& barrier,
                                  double tube_radius, double gap_delta,
                                  const VerifyOptions& opt) {
    const Grid& grid = u.value.grid;
    const int n = grid.dim;
    if (n != barrier.dim)
        throw std::invalid_argument("verify_barrier: dimension mismatch");
    if (!(tube_radius > 0.0 && tube_radius < 1.0))
        throw std::invalid_argument("verify_barrier: tube radius must lie in (0,1)");
    if (!(gap_delta > 0.0))
        throw std::invalid_argument("verify_barrier: measured tube gap must be > 0");
    const double band = opt.band > 0.0 ? opt.band : grid.spacing;

    BarrierCertificate cert;
    cert.tube_radius = tube_radius;
    cert.gap_delta = gap_delta;
    cert.barrier_delta = barrier.delta;
    cert.band = band;

    // (1) origin separation
    const Index o = grid.origin_node();
    double zero[kMaxDim] = {0.0};
    cert.origin_margin = barrier.value(zero) - u.value[o];
    cert.origin_ok = cert.origin_margin > 0.0;

    // (2) 2-convexity of the (possibly conjugated) barrier Hessian
    double hw[kMaxDim * (kMaxDim + 1) / 2];
    barrier.hessian_packed(hw);
    const RegionMask b1 = ball_mask(grid, 1.0);
    double hess_scale = 0.0;
    for (int k = 0; k < sym_size(n); ++k) hess_scale = std::max(hess_scale, std::abs(hw[k]));
    const double tol2 = opt.cone_tol * std::max(1.0, hess_scale * hess_scale);
    if (barrier.kind == BarrierKind::euclidean) {
        double s1 = 0.0;
        for (int i = 0; i < n; ++i) s1 += hw[sym_index(n, i, i)];
        cert.sigma1_min = s1;
        cert.two_convex_margin = sigma2_direct(hw, n);
    } else {
        double conj[kMaxDim * (kMaxDim + 1) / 2];
        bool first = true;
        for (Index i = 0; i < grid.size(); ++i) {
            if (!b1.contains(i)) continue;
            conjugated_hessian(u.grad.at(i), hw, n, conj);
            double s1 = 0.0;
            for (int d = 0; d < n; ++d) s1 += conj[sym_index(n, d, d)];
            const double s2 = sigma2_direct(conj, n);
            if (first || s1 < cert.sigma1_min) cert.sigma1_min = s1;
            if (first || s2 < cert.two_convex_margin) cert.two_convex_margin = s2;
            first = false;
        }
        if (first) throw std::invalid_argument("verify_barrier: B1 holds no grid node");
    }
    cert.two_convex_ok = cert.sigma1_min > 0.0 && cert.two_convex_margin >= -tol2;

    // (3) wall and (4) cap conditions on the quadratic part w - L
    double wall_max = 0.0, cap_max = 0.0;
    double x[kMaxDim];
    for (GridWalker w(grid); !w.done(); w.advance()) {
        grid.node_coords(w.idx(), x);
        double r2 = 0.0;
        for (int c = 0; c < n; ++c) r2 += x[c] * x[c];
        const double rad = std::sqrt(r2);
        const double rho = tube_rho(barrier.rotation, n, x);
        if (rad <= 1.0 + 1e-12 && std::abs(rho - tube_radius) <= band) {
            const double qv = barrier.quadratic_part(x);
            if (cert.wall_count == 0 || qv > wall_max) wall_max = qv;
            ++cert.wall_count;
        }
        if (std::abs(rad - 1.0) <= band && rad > 0.0) {
            // The cap condition lives on the unit sphere and involves only
            // the barrier's closed form, so shell nodes act as direction
            // samples: evaluate at the radial projection instead of the
            // off-sphere node (which sits up to `band` inside the sphere,
            // where the quadratic part is larger by O(band) — a false
            // positive at coarse spacing, not a property of the barrier).
            double xs[kMaxDim];
            for (int c = 0; c < n; ++c) xs[c] = x[c] / rad;
            if (tube_rho(barrier.rotation, n, xs) <= tube_radius) {
                const double qv = barrier.quadratic_part(xs);
                if (cert.cap_count == 0 || qv > cap_max) cap_max = qv;
                ++cert.cap_count;
            }
        }
    }
    if (cert.wall_count == 0)
        throw std::invalid_argument("verify_barrier: wall band caught no grid node");
    if (cert.cap_count == 0)
        throw std::invalid_argument("verify_barrier: cap band caught no grid node");
    cert.wall_margin = gap_delta - wall_max;
    cert.wall_ok = cert.wall_margin > 0.0;
    cert.cap_margin = -cap_max;
    cert.cap_ok = cert.cap_margin > 0.0;

    cert.omega_count = cert.origin_ok ? omega_component_count(u.value, barrier) : 0;
    cert.valid = cert.origin_ok && cert.two_convex_ok && cert.wall_ok && cert.cap_ok;
    return cert;
}

// ---------------------------------------------------------------------------
// Omega and the cutoff field
// ---------------------------------------------------------------------------

OmegaField extract_omega(const ScalarField& u_hat, const Barrier& barrier) {
    const Grid& grid = u_hat.grid;
    if (grid.dim != barrier.dim)
        throw std::invalid_argument("extract_omega: dimension mismatch");

    ScalarField w_field(grid);
    RegionMask below(grid);
    double x[kMaxDim];
    for (GridWalker w(grid); !w.done(); w.advance()) {
        grid.node_coords(w.idx(), x);
        w_field[w.flat()] = barrier.value(x);
        below.m[w.flat()] = u_hat[w.flat()] < w_field[w.flat()] ? 1 : 0;
    }
    const Index o = grid.origin_node();
    if (!below.contains(o))
        throw std::domain_error("extract_omega: the origin is not inside {u_hat < w}");

    OmegaField out;
    out.omega = connected_component(below, o);
    out.phi = ScalarField(grid);
    for (Index i = 0; i < grid.size(); ++i) {
        if (!out.omega.contains(i)) continue;
        const double t = w_field[i] - u_hat[i];
        out.phi[i] = t * t * t * t;
    }
    return out;
}

// ---------------------------------------------------------------------------
// end-to-end convenience
// ---------------------------------------------------------------------------

BarrierPipelineResult make_euclidean_barrier(const FieldBundle& u_hat,
                                             double tube_radius,
                                             const TubeGapOptions& opt) {
    BarrierPipelineResult out;
    out.gap = find_tube_gap(u_hat.value, tube_radius, opt);
    out.barrier =
        build_barrier_euclidean(0.9 * out.gap.delta, u_hat.value.grid.dim, out.gap.rotation);
    out.certificate = verify_barrier(u_hat, out.barrier, tube_radius, out.gap.delta);
    return out;
}

BarrierPipelineResult make_curvature_barrier(const FieldBundle& u_hat,
                                             const TubeGapOptions& opt,
                                             int max_power_steps) {
    const Grid& grid = u_hat.value.grid;
    const int n = grid.dim;
    const Index o = grid.origin_node();
    AffineFunction L;
    L.c0 = u_hat.value[o];
    L.c1.assign(u_hat.grad.at(o), u_hat.grad.at(o) + n);

    double M = 1.0;
    for (int step = 0; step < max_power_steps; ++step, M *= 2.0) {
        const double r = std::sqrt(1.0 / (4.0 * (M + 1.0)));
        TubeGap gap;
        try {
            gap = find_tube_gap(u_hat.value, r, opt);
        } catch (const std::invalid_argument&) {
            continue;  // radius unresolved at this spacing; try the next M
        }
        const Barrier b = build_barrier_curvature(0.9 * gap.delta, M, L, gap.rotation);
        const BarrierCertificate cert = verify_barrier(u_hat, b, r, gap.delta);
        if (cert.valid) {
            BarrierPipelineResult out;
            out.gap = gap;
            out.barrier = b;
            out.certificate = cert;
            return out;
        }
    }
    throw std::runtime_error(
        "make_curvature_barrier: no admissible M found (certificate never passed)");
}

}  // namespace s2lab
