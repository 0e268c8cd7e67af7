#include "s2lab/audit.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "s2lab/barrier.hpp"
#include "s2lab/fd.hpp"
#include "s2lab/field_io.hpp"
#include "s2lab/jacobi.hpp"
#include "s2lab/masks.hpp"
#include "s2lab/moser.hpp"
#include "s2lab/sigma2.hpp"
#include "s2lab/solver.hpp"

namespace s2lab {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// config (de)serialization
// ---------------------------------------------------------------------------

const char* const kConfigKeys[] = {
    "dimension", "h_list",     "family",     "sweep",
    "eps",       "tube_radius", "p_max",      "out_dir",
    "seed",      "half_width",  "spread_tol", "max_solver_iters",
    "mode"};

void validate_config(const AuditConfig& cfg) {
    if (cfg.dimension < 3 || cfg.dimension > kMaxDim)
        throw std::invalid_argument("audit config: dimension must lie in [3, 10]");
    if (cfg.h_list.size() < 2)
        throw std::invalid_argument(
            "audit config: need at least two grid spacings (refinement stability)");
    for (double h : cfg.h_list)
        if (!(h > 0.0) || !(h <= cfg.half_width / 2.0))
            throw std::invalid_argument("audit config: spacings must satisfy 0 < h <= half_width/2");
    std::vector<double> hs = cfg.h_list;
    std::sort(hs.begin(), hs.end());
    if (std::adjacent_find(hs.begin(), hs.end()) != hs.end())
        throw std::invalid_argument("audit config: duplicate grid spacing");
    if (cfg.sweep.empty())
        throw std::invalid_argument("audit config: parameter sweep must be nonempty");
    if (cfg.family.empty())
        throw std::invalid_argument("audit config: family name must be nonempty");
    if (!(cfg.eps > 0.0 && cfg.eps < 1.0))
        throw std::invalid_argument("audit config: eps must lie in (0,1)");
    if (!(cfg.tube_radius > 0.0 && cfg.tube_radius < 1.0))
        throw std::invalid_argument("audit config: tube radius must lie in (0,1)");
    if (cfg.p_max < 2)
        throw std::invalid_argument("audit config: p_max must be at least 2");
    if (!(cfg.half_width >= 1.0))
        throw std::invalid_argument(
            "audit config: half_width must be >= 1 (unit-ball stages)");
    if (!(cfg.spread_tol >= 1.0))
        throw std::invalid_argument("audit config: spread tolerance must be >= 1");
    if (cfg.max_solver_iters < 1)
        throw std::invalid_argument("audit config: max_solver_iters must be >= 1");
    if (cfg.mode != "independence" && cfg.mode != "full_pipeline")
        throw std::invalid_argument(
            "audit config: mode must be 'independence' or 'full_pipeline'");
}

json config_to_json_obj(const AuditConfig& cfg) {
    json j;
    j["dimension"] = cfg.dimension;
    j["h_list"] = cfg.h_list;
    j["family"] = cfg.family;
    j["sweep"] = cfg.sweep;
    j["eps"] = cfg.eps;
    j["tube_radius"] = cfg.tube_radius;
    j["p_max"] = cfg.p_max;
    j["out_dir"] = cfg.out_dir;
    j["seed"] = cfg.seed;
    j["half_width"] = cfg.half_width;
    j["spread_tol"] = cfg.spread_tol;
    j["max_solver_iters"] = cfg.max_solver_iters;
    j["mode"] = cfg.mode;
    return j;
}

AuditConfig config_from_json_obj(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("audit config: expected a JSON object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : kConfigKeys) known = known || item.key() == k;
        if (!known)
            throw std::invalid_argument("audit config: unknown key '" + item.key() + "'");
    }
    AuditConfig cfg;
    if (j.contains("dimension")) cfg.dimension = j.at("dimension").get<int>();
    if (j.contains("h_list")) cfg.h_list = j.at("h_list").get<std::vector<double>>();
    if (j.contains("family")) cfg.family = j.at("family").get<std::string>();
    if (j.contains("sweep")) cfg.sweep = j.at("sweep").get<std::vector<double>>();
    if (j.contains("eps")) cfg.eps = j.at("eps").get<double>();
    if (j.contains("tube_radius")) cfg.tube_radius = j.at("tube_radius").get<double>();
    if (j.contains("p_max")) cfg.p_max = j.at("p_max").get<int>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("half_width")) cfg.half_width = j.at("half_width").get<double>();
    if (j.contains("spread_tol")) cfg.spread_tol = j.at("spread_tol").get<double>();
    if (j.contains("max_solver_iters"))
        cfg.max_solver_iters = j.at("max_solver_iters").get<int>();
    if (j.contains("mode")) cfg.mode = j.at("mode").get<std::string>();
    validate_config(cfg);
    return cfg;
}

// ---------------------------------------------------------------------------
// sweep families
// ---------------------------------------------------------------------------

int oscillation_count(double param) {
    const int k = static_cast<int>(std::lround(param));
    if (k < 1 || std::abs(param - k) > 1e-9)
        throw std::invalid_argument(
            "audit: oscillatory sweep values must be integers >= 1");
    return k;
}

/// Boundary data interpolating from the identity quadratic (t = 0) to a
/// trace-positive saddle (t = 1): diag(1+4t, ..., 1+4t, 1-2t).  The problem
/// stays uniformly elliptic for t in [0,1] but the solution stops being
/// convex once 1 - 2t < 0, exercising the certificate gate.
ManufacturedCase two_convex_case(const Grid& g, double t) {
    if (!(t >= 0.0 && t <= 1.0))
        throw std::invalid_argument("audit: two_convex_quadratic expects t in [0,1]");
    const int n = g.dim;
    std::vector<double> lambda(n, 1.0 + 4.0 * t);
    lambda[n - 1] = 1.0 - 2.0 * t;
    double s2 = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) s2 += lambda[i] * lambda[j];
    if (!(s2 > 0.0))
        throw std::invalid_argument("audit: two_convex_quadratic forcing not positive");

    ManufacturedCase c;
    c.u_exact.value = ScalarField(g);
    c.u_exact.grad = VectorField(g);
    c.u_exact.hess = SymmetricMatrixField(g);
    c.u_exact.provenance = DerivProvenance::analytic;
    c.f = ScalarField(g, s2);
    double x[kMaxDim];
    for (GridWalker w(g); !w.done(); w.advance()) {
        g.node_coords(w.idx(), x);
        const Index i = w.flat();
        double val = 0.0;
        for (int a = 0; a < n; ++a) {
            val += 0.5 * lambda[a] * x[a] * x[a];
            c.u_exact.grad.at(i)[a] = lambda[a] * x[a];
            c.u_exact.hess.at(i)[sym_index(n, a, a)] = lambda[a];
        }
        c.u_exact.value[i] = val;
    }
    c.boundary = c.u_exact.value;
    return c;
}

ManufacturedCase make_member(const std::string& family, const Grid& g, double param) {
    ManufacturedParams p;
    if (family == "quadratic") {
        if (!(param > 0.0))
            throw std::invalid_argument("audit: quadratic sweep values must be positive");
        p.diag.assign(g.dim, param);
        return manufactured_case("quadratic", g, p);
    }
    if (family == "paraboloid_perturbed") {
        p.eps = param;
        return manufactured_case("paraboloid_perturbed", g, p);
    }
    if (family == "radial_quartic") {
        p.beta = param;
        return manufactured_case("radial_quartic", g, p);
    }
    if (family == "exp_sum") return manufactured_case("exp_sum", g, p);
    if (family == "f_oscillatory_family") {
        p.k = oscillation_count(param);
        return manufactured_case("f_oscillatory_family", g, p);
    }
    if (family == "two_convex_quadratic") return two_convex_case(g, param);
    throw std::invalid_argument("audit: unknown family '" + family + "'");
}

double closed_form_c2(const std::string& family, double param) {
    if (family == "f_oscillatory_family") return oscillation_count(param) / 2.0;
    if (family == "quadratic" || family == "two_convex_quadratic") return 0.0;
    return -1.0;  // not available
}

// ---------------------------------------------------------------------------
// measurement helpers
// ---------------------------------------------------------------------------

double max_second_difference(const ScalarField& f) {
    const RegionMask central = box_interior_mask(f.grid, 1);
    double m = 0.0;
    for (int axis = 0; axis < f.grid.dim; ++axis) {
        const ScalarField d = fd_second_derivative(f, axis);
        for (Index i = 0; i < f.size(); ++i)
            if (central.contains(i)) m = std::max(m, std::abs(d[i]));
    }
    return m;
}

/// Dedicated measurement grid for the oscillatory forcing: ~16 samples per
/// oscillation along x1 (the only axis the family depends on), thin in every
/// other axis.  The solve grid undersamples large k: second differences
/// would report an artificially flat sweep, and the one-sided face stencils
/// overshoot the true slope of an unresolved sine.
ManufacturedCase refined_family_case(int dim, double half_width, int k) {
    const double hp = 1.0 / (8.0 * k);
    const int m = static_cast<int>(std::lround(half_width / hp));
    std::vector<int> shape(dim, 5);
    shape[0] = 2 * m + 1;
    std::vector<double> origin(dim, -2.0 * hp);
    origin[0] = -m * hp;
    const Grid pg(dim, shape, hp, origin);
    ManufacturedParams p;
    p.k = k;
    return manufactured_case("f_oscillatory_family", pg, p);
}

double refined_c2_proxy(int dim, double half_width, int k) {
    return max_second_difference(refined_family_case(dim, half_width, k).f);
}

/// Central first differences only (margin-1 mask): on the refinement grid
/// k * hp = 1/8 uniformly, so every member measures the same fraction
/// sin(1/8)/(1/8) = 0.9974 of its true slope 1/2 — the column is flat in k
/// by construction, exactly as the family's Lipschitz norm is.
double refined_lip_proxy(int dim, double half_width, int k) {
    const ManufacturedCase c = refined_family_case(dim, half_width, k);
    return lipschitz_norm(c.f, box_interior_mask(c.f.grid, 1)).lip;
}

FieldBundle barrier_bundle(const Barrier& b, const Grid& g) {
    FieldBundle out;
    out.value = ScalarField(g);
    out.grad = VectorField(g);
    out.hess = SymmetricMatrixField(g);
    out.provenance = DerivProvenance::analytic;
    double hp[kMaxDim * (kMaxDim + 1) / 2];
    b.hessian_packed(hp);
    double x[kMaxDim];
    for (GridWalker w(g); !w.done(); w.advance()) {
        g.node_coords(w.idx(), x);
        const Index i = w.flat();
        out.value[i] = b.value(x);
        b.gradient(x, out.grad.at(i));
        for (int kk = 0; kk < sym_size(g.dim); ++kk) out.hess.at(i)[kk] = hp[kk];
    }
    return out;
}

double rel_drift(double coarse, double fine) {
    const double denom = std::max(std::abs(fine), 1e-300);
    return std::abs(coarse - fine) / denom;
}

std::string param_label(double param) { return json(param).dump(); }

// ---------------------------------------------------------------------------
// artifact output
// ---------------------------------------------------------------------------

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("audit: cannot open '" + path.string() + "'");
    os << text;
    if (!os) throw std::runtime_error("audit: write failed for '" + path.string() + "'");
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

json jacobi_to_json(const JacobiReport& r) {
    json j;
    j["min_residual"] = r.min_residual;
    j["argmin"] = r.argmin;
    j["epsilon"] = r.epsilon;
    j["constant"] = r.constant_policy.c_eps;
    j["constant_formula"] = r.constant_policy.formula;
    j["variant"] = jacobi_variant_name(r.variant);
    j["mask_nodes"] = r.mask.count();
    return j;
}

json certificate_to_json(const BarrierCertificate& c) {
    json j;
    j["valid"] = c.valid;
    j["origin_ok"] = c.origin_ok;
    j["two_convex_ok"] = c.two_convex_ok;
    j["wall_ok"] = c.wall_ok;
    j["cap_ok"] = c.cap_ok;
    j["origin_margin"] = c.origin_margin;
    j["sigma1_min"] = c.sigma1_min;
    j["two_convex_margin"] = c.two_convex_margin;
    j["wall_margin"] = c.wall_margin;
    j["cap_margin"] = c.cap_margin;
    j["tube_radius"] = c.tube_radius;
    j["gap_delta"] = c.gap_delta;
    j["barrier_delta"] = c.barrier_delta;
    j["band"] = c.band;
    j["wall_count"] = c.wall_count;
    j["cap_count"] = c.cap_count;
    j["omega_count"] = c.omega_count;
    return j;
}

// ---------------------------------------------------------------------------
// report (de)serialization
// ---------------------------------------------------------------------------

json row_to_json(const AuditRow& r) {
    json j;
    j["param"] = r.param;
    j["h"] = r.h;
    j["lip_f"] = r.lip_f;
    j["c2_proxy"] = r.c2_proxy;
    j["c2_solve_grid"] = r.c2_solve_grid;
    j["c2_closed_form"] = r.c2_closed_form;
    j["gap_delta"] = r.gap_delta;
    j["trace_origin"] = r.trace_origin;
    j["trace_jacobi_min"] = r.trace_jacobi_min;
    j["boundary_jacobi_min"] = r.boundary_jacobi_min;
    j["min_jacobi_residual"] = r.min_jacobi_residual;
    j["max_rho"] = r.max_rho;
    j["c11_ratio"] = r.c11_ratio;
    j["rho_drift"] = r.rho_drift;
    j["c11_drift"] = r.c11_drift;
    j["convexity_pass"] = r.convexity_pass;
    j["rho_profile"] = r.rho_profile;
    return j;
}

AuditRow row_from_json(const json& j) {
    AuditRow r;
    r.param = j.at("param").get<double>();
    r.h = j.at("h").get<double>();
    r.lip_f = j.at("lip_f").get<double>();
    r.c2_proxy = j.at("c2_proxy").get<double>();
    r.c2_solve_grid = j.at("c2_solve_grid").get<double>();
    r.c2_closed_form = j.at("c2_closed_form").get<double>();
    r.gap_delta = j.at("gap_delta").get<double>();
    r.trace_origin = j.at("trace_origin").get<double>();
    r.trace_jacobi_min = j.at("trace_jacobi_min").get<double>();
    r.boundary_jacobi_min = j.at("boundary_jacobi_min").get<double>();
    r.min_jacobi_residual = j.at("min_jacobi_residual").get<double>();
    r.max_rho = j.at("max_rho").get<double>();
    r.c11_ratio = j.at("c11_ratio").get<double>();
    r.rho_drift = j.at("rho_drift").get<double>();
    r.c11_drift = j.at("c11_drift").get<double>();
    r.convexity_pass = j.at("convexity_pass").get<bool>();
    r.rho_profile = j.at("rho_profile").get<std::vector<double>>();
    return r;
}

json summary_to_json(const AuditSummary& s) {
    json j;
    j["trace_min"] = s.trace_min;
    j["trace_max"] = s.trace_max;
    j["spread"] = s.spread;
    j["lip_max"] = s.lip_max;
    j["c2_ratio"] = s.c2_ratio;
    j["spread_tol"] = s.spread_tol;
    j["spread_ok"] = s.spread_ok;
    j["complete"] = s.complete;
    j["certified"] = s.certified;
    j["excluded"] = s.excluded;
    return j;
}

AuditSummary summary_from_json(const json& j) {
    AuditSummary s;
    s.trace_min = j.at("trace_min").get<double>();
    s.trace_max = j.at("trace_max").get<double>();
    s.spread = j.at("spread").get<double>();
    s.lip_max = j.at("lip_max").get<double>();
    s.c2_ratio = j.at("c2_ratio").get<double>();
    s.spread_tol = j.at("spread_tol").get<double>();
    s.spread_ok = j.at("spread_ok").get<bool>();
    s.complete = j.at("complete").get<bool>();
    s.certified = j.at("certified").get<int>();
    s.excluded = j.at("excluded").get<int>();
    return s;
}

// ---------------------------------------------------------------------------
// the pipeline proper
// ---------------------------------------------------------------------------

struct MemberState {
    bool solved_everywhere = true;     ///< all grids converged
    std::vector<SolveResult> solves;   ///< one per grid, coarse -> fine
    std::vector<ManufacturedCase> cases;
};

AuditReport run_audit(const AuditConfig& cfg, bool independence) {
    validate_config(cfg);
    if (independence && cfg.family != "f_oscillatory_family")
        throw std::invalid_argument(
            "audit: the independence experiment requires the oscillatory family");
    if (independence)
        for (double v : cfg.sweep) oscillation_count(v);  // integer check up front

    AuditReport report;
    report.config = cfg;
    report.mode = independence ? "independence" : "full_pipeline";
    report.summary.spread_tol = cfg.spread_tol;

    std::vector<double> hs = cfg.h_list;
    std::sort(hs.begin(), hs.end(), std::greater<double>());  // coarse -> fine
    const std::size_t nh = hs.size();
    std::vector<Grid> grids;
    for (double h : hs) grids.push_back(Grid::centered_box(cfg.dimension, cfg.half_width, h));

    const bool emit_artifacts = !cfg.out_dir.empty();
    std::filesystem::path root(cfg.out_dir);
    if (emit_artifacts) std::filesystem::create_directories(root);

    SolveOptions sopts;
    sopts.max_iters = cfg.max_solver_iters;

    // --- solves, per grid, warm-starting along the sweep ------------------
    std::vector<MemberState> members(cfg.sweep.size());
    bool any_divergence = false;
    for (std::size_t gi = 0; gi < nh; ++gi) {
        const ScalarField* warm = nullptr;
        for (std::size_t mi = 0; mi < cfg.sweep.size(); ++mi) {
            MemberState& st = members[mi];
            if (gi == 0) {
                st.solves.resize(nh);
                st.cases.resize(nh);
            }
            ManufacturedCase mc = make_member(cfg.family, grids[gi], cfg.sweep[mi]);
            if (independence) {
                // fixed convex boundary data must dominate the forcing
                double fmax = mc.f[0];
                for (Index i = 0; i < mc.f.size(); ++i) fmax = std::max(fmax, mc.f[i]);
                if (fmax > 1.5 + 1e-12)
                    throw std::runtime_error(
                        "[setup] oscillatory forcing exceeds the boundary quadratic");
            }
            SolveResult sr;
            try {
                sr = solve_dirichlet(mc.f, mc.boundary, sopts, warm);
            } catch (const std::domain_error& e) {
                report.out_of_hypothesis.push_back(
                    "[solve] param=" + param_label(cfg.sweep[mi]) + " h=" +
                    json(hs[gi]).dump() + ": " + e.what());
                st.solved_everywhere = false;
                warm = nullptr;
                continue;
            }
            if (!sr.diag.converged) {
                report.out_of_hypothesis.push_back(
                    "[solve] param=" + param_label(cfg.sweep[mi]) + " h=" +
                    json(hs[gi]).dump() + ": did not converge (" +
                    sr.diag.abort_reason + ")");
                st.solved_everywhere = false;
                any_divergence = true;
                warm = nullptr;
                continue;
            }
            st.solves[gi] = std::move(sr);
            st.cases[gi] = std::move(mc);
            // Chaining a member's solution into the next member's start is
            // only sound when the sweep shares boundary data and the members
            // differ in f alone (the oscillatory family); heterogeneous
            // full-pipeline sweeps get independent cold starts.
            warm = independence ? &st.solves[gi].u : nullptr;
        }
    }

    // --- per-member stages -------------------------------------------------
    const MoserSchedule schedule = build_schedule(cfg.dimension);
    const Grid& gf = grids.back();

    for (std::size_t mi = 0; mi < cfg.sweep.size(); ++mi) {
        MemberState& st = members[mi];
        const double param = cfg.sweep[mi];
        if (!st.solved_everywhere) continue;  // already routed above

        const ScalarField& u_fine = st.solves[nh - 1].u;
        // The hypothesis is convexity on the region the interior estimate
        // lives on — the inscribed unit ball — sampled where the Hessian
        // stencils are central.  Dirichlet data on a box bends solutions
        // near the box edges (outside B1), and that is a domain artifact,
        // not a property of the sweep member.
        const ConvexityCertificate cert = convexity_certificate(
            u_fine, mask_and(ball_mask(gf, 1.0), solver_interior(gf)));
        if (!cert.pass) {
            std::ostringstream os;
            os << "[convexity] param=" << param_label(param)
               << ": certificate failed (min eigenvalue " << cert.min_eig
               << " vs magnitude " << cert.hess_sup << ")";
            report.out_of_hypothesis.push_back(os.str());
            continue;
        }

        std::filesystem::path mdir;
        if (emit_artifacts) {
            std::ostringstream os;
            os << "member_" << mi;
            mdir = root / os.str();
            std::filesystem::create_directories(mdir);
        }

        std::string stage = "normalize";
        try {
            // barrier measured on the coarsest grid, then reused everywhere
            const NormalizedSolution norm_c =
                normalize_solution(make_fd_bundle(st.solves[0].u), st.cases[0].f);
            stage = "barrier";
            TubeGapOptions tgo;
            tgo.seed = static_cast<unsigned>(cfg.seed);
            const BarrierPipelineResult pipe =
                make_euclidean_barrier(make_fd_bundle(norm_c.u_hat), cfg.tube_radius, tgo);
            if (!pipe.certificate.valid) {
                std::ostringstream os;
                os << "[barrier] param=" << param_label(param)
                   << ": certificate conditions failed (origin " << pipe.certificate.origin_ok
                   << ", two-convex " << pipe.certificate.two_convex_ok << ", wall "
                   << pipe.certificate.wall_ok << ", cap " << pipe.certificate.cap_ok << ")";
                report.out_of_hypothesis.push_back(os.str());
                continue;
            }
            if (emit_artifacts) {
                json g;
                g["delta"] = pipe.gap.delta;
                g["tube_radius"] = pipe.gap.tube_radius;
                g["band"] = pipe.gap.band;
                g["wall_nodes"] = pipe.gap.wall_nodes;
                g["rotation"] = pipe.gap.rotation;
                write_json_file(mdir / "tube_gap.json", g);
                write_json_file(mdir / "barrier_certificate.json",
                                certificate_to_json(pipe.certificate));
            }

            double rho_coarse = 0.0, c11_coarse = 0.0;
            AuditRow row;
            for (std::size_t gi = 0; gi < nh; ++gi) {
                const Grid& g = grids[gi];
                stage = "normalize";
                const NormalizedSolution norm =
                    normalize_solution(make_fd_bundle(st.solves[gi].u), st.cases[gi].f);
                stage = "omega";
                const OmegaField om = extract_omega(norm.u_hat, pipe.barrier);
                const FieldBundle uhat_b = make_fd_bundle(norm.u_hat);
                const FieldBundle fhat_b = make_fd_bundle(norm.f_hat);
                stage = "jacobi_trace";
                const JacobiReport trace =
                    trace_jacobi_hessian(uhat_b, fhat_b, cfg.eps, om.omega);
                stage = "jacobi_boundary";
                const FieldBundle w_b = barrier_bundle(pipe.barrier, g);
                const JacobiReport bdry = boundary_jacobi(
                    uhat_b, w_b, fhat_b, JacobiVariant::hessian, om.omega);
                stage = "w2p";
                W2pOptions wopt;
                wopt.p_max = cfg.p_max;
                const RecursionLedger ledger = w2p_recursion_check(
                    uhat_b, norm.f_hat, om.phi, om.omega, JacobiVariant::hessian, wopt);
                stage = "c11";
                const C11Report c11 =
                    c11_comparison(uhat_b, om.phi, schedule, JacobiVariant::hessian);

                if (gi == 0) {
                    rho_coarse = ledger.c_star;
                    c11_coarse = c11.ratio;
                }
                if (gi == nh - 1) {
                    row.param = param;
                    row.h = hs[gi];
                    row.gap_delta = pipe.gap.delta;
                    row.trace_jacobi_min = trace.min_residual;
                    row.boundary_jacobi_min = bdry.min_residual;
                    row.min_jacobi_residual =
                        std::min(trace.min_residual, bdry.min_residual);
                    row.max_rho = ledger.c_star;
                    row.c11_ratio = c11.ratio;
                    row.rho_drift = rel_drift(rho_coarse, ledger.c_star);
                    row.c11_drift = rel_drift(c11_coarse, c11.ratio);
                    row.rho_profile = ledger.ratio;
                    if (emit_artifacts) {
                        write_fld((mdir / "u.fld").string(), st.solves[gi].u,
                                  FldEncoding::binary);
                        write_fld((mdir / "omega.fld").string(), om.omega,
                                  FldEncoding::binary);
                        write_fld((mdir / "phi.fld").string(), om.phi,
                                  FldEncoding::binary);
                        write_json_file(mdir / "jacobi_trace.json", jacobi_to_json(trace));
                        write_json_file(mdir / "jacobi_boundary.json", jacobi_to_json(bdry));
                        json w;
                        w["c_star"] = ledger.c_star;
                        w["ratio"] = ledger.ratio;
                        w["integral"] = ledger.integral;
                        w["envelope_ok"] = ledger.envelope_ok;
                        w["p_max"] = ledger.p_max;
                        write_json_file(mdir / "w2p_ledger.json", w);
                        json cj;
                        cj["lhs"] = c11.lhs;
                        cj["rhs"] = c11.rhs;
                        cj["ratio"] = c11.ratio;
                        write_json_file(mdir / "c11.json", cj);
                        json sd;
                        sd["iterations"] = st.solves[gi].diag.iterations;
                        sd["residual_history"] = st.solves[gi].diag.residual_history;
                        sd["f_min"] = st.solves[gi].diag.f_min;
                        sd["min_hessian_eig"] = st.solves[gi].diag.min_hessian_eig;
                        sd["convexity_pass"] = st.solves[gi].diag.convexity_pass;
                        write_json_file(mdir / "solve_diagnostics.json", sd);
                    }
                }
            }

            stage = "measure";
            const ScalarField& f_fine = st.cases[nh - 1].f;
            const bool oscillatory = cfg.family == "f_oscillatory_family";
            row.lip_f = oscillatory
                            ? refined_lip_proxy(cfg.dimension, cfg.half_width,
                                                oscillation_count(param))
                            : lipschitz_norm(f_fine, box_interior_mask(gf, 0)).lip;
            row.c2_solve_grid = max_second_difference(f_fine);
            row.c2_proxy = oscillatory
                               ? refined_c2_proxy(cfg.dimension, cfg.half_width,
                                                  oscillation_count(param))
                               : row.c2_solve_grid;
            row.c2_closed_form = closed_form_c2(cfg.family, param);
            row.trace_origin = fd_laplacian(u_fine)[gf.origin_node()];
            row.convexity_pass = true;
            report.rows.push_back(std::move(row));
        } catch (const std::domain_error& e) {
            report.out_of_hypothesis.push_back("[" + stage + "] param=" +
                                               param_label(param) + ": " + e.what());
            continue;
        } catch (const std::exception& e) {
            throw std::runtime_error("[" + stage + "] param=" + param_label(param) +
                                     ": " + e.what());
        }
    }

    // --- summary -----------------------------------------------------------
    AuditSummary& s = report.summary;
    s.complete = !any_divergence;
    s.certified = static_cast<int>(report.rows.size());
    s.excluded = static_cast<int>(report.out_of_hypothesis.size());
    if (!report.rows.empty()) {
        s.trace_min = s.trace_max = report.rows[0].trace_origin;
        double c2_min = report.rows[0].c2_proxy, c2_max = report.rows[0].c2_proxy;
        for (const AuditRow& r : report.rows) {
            s.trace_min = std::min(s.trace_min, r.trace_origin);
            s.trace_max = std::max(s.trace_max, r.trace_origin);
            s.lip_max = std::max(s.lip_max, r.lip_f);
            c2_min = std::min(c2_min, r.c2_proxy);
            c2_max = std::max(c2_max, r.c2_proxy);
        }
        s.spread = s.trace_min > 0.0 ? s.trace_max / s.trace_min : 0.0;
        s.c2_ratio = c2_min > 0.0 ? c2_max / c2_min : 0.0;
        s.spread_ok = s.spread > 0.0 && s.spread <= s.spread_tol;
    }

    if (emit_artifacts) emit_reports(report, cfg.out_dir);
    return report;
}

}  // namespace

// ---------------------------------------------------------------------------
// public surface
// ---------------------------------------------------------------------------

AuditConfig audit_config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("audit config: JSON parse error: ") +
                                    e.what());
    }
    return config_from_json_obj(j);
}

std::string audit_config_to_json(const AuditConfig& cfg) {
    return config_to_json_obj(cfg).dump(2) + "\n";
}

AuditReport run_full_pipeline(const AuditConfig& cfg) { return run_audit(cfg, false); }

AuditReport run_independence_experiment(const AuditConfig& cfg) {
    return run_audit(cfg, true);
}

std::string report_to_json(const AuditReport& report) {
    json j;
    j["config"] = config_to_json_obj(report.config);
    j["mode"] = report.mode;
    json rows = json::array();
    for (const AuditRow& r : report.rows) rows.push_back(row_to_json(r));
    j["rows"] = rows;
    j["out_of_hypothesis"] = report.out_of_hypothesis;
    j["summary"] = summary_to_json(report.summary);
    return j.dump(2) + "\n";
}

AuditReport report_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("audit report: JSON parse error: ") +
                                    e.what());
    }
    try {
        AuditReport r;
        r.config = config_from_json_obj(j.at("config"));
        r.mode = j.at("mode").get<std::string>();
        for (const json& row : j.at("rows")) r.rows.push_back(row_from_json(row));
        r.out_of_hypothesis = j.at("out_of_hypothesis").get<std::vector<std::string>>();
        r.summary = summary_from_json(j.at("summary"));
        return r;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("audit report: malformed: ") + e.what());
    }
}

std::vector<std::string> emit_reports(const AuditReport& report,
                                      const std::string& out_dir) {
    if (out_dir.empty())
        throw std::invalid_argument("emit_reports: output directory must be nonempty");
    std::filesystem::path root(out_dir);
    std::filesystem::create_directories(root);
    std::vector<std::string> files;

    write_text(root / "report.json", report_to_json(report));
    files.push_back((root / "report.json").string());

    {
        std::ostringstream os;
        os << "param,h,lip_f,c2_proxy,c2_solve_grid,c2_closed_form,gap_delta,"
              "trace_origin,trace_jacobi_min,boundary_jacobi_min,min_jacobi_residual,"
              "max_rho,c11_ratio,rho_drift,c11_drift,convexity_pass\n";
        for (const AuditRow& r : report.rows) {
            os << json(r.param).dump() << ',' << json(r.h).dump() << ','
               << json(r.lip_f).dump() << ',' << json(r.c2_proxy).dump() << ','
               << json(r.c2_solve_grid).dump() << ',' << json(r.c2_closed_form).dump()
               << ',' << json(r.gap_delta).dump() << ',' << json(r.trace_origin).dump()
               << ',' << json(r.trace_jacobi_min).dump() << ','
               << json(r.boundary_jacobi_min).dump() << ','
               << json(r.min_jacobi_residual).dump() << ',' << json(r.max_rho).dump()
               << ',' << json(r.c11_ratio).dump() << ',' << json(r.rho_drift).dump()
               << ',' << json(r.c11_drift).dump() << ','
               << (r.convexity_pass ? "1" : "0") << '\n';
        }
        write_text(root / "rows.csv", os.str());
        files.push_back((root / "rows.csv").string());
    }

    {
        std::ostringstream os;
        os << "param,trace_origin\n";
        for (const AuditRow& r : report.rows)
            os << json(r.param).dump() << ',' << json(r.trace_origin).dump() << '\n';
        write_text(root / "plot_trace_vs_param.csv", os.str());
        files.push_back((root / "plot_trace_vs_param.csv").string());
    }

    {
        std::size_t depth = 0;
        for (const AuditRow& r : report.rows) depth = std::max(depth, r.rho_profile.size());
        std::ostringstream os;
        os << "p";
        for (const AuditRow& r : report.rows) os << ",param_" << json(r.param).dump();
        os << '\n';
        for (std::size_t p = 0; p < depth; ++p) {
            os << (p + 1);
            for (const AuditRow& r : report.rows) {
                os << ',';
                if (p < r.rho_profile.size()) os << json(r.rho_profile[p]).dump();
            }
            os << '\n';
        }
        write_text(root / "plot_rho_profile.csv", os.str());
        files.push_back((root / "plot_rho_profile.csv").string());
    }

    {
        json manifest;
        manifest["command"] = "audit";
        manifest["mode"] = report.mode;
        manifest["config"] = config_to_json_obj(report.config);
        manifest["spread_tol"] = report.summary.spread_tol;
        json names = json::array();
        names.push_back("report.json");
        names.push_back("rows.csv");
        names.push_back("plot_trace_vs_param.csv");
        names.push_back("plot_rho_profile.csv");
        manifest["files"] = names;
        write_json_file(root / "manifest.json", manifest);
        files.push_back((root / "manifest.json").string());
    }
    return files;
}

}  // namespace s2lab
