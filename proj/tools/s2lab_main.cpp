/// @file s2lab_main.cpp
/// @brief Command-line front end: solve | jacobi | barrier | moser | w2p | audit.
///
/// Every subcommand reads a JSON config (strict keys — unknown keys are
/// rejected), writes its artifacts under --out together with a manifest.json,
/// and exits 0 only when the certificates of that stage hold:
///
///   solve    Newton solve of sigma2(D2 u) = f for a manufactured case.
///            Certificate: convergence to the residual tolerance.
///   jacobi   Trace differential inequality for Delta u on field files
///            produced by `solve`.  Certificate: min residual >= -floor.
///   barrier  Solve, normalize, measure the tube gap, build and verify the
///            localization barrier.  Certificate: all four admission
///            conditions.
///   w2p      Everything `barrier` does, then the L^p recursion ledger on
///            the contact region.  Certificate: barrier conditions plus the
///            factorial envelope.
///   moser    Exponent/radius schedule for a given dimension (no config);
///            prints JSON to stdout.
///   audit    Multi-member orchestration from a full audit config; exit 0
///            when the run is complete, nothing was routed out of
///            hypothesis, and (independence mode) the spread bound holds.
///
/// Exit codes: 0 pass, 1 certificate/hypothesis/runtime failure, 2 config or
/// usage errors.  The environment variable S2LAB_THREADS caps worker threads
/// in the field kernels.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "s2lab/audit.hpp"
#include "s2lab/barrier.hpp"
#include "s2lab/fd.hpp"
#include "s2lab/field_io.hpp"
#include "s2lab/jacobi.hpp"
#include "s2lab/masks.hpp"
#include "s2lab/moser.hpp"
#include "s2lab/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace s2lab;

namespace {

// ---------------------------------------------------------------------------
// config plumbing
// ---------------------------------------------------------------------------

[[noreturn]] void fail_config(const std::string& msg) {
    throw std::invalid_argument(msg);
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail_config("cannot read config file '" + path + "'");
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

json parse_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        fail_config("config is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) fail_config("config root must be a JSON object");
    return j;
}

void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                  const char* where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) { known = true; break; }
        if (!known)
            fail_config("unknown key '" + it.key() + "' in " + where + " config");
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        fail_config("key '" + std::string(key) + "' has the wrong type");
    }
}

// ---------------------------------------------------------------------------
// artifact output
// ---------------------------------------------------------------------------

class ArtifactSink {
  public:
    explicit ArtifactSink(const std::string& dir) : root_(dir) {
        if (dir.empty()) fail_config("--out directory must not be empty");
        fs::create_directories(root_);
    }

    std::string path(const std::string& name) {
        files_.push_back(name);
        return (root_ / name).string();
    }

    void write_json(const std::string& name, const json& j) {
        write_text(path(name), j.dump(2) + "\n");
    }

    void finish(const std::string& command, const json& config_echo) {
        json m;
        m["command"] = command;
        m["config"] = config_echo;
        m["files"] = files_;
        write_text((root_ / "manifest.json").string(), m.dump(2) + "\n");
    }

  private:
    static void write_text(const std::string& p, const std::string& text) {
        std::ofstream os(p, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open '" + p + "' for writing");
        os << text;
        if (!os) throw std::runtime_error("write failed for '" + p + "'");
    }

    fs::path root_;
    std::vector<std::string> files_;
};

// ---------------------------------------------------------------------------
// shared problem / solver blocks
// ---------------------------------------------------------------------------

struct ProblemSpec {
    std::string family = "quadratic";
    int dim = 3;
    double h = 0.125;
    double half_width = 1.0;
    ManufacturedParams params;
};

ProblemSpec problem_from_json(const json& cfg) {
    ProblemSpec ps;
    if (!cfg.contains("problem")) return ps;
    const json& p = cfg.at("problem");
    if (!p.is_object()) fail_config("'problem' must be an object");
    require_keys(p, {"family", "dim", "h", "half_width", "params"}, "problem");
    ps.family = get_or<std::string>(p, "family", ps.family);
    ps.dim = get_or<int>(p, "dim", ps.dim);
    ps.h = get_or<double>(p, "h", ps.h);
    ps.half_width = get_or<double>(p, "half_width", ps.half_width);
    if (p.contains("params")) {
        const json& q = p.at("params");
        if (!q.is_object()) fail_config("'problem.params' must be an object");
        require_keys(q, {"diag", "eps", "beta", "k"}, "problem.params");
        ps.params.diag = get_or<std::vector<double>>(q, "diag", ps.params.diag);
        ps.params.eps = get_or<double>(q, "eps", ps.params.eps);
        ps.params.beta = get_or<double>(q, "beta", ps.params.beta);
        ps.params.k = get_or<int>(q, "k", ps.params.k);
    }
    return ps;
}

SolveOptions solver_from_json(const json& cfg) {
    SolveOptions so;
    if (!cfg.contains("solver")) return so;
    const json& s = cfg.at("solver");
    if (!s.is_object()) fail_config("'solver' must be an object");
    require_keys(s, {"max_iters", "residual_tol", "policy"}, "solver");
    so.max_iters = get_or<int>(s, "max_iters", so.max_iters);
    so.residual_tol = get_or<double>(s, "residual_tol", so.residual_tol);
    const std::string policy = get_or<std::string>(s, "policy", "project");
    if (policy == "project")
        so.convexity = ConvexityPolicy::project;
    else if (policy == "monitor")
        so.convexity = ConvexityPolicy::monitor;
    else
        fail_config("solver.policy must be 'project' or 'monitor'");
    return so;
}

json diagnostics_to_json(const SolveDiagnostics& d) {
    json j;
    j["converged"] = d.converged;
    j["iterations"] = d.iterations;
    j["residual_history"] = d.residual_history;
    j["abort_reason"] = d.abort_reason;
    j["f_min"] = d.f_min;
    j["min_hessian_eig"] = d.min_hessian_eig;
    j["convexity_pass"] = d.convexity_pass;
    j["cone"] = {{"convex", d.cone.convex},
                 {"strictly_2_convex", d.cone.strictly_2_convex},
                 {"weakly_2_convex", d.cone.weakly_2_convex},
                 {"outside", d.cone.outside}};
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

json tube_gap_to_json(const TubeGap& g) {
    json j;
    j["delta"] = g.delta;
    j["tube_radius"] = g.tube_radius;
    j["band"] = g.band;
    j["wall_nodes"] = g.wall_nodes;
    j["rotation"] = g.rotation;
    return j;
}

struct SolvedProblem {
    ManufacturedCase mc;
    SolveResult sr;
};

/// Builds the case from the `problem` block and solves it; throws
/// std::runtime_error with the abort reason when the Newton loop gives up.
SolvedProblem solve_problem(const json& cfg) {
    const ProblemSpec ps = problem_from_json(cfg);
    const SolveOptions so = solver_from_json(cfg);
    const Grid g = Grid::centered_box(ps.dim, ps.half_width, ps.h);
    SolvedProblem out{manufactured_case(ps.family, g, ps.params), {}};
    out.sr = solve_dirichlet(out.mc.f, out.mc.boundary, so);
    if (!out.sr.diag.converged)
        throw std::runtime_error("solve did not converge (" +
                                 out.sr.diag.abort_reason + ")");
    return out;
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

int cmd_solve(const std::string& config_path, const std::string& out_dir) {
    const json cfg = parse_config(config_path);
    require_keys(cfg, {"problem", "solver"}, "solve");
    const ProblemSpec ps = problem_from_json(cfg);
    const SolveOptions so = solver_from_json(cfg);
    const Grid g = Grid::centered_box(ps.dim, ps.half_width, ps.h);
    const ManufacturedCase mc = manufactured_case(ps.family, g, ps.params);
    const SolveResult sr = solve_dirichlet(mc.f, mc.boundary, so);

    ArtifactSink sink(out_dir);
    write_fld(sink.path("u.fld"), sr.u, FldEncoding::binary);
    write_fld(sink.path("f.fld"), mc.f, FldEncoding::binary);
    sink.write_json("solve.json", diagnostics_to_json(sr.diag));
    sink.finish("solve", cfg);

    if (!sr.diag.converged) {
        std::cerr << "solve: did not converge (" << sr.diag.abort_reason << ")\n";
        return 1;
    }
    std::cout << "solve: converged in " << sr.diag.iterations
              << " steps, final residual " << sr.diag.residual_history.back()
              << "\n";
    return 0;
}

int cmd_jacobi(const std::string& config_path, const std::string& out_dir) {
    const json cfg = parse_config(config_path);
    require_keys(cfg, {"u_fld", "f_fld", "eps", "margin", "floor"}, "jacobi");
    if (!cfg.contains("u_fld") || !cfg.contains("f_fld"))
        fail_config("jacobi config needs 'u_fld' and 'f_fld' field-file paths");
    const ScalarField u = read_fld_scalar(cfg.at("u_fld").get<std::string>());
    const ScalarField f = read_fld_scalar(cfg.at("f_fld").get<std::string>());
    const double eps = get_or<double>(cfg, "eps", 0.5);
    const int margin = get_or<int>(cfg, "margin", 2);
    const double floor = get_or<double>(cfg, "floor", 1e-6);

    const JacobiReport rep = trace_jacobi_hessian(
        make_fd_bundle(u), make_fd_bundle(f), eps, box_interior_mask(u.grid, margin));
    const bool pass = rep.min_residual >= -floor;

    ArtifactSink sink(out_dir);
    write_fld(sink.path("residual.fld"), rep.residual, FldEncoding::binary);
    json j;
    j["min_residual"] = rep.min_residual;
    j["argmin"] = rep.argmin;
    j["epsilon"] = rep.epsilon;
    j["constant"] = {{"c_eps", rep.constant_policy.c_eps},
                     {"formula", rep.constant_policy.formula}};
    j["variant"] = jacobi_variant_name(rep.variant);
    j["mask_nodes"] = rep.mask.count();
    j["floor"] = floor;
    j["pass"] = pass;
    sink.write_json("jacobi.json", j);
    sink.finish("jacobi", cfg);

    std::cout << "jacobi: min residual " << rep.min_residual << " (floor -"
              << floor << ")\n";
    if (!pass) {
        std::cerr << "jacobi: inequality violated beyond the floor\n";
        return 1;
    }
    return 0;
}

int cmd_barrier(const std::string& config_path, const std::string& out_dir) {
    const json cfg = parse_config(config_path);
    require_keys(cfg, {"problem", "solver", "tube_radius", "seed"}, "barrier");
    const double tube_radius = get_or<double>(cfg, "tube_radius", 0.5);
    TubeGapOptions tgo;
    tgo.seed = get_or<unsigned>(cfg, "seed", tgo.seed);

    const SolvedProblem sp = solve_problem(cfg);
    const NormalizedSolution norm =
        normalize_solution(make_fd_bundle(sp.sr.u), sp.mc.f);
    const BarrierPipelineResult pipe =
        make_euclidean_barrier(make_fd_bundle(norm.u_hat), tube_radius, tgo);

    ArtifactSink sink(out_dir);
    write_fld(sink.path("u_hat.fld"), norm.u_hat, FldEncoding::binary);
    sink.write_json("tube_gap.json", tube_gap_to_json(pipe.gap));
    sink.write_json("barrier_certificate.json", certificate_to_json(pipe.certificate));
    sink.finish("barrier", cfg);

    const BarrierCertificate& c = pipe.certificate;
    std::cout << "barrier: gap " << pipe.gap.delta << ", conditions origin="
              << c.origin_ok << " two_convex=" << c.two_convex_ok
              << " wall=" << c.wall_ok << " cap=" << c.cap_ok << "\n";
    if (!c.valid) {
        std::cerr << "barrier: certificate failed\n";
        return 1;
    }
    return 0;
}

int cmd_w2p(const std::string& config_path, const std::string& out_dir) {
    const json cfg = parse_config(config_path);
    require_keys(cfg, {"problem", "solver", "tube_radius", "seed", "p_max"}, "w2p");
    const double tube_radius = get_or<double>(cfg, "tube_radius", 0.5);
    W2pOptions wopt;
    wopt.p_max = get_or<int>(cfg, "p_max", wopt.p_max);
    TubeGapOptions tgo;
    tgo.seed = get_or<unsigned>(cfg, "seed", tgo.seed);

    const SolvedProblem sp = solve_problem(cfg);
    const NormalizedSolution norm =
        normalize_solution(make_fd_bundle(sp.sr.u), sp.mc.f);
    const BarrierPipelineResult pipe =
        make_euclidean_barrier(make_fd_bundle(norm.u_hat), tube_radius, tgo);
    if (!pipe.certificate.valid) {
        std::cerr << "w2p: barrier certificate failed, ledger not attempted\n";
        ArtifactSink sink(out_dir);
        sink.write_json("barrier_certificate.json",
                        certificate_to_json(pipe.certificate));
        sink.finish("w2p", cfg);
        return 1;
    }
    const OmegaField om = extract_omega(norm.u_hat, pipe.barrier);
    const RecursionLedger ledger =
        w2p_recursion_check(make_fd_bundle(norm.u_hat), norm.f_hat, om.phi,
                            om.omega, JacobiVariant::hessian, wopt);

    ArtifactSink sink(out_dir);
    write_fld(sink.path("omega.fld"), om.omega, FldEncoding::binary);
    write_fld(sink.path("phi.fld"), om.phi, FldEncoding::binary);
    sink.write_json("barrier_certificate.json", certificate_to_json(pipe.certificate));
    json j;
    j["integral"] = ledger.integral;
    j["ratio"] = ledger.ratio;
    j["c_star"] = ledger.c_star;
    j["p_max"] = ledger.p_max;
    j["h"] = ledger.h;
    j["sup_excess"] = ledger.sup_excess;
    j["envelope_ok"] = ledger.envelope_ok;
    sink.write_json("w2p_ledger.json", j);
    sink.finish("w2p", cfg);

    std::cout << "w2p: max rho " << ledger.c_star << " over p <= "
              << ledger.p_max << ", envelope "
              << (ledger.envelope_ok ? "holds" : "fails") << "\n";
    return ledger.envelope_ok ? 0 : 1;
}

int cmd_moser(int dim, const std::string& out_dir) {
    const MoserSchedule sched = build_schedule(dim);
    const IterationConstants ic = iteration_constants(sched);
    json j;
    j["n"] = sched.n;
    j["gamma"] = sched.gamma;
    j["k0"] = sched.k0;
    j["strict_pk"] = sched.strict_pk;
    j["p"] = sched.p;
    j["q"] = sched.q;
    j["r"] = sched.r;
    j["constants"] = {{"sum_a", ic.sum_a},
                      {"sum_b", ic.sum_b},
                      {"product_log", ic.product_log},
                      {"cap_sums", ic.cap_sums},
                      {"cap_product_log", ic.cap_product_log}};
    std::cout << j.dump(2) << "\n";
    if (!out_dir.empty()) {
        ArtifactSink sink(out_dir);
        sink.write_json("schedule.json", j);
        sink.finish("moser", json{{"dim", dim}});
    }
    return 0;
}

int cmd_audit(const std::string& config_path, const std::string& out_dir) {
    AuditConfig acfg = audit_config_from_json(read_file(config_path));
    if (!out_dir.empty()) acfg.out_dir = out_dir;
    const AuditReport rep = acfg.mode == "independence"
                                ? run_independence_experiment(acfg)
                                : run_full_pipeline(acfg);

    std::cout << "audit: mode " << rep.mode << ", " << rep.rows.size()
              << " certified row(s), " << rep.out_of_hypothesis.size()
              << " routed out of hypothesis, "
              << (rep.summary.complete ? "complete" : "INCOMPLETE") << "\n";
    for (const std::string& line : rep.out_of_hypothesis)
        std::cout << "  " << line << "\n";
    if (rep.mode == "independence")
        std::cout << "audit: spread " << rep.summary.spread << " (tol "
                  << rep.summary.spread_tol << "), lip max " << rep.summary.lip_max
                  << ", c2 ratio " << rep.summary.c2_ratio << "\n";

    const bool pass = rep.summary.complete && rep.out_of_hypothesis.empty() &&
                      (rep.mode != "independence" || rep.summary.spread_ok);
    if (!pass) {
        std::cerr << "audit: certificates incomplete\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sigma2 laboratory: solve, certify and audit the interior "
                 "Hessian-bound pipeline"};
    app.footer("Exit codes: 0 all certificates pass, 1 certificate or runtime "
               "failure, 2 config/usage error.\n"
               "S2LAB_THREADS caps worker threads in the field kernels.");
    app.require_subcommand(1);

    struct SubSpec {
        CLI::App* sub = nullptr;
        std::string config;
        std::string out;
    };
    auto add_sub = [&](const char* name, const char* desc, bool config_required,
                       bool out_required) {
        SubSpec s;
        s.sub = app.add_subcommand(name, desc);
        auto* copt = s.sub->add_option("--config", s.config, "JSON config file");
        if (config_required) copt->required();
        auto* oopt = s.sub->add_option("--out", s.out, "artifact directory");
        if (out_required) oopt->required();
        return s;
    };

    SubSpec solve = add_sub("solve", "Newton solve of a manufactured case", true, true);
    SubSpec jacobi = add_sub("jacobi", "trace inequality on solve artifacts", true, true);
    SubSpec barrier = add_sub("barrier", "tube gap, barrier and certificate", true, true);
    SubSpec w2p = add_sub("w2p", "barrier plus the L^p recursion ledger", true, true);
    SubSpec audit = add_sub("audit", "multi-member orchestration", true, false);
    SubSpec moser = add_sub("moser", "exponent/radius schedule", false, false);
    int moser_dim = 3;
    moser.sub->add_option("--dim", moser_dim, "dimension (>= 3)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (solve.sub->parsed()) return cmd_solve(solve.config, solve.out);
        if (jacobi.sub->parsed()) return cmd_jacobi(jacobi.config, jacobi.out);
        if (barrier.sub->parsed()) return cmd_barrier(barrier.config, barrier.out);
        if (w2p.sub->parsed()) return cmd_w2p(w2p.config, w2p.out);
        if (audit.sub->parsed()) return cmd_audit(audit.config, audit.out);
        if (moser.sub->parsed()) return cmd_moser(moser_dim, moser.out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "hypothesis violated: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;  // unreachable with require_subcommand(1)
}
