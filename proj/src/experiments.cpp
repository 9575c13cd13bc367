#include "erc/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "erc/feynman_kac.hpp"
#include "erc/hamiltonian.hpp"
#include "erc/pia.hpp"
#include "erc/quadrature.hpp"
#include "erc/rng.hpp"

namespace erc {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

constexpr double kAgreementBudgetCoef = 25.0; // C in the 3SE + tail + C(dt + h^2) budget

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

enum class Kind { PiaFinite, PiaInfinite, PiaDiffusion, Counterexample, McValidate, Audit };

Kind parse_kind(const std::string& s) {
    if (s == "PiaFinite") return Kind::PiaFinite;
    if (s == "PiaInfinite") return Kind::PiaInfinite;
    if (s == "PiaDiffusion") return Kind::PiaDiffusion;
    if (s == "Counterexample") return Kind::Counterexample;
    if (s == "McValidate") return Kind::McValidate;
    if (s == "Audit") return Kind::Audit;
    throw ConfigError("unknown experiment '" + s +
                      "' (expected PiaFinite|PiaInfinite|PiaDiffusion|Counterexample|"
                      "McValidate|Audit)");
}

void check_keys(const json& o, const std::string& path,
                std::initializer_list<std::string_view> allowed) {
    if (!o.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& item : o.items()) {
        bool ok = false;
        for (auto a : allowed)
            if (item.key() == a) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("unknown key '" + item.key() + "' at " + path);
    }
}

double need_number(const json& o, const char* key, const std::string& path) {
    if (!o.contains(key)) throw ConfigError("missing key '" + std::string(key) + "' at " + path);
    if (!o[key].is_number()) throw ConfigError(path + "/" + key + ": expected a number");
    return o[key].get<double>();
}

double number_or(const json& o, const char* key, double def, const std::string& path) {
    if (!o.contains(key)) return def;
    if (!o[key].is_number()) throw ConfigError(path + "/" + key + ": expected a number");
    return o[key].get<double>();
}

long long int_or(const json& o, const char* key, long long def, const std::string& path) {
    if (!o.contains(key)) return def;
    if (!o[key].is_number_integer()) throw ConfigError(path + "/" + key + ": expected an integer");
    return o[key].get<long long>();
}

bool bool_or(const json& o, const char* key, bool def, const std::string& path) {
    if (!o.contains(key)) return def;
    if (!o[key].is_boolean()) throw ConfigError(path + "/" + key + ": expected a boolean");
    return o[key].get<bool>();
}

std::string string_or(const json& o, const char* key, const std::string& def,
                      const std::string& path) {
    if (!o.contains(key)) return def;
    if (!o[key].is_string()) throw ConfigError(path + "/" + key + ": expected a string");
    return o[key].get<std::string>();
}

struct McSettings {
    long n_paths = 20000;
    double dt_sim = 1e-3;
    double t_max = 0.5;
    double delta_split = 0.1;
    std::uint64_t seed = 12345;
    std::vector<double> probe_points = {-2.0, -1.0, 0.0, 1.0, 2.0};
};

struct Resolved {
    Kind kind = Kind::PiaInfinite;
    std::string experiment_name;
    std::string problem_name;
    ProblemSpec spec;
    ControlProblem problem;
    Grid1D grid;
    std::optional<TimeGrid> tgrid;
    int quad_nodes = 32;
    PiaConfig pia;
    McSettings mc;
    int n_iter = 9;
    std::string output_dir = "out";
    ojson echo;
};

Resolved resolve_config(const json& cfg, const RunOverrides& ov) {
    check_keys(cfg, "/",
               {"experiment", "problem", "grid", "tgrid", "quadrature_nodes", "pia", "mc", "rho",
                "T", "lambda", "n_iter", "output_dir"});
    if (!cfg.contains("experiment") || !cfg["experiment"].is_string())
        throw ConfigError("missing or non-string 'experiment' at /");

    Resolved r;
    r.experiment_name = cfg["experiment"].get<std::string>();
    r.kind = parse_kind(r.experiment_name);

    const std::string default_problem = r.kind == Kind::Counterexample ? "counterexample" : "";
    r.problem_name = string_or(cfg, "problem", default_problem, "/");
    if (r.problem_name.empty()) throw ConfigError("missing key 'problem' at /");
    const ProblemSpec* spec = find_problem(r.problem_name);
    if (!spec) throw ConfigError("unknown problem '" + r.problem_name + "'");
    r.spec = *spec;
    r.problem = spec->build();
    r.grid = spec->recommended_grid;
    r.quad_nodes = spec->quadrature_nodes;

    if (cfg.contains("rho") && cfg.contains("T"))
        throw ConfigError("'rho' and 'T' are mutually exclusive at /");
    if (cfg.contains("rho")) {
        const double rho = need_number(cfg, "rho", "/");
        if (rho <= 0.0) throw ConfigError("/rho: must be positive");
        r.problem.discount = rho;
        r.problem.horizon.reset();
    }
    if (cfg.contains("T")) {
        const double T = need_number(cfg, "T", "/");
        if (T <= 0.0) throw ConfigError("/T: must be positive");
        r.problem.horizon = T;
        r.problem.discount.reset();
    }
    if (cfg.contains("lambda")) {
        const double lam = need_number(cfg, "lambda", "/");
        if (lam <= 0.0) throw ConfigError("/lambda: must be positive");
        r.problem.temperature = lam;
    }

    if (cfg.contains("grid")) {
        const json& g = cfg["grid"];
        check_keys(g, "/grid", {"x_lo", "x_hi", "n_nodes", "boundary"});
        r.grid.x_lo = number_or(g, "x_lo", r.grid.x_lo, "/grid");
        r.grid.x_hi = number_or(g, "x_hi", r.grid.x_hi, "/grid");
        r.grid.n_nodes = static_cast<int>(int_or(g, "n_nodes", r.grid.n_nodes, "/grid"));
        const std::string b =
            string_or(g, "boundary",
                      r.grid.boundary == Boundary::Periodic ? "Periodic" : "LinearExtrapolation",
                      "/grid");
        if (b == "Periodic")
            r.grid.boundary = Boundary::Periodic;
        else if (b == "LinearExtrapolation")
            r.grid.boundary = Boundary::LinearExtrapolation;
        else
            throw ConfigError("/grid/boundary: expected Periodic or LinearExtrapolation");
    }

    if (r.kind == Kind::PiaFinite) {
        if (!r.problem.finite_horizon())
            throw ConfigError("PiaFinite requires a horizon: set 'T'");
        const double T = *r.problem.horizon;
        TimeGrid tg;
        tg.t_hi = T;
        tg.n_steps = 100;
        if (cfg.contains("tgrid")) {
            const json& t = cfg["tgrid"];
            check_keys(t, "/tgrid", {"t_hi", "n_steps"});
            tg.t_hi = number_or(t, "t_hi", T, "/tgrid");
            tg.n_steps = static_cast<int>(int_or(t, "n_steps", tg.n_steps, "/tgrid"));
        }
        r.tgrid = tg;
    } else if (cfg.contains("tgrid")) {
        throw ConfigError("'tgrid' is only valid for PiaFinite");
    }

    if (cfg.contains("quadrature_nodes"))
        r.quad_nodes = static_cast<int>(int_or(cfg, "quadrature_nodes", r.quad_nodes, "/"));
    if (r.quad_nodes < 2) throw ConfigError("/quadrature_nodes: need at least 2");

    {
        const json p = cfg.contains("pia") ? cfg["pia"] : json::object();
        check_keys(p, "/pia", {"max_iter", "stop_tol", "reference_tol", "record_policies"});
        r.pia.max_iter = static_cast<int>(int_or(p, "max_iter", 200, "/pia"));
        r.pia.stop_tol = number_or(p, "stop_tol", 1e-9, "/pia");
        r.pia.reference_tol = number_or(p, "reference_tol", 1e-12, "/pia");
        r.pia.record_policies = bool_or(p, "record_policies", false, "/pia");
        r.pia.record_values = false; // the CLI reports norms, not raw iterates
    }

    {
        const json m = cfg.contains("mc") ? cfg["mc"] : json::object();
        check_keys(m, "/mc", {"n_paths", "dt_sim", "t_max", "seed", "probe_points", "delta_split"});
        r.mc.n_paths = int_or(m, "n_paths", r.mc.n_paths, "/mc");
        r.mc.dt_sim = number_or(m, "dt_sim", r.mc.dt_sim, "/mc");
        r.mc.t_max = number_or(m, "t_max", r.mc.t_max, "/mc");
        r.mc.delta_split = number_or(m, "delta_split", r.mc.delta_split, "/mc");
        r.mc.seed = static_cast<std::uint64_t>(int_or(m, "seed", 12345, "/mc"));
        if (m.contains("probe_points")) {
            if (!m["probe_points"].is_array())
                throw ConfigError("/mc/probe_points: expected an array of numbers");
            r.mc.probe_points.clear();
            for (const auto& v : m["probe_points"]) {
                if (!v.is_number()) throw ConfigError("/mc/probe_points: expected numbers");
                r.mc.probe_points.push_back(v.get<double>());
            }
        }
    }

    r.n_iter = static_cast<int>(int_or(cfg, "n_iter", 9, "/"));
    if (r.n_iter < 0) throw ConfigError("/n_iter: must be nonnegative");

    r.output_dir = string_or(cfg, "output_dir", "out", "/");
    if (const char* env = std::getenv("ERC_OUTPUT_DIR")) r.output_dir = env;
    if (ov.output_dir) r.output_dir = *ov.output_dir;
    if (ov.seed) r.mc.seed = *ov.seed;

    // Fully resolved echo: every default the run will use.
    r.echo["experiment"] = r.experiment_name;
    r.echo["problem"] = r.problem_name;
    r.echo["grid"] = {{"x_lo", r.grid.x_lo},
                      {"x_hi", r.grid.x_hi},
                      {"n_nodes", r.grid.n_nodes},
                      {"boundary", r.grid.boundary == Boundary::Periodic ? "Periodic"
                                                                         : "LinearExtrapolation"}};
    if (r.tgrid)
        r.echo["tgrid"] = {{"t_hi", r.tgrid->t_hi}, {"n_steps", r.tgrid->n_steps}};
    r.echo["quadrature_nodes"] = r.quad_nodes;
    r.echo["pia"] = {{"max_iter", r.pia.max_iter},
                     {"stop_tol", r.pia.stop_tol},
                     {"reference_tol", r.pia.reference_tol},
                     {"record_policies", r.pia.record_policies}};
    r.echo["mc"] = {{"n_paths", r.mc.n_paths},     {"dt_sim", r.mc.dt_sim},
                    {"t_max", r.mc.t_max},         {"seed", r.mc.seed},
                    {"probe_points", r.mc.probe_points}, {"delta_split", r.mc.delta_split}};
    if (r.problem.discount) r.echo["rho"] = *r.problem.discount;
    if (r.problem.horizon) r.echo["T"] = *r.problem.horizon;
    r.echo["lambda"] = r.problem.temperature;
    if (r.kind == Kind::Counterexample) r.echo["n_iter"] = r.n_iter;
    r.echo["output_dir"] = r.output_dir;
    return r;
}

ojson rate_to_json(const RateFit& f) {
    ojson o;
    o["classification"] = to_string(f.classification);
    if (f.eta)
        o["eta"] = *f.eta;
    else
        o["eta"] = nullptr;
    o["floor"] = f.floor;
    o["double_log_slope"] = f.double_log_slope;
    o["r_squared"] = f.r_squared;
    o["pre_floor_count"] = f.pre_floor_count;
    return o;
}

ojson norms_to_json(const DiscreteNorms& n) {
    return ojson{{"c0", n.c0}, {"c1", n.c1}, {"c2", n.c2}};
}

ojson record_to_json(const IterationRecord& r) {
    ojson o;
    o["n"] = r.n;
    o["eps0"] = r.eps0;
    o["eps1"] = r.eps1;
    o["eps2"] = r.eps2;
    o["delta0"] = r.delta0;
    o["delta1"] = r.delta1;
    o["delta2"] = r.delta2;
    o["policy_delta"] = r.policy_delta;
    o["policy_err"] = r.policy_err;
    o["monotonicity_violation"] = r.monotonicity_violation;
    o["bound_violation"] = r.bound_violation;
    o["residual"] = r.residual;
    o["vxx_identity_residual"] = r.vxx_identity_residual;
    o["upwind_nodes"] = r.upwind_nodes;
    o["seconds"] = r.seconds;
    return o;
}

void add_check(RunOutcome& out, const std::string& name, bool pass, double observed,
               double threshold) {
    out.checks.push_back({name, pass, observed, threshold});
    if (!pass && out.failed_check.empty()) out.failed_check = name;
}

std::string csv_row(std::initializer_list<double> values, int n) {
    std::string row = std::to_string(n);
    for (double v : values) {
        row += ',';
        row += fmt_double(v);
    }
    row += '\n';
    return row;
}

std::string pia_csv(const IterationReport& rep) {
    std::string csv = "n,eps0,eps1,eps2,delta0,delta1,delta2,policy_delta,"
                      "monotonicity_violation,residual,seconds\n";
    csv += csv_row({rep.initial_eps.c0, rep.initial_eps.c1, rep.initial_eps.c2, 0, 0, 0, 0, 0, 0,
                    0},
                   0);
    for (const auto& r : rep.iters)
        csv += csv_row({r.eps0, r.eps1, r.eps2, r.delta0, r.delta1, r.delta2, r.policy_delta,
                        r.monotonicity_violation, r.residual, r.seconds},
                       r.n);
    return csv;
}

RunOutcome run_pia_like(const Resolved& R) {
    RunOutcome out;
    const double t0 = now_seconds();
    const ActionQuadrature quad =
        ActionQuadrature::gauss_legendre(R.problem.action_lo, R.problem.action_hi, R.quad_nodes);

    const double tr0 = now_seconds();
    const ReferenceSolution ref =
        reference_solution(R.problem, R.grid, R.tgrid, quad, R.pia);
    const double ref_seconds = now_seconds() - tr0;

    PiaResult res;
    switch (R.kind) {
    case Kind::PiaFinite:
        res = pia_finite_horizon(R.problem, R.grid, *R.tgrid, quad, R.pia, &ref.value_t);
        break;
    case Kind::PiaInfinite:
        res = pia_infinite_horizon(R.problem, R.grid, quad, R.pia, &ref.value);
        break;
    case Kind::PiaDiffusion:
        res = pia_diffusion_1d(R.problem, R.grid, quad, R.pia, &ref.value);
        break;
    default:
        fail_invalid("internal: run_pia_like on a non-PIA experiment");
    }
    const IterationReport& rep = res.report;

    double mono = 0.0, bound = -std::numeric_limits<double>::infinity(), vxx = 0.0;
    for (const auto& it : rep.iters) {
        mono = std::min(mono, it.monotonicity_violation);
        bound = std::max(bound, it.bound_violation);
        vxx = std::max(vxx, it.vxx_identity_residual);
    }
    const bool converged =
        !rep.iters.empty() && (rep.iters.back().delta0 + rep.iters.back().delta1 +
                               rep.iters.back().delta2) <= R.pia.stop_tol;

    add_check(out, "converged",
              converged,
              rep.iters.empty() ? std::numeric_limits<double>::infinity()
                                : rep.iters.back().delta0 + rep.iters.back().delta1 +
                                      rep.iters.back().delta2,
              R.pia.stop_tol);
    add_check(out, "monotone_improvement", mono >= -1e-8, mono, -1e-8);
    add_check(out, "apriori_bound", bound <= 1e-8, bound, 1e-8);
    add_check(out, "not_divergent", rep.rate_eps1.classification != RateClass::Divergent,
              rep.rate_eps1.classification == RateClass::Divergent ? 1.0 : 0.0, 0.0);
    if (R.kind == Kind::PiaDiffusion)
        add_check(out, "vxx_identity", vxx <= 1e-9, vxx, 1e-9);

    out.report["experiment"] = R.experiment_name;
    out.report["problem"] = R.problem_name;
    out.report["config"] = R.echo;
    out.report["reference"] = {{"iterations", ref.iterations},
                               {"hjb_residual", ref.hjb_residual},
                               {"seconds", ref_seconds}};
    out.report["initial_eps"] = norms_to_json(rep.initial_eps);
    ojson iters = ojson::array();
    for (const auto& r : rep.iters) iters.push_back(record_to_json(r));
    out.report["iterations"] = std::move(iters);
    out.report["rate_eps1"] = rate_to_json(rep.rate_eps1);
    out.report["rate_eps2"] = rate_to_json(rep.rate_eps2);
    out.report["total_upwind_nodes"] = rep.total_upwind_nodes;
    out.csv = pia_csv(rep);
    out.report["timings"] = {{"total_seconds", now_seconds() - t0},
                             {"reference_seconds", ref_seconds}};
    return out;
}

RunOutcome run_counterexample(const Resolved& R) {
    RunOutcome out;
    const double rho = R.problem.discount.value_or(1.0);
    const double t0 = now_seconds();
    const std::vector<ValueField> iterates = counterexample_picard(rho, R.grid, R.n_iter);
    const double total = now_seconds() - t0;
    const double per_iter = R.n_iter > 0 ? total / R.n_iter : 0.0;

    int node0 = 0;
    for (int i = 0; i < R.grid.n_nodes; ++i)
        if (std::abs(R.grid.node(i)) < std::abs(R.grid.node(node0))) node0 = i;

    const ValueField zero = ValueField::constant(R.grid, 0.0);
    std::string csv = "n,eps0,eps1,eps2,delta0,delta1,delta2,policy_delta,"
                      "monotonicity_violation,residual,seconds,vx0,vx0_oracle\n";
    ojson rows = ojson::array();
    std::vector<double> odd_vals, odd_idx;
    double worst_odd_rel = 0.0, worst_even_abs = 0.0;

    for (int n = 0; n < static_cast<int>(iterates.size()); ++n) {
        const ValueField& v = iterates[n];
        const DiscreteNorms eps = norms(v, zero);
        const double vx0 = v.dx[node0];
        const double oracle = counterexample_oracle(rho, n);

        DiscreteNorms delta;
        double mono = 0.0, residual = 0.0;
        if (n >= 1) {
            const ValueField& prev = iterates[n - 1];
            delta = norms(v, prev);
            mono = std::numeric_limits<double>::infinity();
            for (int i = 0; i < R.grid.n_nodes; ++i)
                mono = std::min(mono, v.values[i] - prev.values[i]);
            for (int i = 0; i < R.grid.n_nodes; ++i)
                residual = std::max(residual, std::abs(rho * v.values[i] - 0.5 * v.dxx[i] -
                                                       prev.dx[i]));
            if (n % 2 == 1) {
                odd_vals.push_back(std::abs(vx0));
                odd_idx.push_back(n);
                worst_odd_rel =
                    std::max(worst_odd_rel, std::abs(vx0 - oracle) / std::abs(oracle));
            } else if (n <= 9) {
                worst_even_abs = std::max(worst_even_abs, std::abs(vx0));
            }
        }

        csv += csv_row({eps.c0, eps.c1, eps.c2, delta.c0, delta.c1, delta.c2, 0.0, mono, residual,
                        n >= 1 ? per_iter : 0.0, vx0, oracle},
                       n);
        ojson row;
        row["n"] = n;
        row["vx0"] = vx0;
        row["vx0_oracle"] = oracle;
        row["eps"] = norms_to_json(eps);
        row["residual"] = residual;
        rows.push_back(std::move(row));
    }

    add_check(out, "oracle_match_odd", worst_odd_rel <= 0.02, worst_odd_rel, 0.02);
    if (rho > 0.5) add_check(out, "oracle_even_small", worst_even_abs <= 1e-3, worst_even_abs, 1e-3);

    RateFit fit;
    if (odd_vals.size() >= 4) {
        fit = fit_rate(odd_vals, odd_idx);
        const bool expect_divergent = rho < 0.5;
        const bool is_divergent = fit.classification == RateClass::Divergent;
        add_check(out, "classification", expect_divergent == is_divergent,
                  is_divergent ? 1.0 : 0.0, expect_divergent ? 1.0 : 0.0);
    }

    out.report["experiment"] = R.experiment_name;
    out.report["problem"] = R.problem_name;
    out.report["config"] = R.echo;
    out.report["iterations"] = std::move(rows);
    out.report["rate_vx0_odd"] = rate_to_json(fit);
    out.report["timings"] = {{"total_seconds", now_seconds() - t0}};
    out.csv = std::move(csv);
    return out;
}

RunOutcome run_mc_validate(const Resolved& R) {
    RunOutcome out;
    const double t0 = now_seconds();
    ERC_REQUIRE(R.problem.discount.has_value(), "McValidate: infinite-horizon problem required");
    ERC_REQUIRE(R.problem.mode == ControlMode::DriftControl,
                "McValidate: drift-control problem required");
    const double rho = *R.problem.discount;
    const ActionQuadrature quad =
        ActionQuadrature::gauss_legendre(R.problem.action_lo, R.problem.action_hi, R.quad_nodes);

    const ReferenceSolution ref = reference_solution(R.problem, R.grid, std::nullopt, quad, R.pia);
    const ValueField& v = ref.value;

    // Source of the driftless representation: f(x) = H(x, v_x(x)), tabulated
    // on the grid and interpolated along the paths.
    auto table = assemble_hamiltonian_table(R.problem, quad, R.grid.nodes(), v.dx, {}, false);
    const Grid1D grid = R.grid;
    const std::vector<double> f_table = std::move(table.h);
    const std::vector<double> values = v.values;
    const std::vector<double> slopes = v.dx;
    Integrand integrand;
    integrand.source = [grid, f_table](double x) { return interpolate(grid, f_table, x); };

    const ControlProblem& p = R.problem;
    const double a_mid = 0.5 * (p.action_lo + p.action_hi);
    SdeSpec sde = SdeSpec::driftless(
        [&p, a_mid](double x) { return p.diffusion(x, a_mid); },
        [&p, a_mid](double x) {
            return (p.diffusion(x + 1e-5, a_mid) - p.diffusion(x - 1e-5, a_mid)) / 2e-5;
        });

    const double h = grid.spacing();
    const double budget_extra = kAgreementBudgetCoef * (R.mc.dt_sim + h * h);
    ojson probes = ojson::array();
    for (std::size_t j = 0; j < R.mc.probe_points.size(); ++j) {
        const double x0 = R.mc.probe_points[j];
        const PathBundle bundle = simulate_paths(sde, x0, R.mc.t_max, R.mc.n_paths, R.mc.dt_sim,
                                                 mix_seed(R.mc.seed, j));
        const McEstimate val = mc_value(bundle, integrand, rho);
        const McEstimate grad = mc_gradient(bundle, integrand, rho);
        const double gv = interpolate(grid, values, x0);
        const double gg = interpolate(grid, slopes, x0);
        const double budget_v = 3.0 * val.std_error + val.tail_bound + budget_extra;
        const double budget_g = 3.0 * grad.std_error + grad.tail_bound + budget_extra;
        const double err_v = std::abs(val.mean - gv);
        const double err_g = std::abs(grad.mean - gg);
        add_check(out, "probe_value_" + std::to_string(j), err_v <= budget_v, err_v, budget_v);
        add_check(out, "probe_gradient_" + std::to_string(j), err_g <= budget_g, err_g, budget_g);
        ojson row;
        row["x0"] = x0;
        row["grid_value"] = gv;
        row["grid_gradient"] = gg;
        row["mc_value"] = val.mean;
        row["mc_value_se"] = val.std_error;
        row["mc_gradient"] = grad.mean;
        row["mc_gradient_se"] = grad.std_error;
        row["tail_value"] = val.tail_bound;
        row["tail_gradient"] = grad.tail_bound;
        row["budget_value"] = budget_v;
        row["budget_gradient"] = budget_g;
        probes.push_back(std::move(row));
    }

    // Gaussian anchors: exact Bismut-Elworthy-Li identities for x + W_1.
    const double xg = 0.7;
    const PathBundle gb = simulate_paths(SdeSpec::brownian(), xg, 1.0, 100000, 1.0, R.mc.seed);
    Integrand quad_term;
    quad_term.terminal = [](double x) { return x * x; };
    const McEstimate g1 = mc_gradient(gb, quad_term, std::nullopt);
    const McEstimate g2 = mc_second_derivative_unit_sigma(gb, quad_term, std::nullopt);
    add_check(out, "gaussian_gradient", std::abs(g1.mean - 2.0 * xg) <= 3.0 * g1.std_error,
              std::abs(g1.mean - 2.0 * xg), 3.0 * g1.std_error);
    add_check(out, "gaussian_second_derivative", std::abs(g2.mean - 2.0) <= 3.0 * g2.std_error,
              std::abs(g2.mean - 2.0), 3.0 * g2.std_error);

    // Determinism anchor: identical seeds must reproduce the estimate bit for
    // bit (worker count does not enter the reduction order).
    const PathBundle gb2 = simulate_paths(SdeSpec::brownian(), xg, 1.0, 100000, 1.0, R.mc.seed);
    const McEstimate g1b = mc_gradient(gb2, quad_term, std::nullopt);
    add_check(out, "seed_determinism", g1.mean == g1b.mean && g1.std_error == g1b.std_error,
              std::abs(g1.mean - g1b.mean), 0.0);

    out.report["experiment"] = R.experiment_name;
    out.report["problem"] = R.problem_name;
    out.report["config"] = R.echo;
    out.report["reference"] = {{"iterations", ref.iterations}, {"hjb_residual", ref.hjb_residual}};
    out.report["probes"] = std::move(probes);
    out.report["gaussian"] = {{"gradient", g1.mean},
                              {"gradient_se", g1.std_error},
                              {"second_derivative", g2.mean},
                              {"second_derivative_se", g2.std_error}};
    out.report["timings"] = {{"total_seconds", now_seconds() - t0}};
    out.csv = "n,eps0,eps1,eps2,delta0,delta1,delta2,policy_delta,"
              "monotonicity_violation,residual,seconds\n";
    return out;
}

RunOutcome run_audit(const Resolved& R) {
    RunOutcome out;
    const double t0 = now_seconds();
    const AuditResult audit = audit_problem(R.spec);
    ojson checks = ojson::array();
    for (const auto& c : audit.checks) {
        add_check(out, c.name, c.pass, c.observed, c.bound);
        checks.push_back(ojson{
            {"name", c.name}, {"observed", c.observed}, {"bound", c.bound}, {"pass", c.pass}});
    }
    out.report["experiment"] = R.experiment_name;
    out.report["problem"] = R.problem_name;
    out.report["config"] = R.echo;
    out.report["audit"] = std::move(checks);
    out.report["timings"] = {{"total_seconds", now_seconds() - t0}};
    out.csv = "n,eps0,eps1,eps2,delta0,delta1,delta2,policy_delta,"
              "monotonicity_violation,residual,seconds\n";
    return out;
}

} // namespace

RunOutcome run_experiment(const nlohmann::json& config, const RunOverrides& overrides) {
    const Resolved R = resolve_config(config, overrides);
    RunOutcome out;
    switch (R.kind) {
    case Kind::PiaFinite:
    case Kind::PiaInfinite:
    case Kind::PiaDiffusion:
        out = run_pia_like(R);
        break;
    case Kind::Counterexample:
        out = run_counterexample(R);
        break;
    case Kind::McValidate:
        out = run_mc_validate(R);
        break;
    case Kind::Audit:
        out = run_audit(R);
        break;
    }

    ojson checks = ojson::array();
    bool all_pass = true;
    for (const auto& c : out.checks) {
        checks.push_back(ojson{{"name", c.name},
                               {"pass", c.pass},
                               {"observed", c.observed},
                               {"threshold", c.threshold}});
        all_pass = all_pass && c.pass;
    }
    out.report["checks"] = std::move(checks);
    out.report["artifacts"] = {"report.json", "iterations.csv"};
    out.exit_code = all_pass ? 0 : 1;
    return out;
}

int run_from_file(const std::string& config_path, const RunOverrides& overrides) {
    nlohmann::json cfg;
    try {
        std::ifstream f(config_path);
        if (!f) {
            std::cerr << "config error: cannot read '" << config_path << "'\n";
            return 2;
        }
        cfg = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        std::cerr << "config parse error: " << e.what() << "\n";
        return 2;
    }

    RunOutcome out;
    try {
        out = run_experiment(cfg, overrides);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure";
        if (e.iteration() >= 0) std::cerr << " at iteration " << e.iteration();
        std::cerr << ": " << e.what() << "\n";
        return 3;
    }

    const std::string outdir = out.report["config"]["output_dir"].get<std::string>();
    std::error_code ec;
    std::filesystem::create_directories(outdir, ec);
    {
        std::ofstream rep(outdir + "/report.json");
        rep << out.report.dump(2) << "\n";
        std::ofstream csv(outdir + "/iterations.csv");
        csv << out.csv;
    }
    if (out.exit_code != 0)
        std::cerr << "acceptance check failed: " << out.failed_check << "\n";
    return out.exit_code;
}

std::string list_problems_text(std::span<const ProblemSpec> problems) {
    std::ostringstream os;
    os << "name                     audit  summary\n";
    for (const auto& p : problems) {
        AuditResult a = audit_problem(p);
        std::string name = p.name;
        name.resize(24, ' ');
        os << name << " " << (a.pass ? "OK   " : "FAIL ") << " " << p.summary << "\n";
    }
    return os.str();
}

} // namespace erc
