#include "erc/pia.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace erc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kLn2 = 0.6931471805599453094172321214581766;

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

double sup_abs_diff(std::span<const double> a, std::span<const double> b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

struct LinFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

LinFit least_squares(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += e * e;
    }
    f.r_squared = syy > 0 ? 1.0 - ss_res / syy : 1.0;
    return f;
}

} // namespace

void PiaConfig::validate() const {
    ERC_REQUIRE(max_iter >= 1, "PiaConfig: max_iter >= 1 required");
    ERC_REQUIRE(stop_tol >= 0.0, "PiaConfig: stop_tol must be nonnegative");
    ERC_REQUIRE(reference_tol > 0.0, "PiaConfig: reference_tol must be positive");
    ERC_REQUIRE(reference_tol <= stop_tol || stop_tol == 0.0,
                "PiaConfig: reference_tol <= stop_tol required");
}

const char* to_string(RateClass c) {
    switch (c) {
    case RateClass::SuperExponential: return "SuperExponential";
    case RateClass::Exponential: return "Exponential";
    case RateClass::Stalled: return "Stalled";
    case RateClass::Divergent: return "Divergent";
    }
    return "?";
}

RateFit fit_rate(std::span<const double> eps) {
    std::vector<double> idx(eps.size());
    std::iota(idx.begin(), idx.end(), 0.0);
    return fit_rate(eps, idx);
}

RateFit fit_rate(std::span<const double> eps, std::span<const double> index) {
    const std::size_t n = eps.size();
    ERC_REQUIRE(n >= 4, "fit_rate: need at least 4 entries");
    ERC_REQUIRE(index.size() == n, "fit_rate: index size mismatch");
    for (double e : eps)
        ERC_REQUIRE(e > 0.0 && std::isfinite(e), "fit_rate: entries must be positive and finite");

    RateFit out;
    const double mn = *std::min_element(eps.begin(), eps.end());
    const bool decayed = mn < eps[0] / 100.0;
    const double floor_thresh = decayed ? 3.0 * mn : 0.0;
    out.floor = decayed ? mn : 0.0;

    // Divergence: >= 10% growth over a 3-step window, above the noise floor.
    for (std::size_t i = 0; i + 3 < n; ++i) {
        if (eps[i + 3] >= 1.1 * eps[i] && eps[i + 3] > 10.0 * floor_thresh) {
            out.classification = RateClass::Divergent;
            out.pre_floor_count = static_cast<int>(n);
            return out;
        }
    }

    // Pre-floor prefix: stop at the first stall or at the noise floor.
    std::size_t pre = n;
    for (std::size_t i = 1; i < n; ++i) {
        if (eps[i] >= 0.999 * eps[i - 1] || (floor_thresh > 0.0 && eps[i] <= floor_thresh)) {
            pre = i;
            break;
        }
    }
    out.pre_floor_count = static_cast<int>(pre);
    if (pre < 3) {
        out.classification = RateClass::Stalled;
        return out;
    }

    bool ratios_decreasing = true;
    double prev_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < pre; ++i) {
        const double r = eps[i] / eps[i - 1];
        if (!(r < prev_ratio * (1.0 - 1e-9))) {
            ratios_decreasing = false;
            break;
        }
        prev_ratio = r;
    }

    if (ratios_decreasing) {
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < pre; ++i) {
            if (eps[i] < 1.0) {
                xs.push_back(index[i]);
                ys.push_back(std::log(-std::log(eps[i])));
            }
        }
        if (xs.size() >= 3) {
            const LinFit f = least_squares(xs, ys);
            // eps ~ eta^(2^n) has slope ln 2; runs with a strong quadratic
            // constant approach it from above, hence the asymmetric window.
            if (f.slope >= 0.5 * kLn2 - 1e-12 && f.slope <= 2.2 * kLn2 + 1e-12) {
                out.classification = RateClass::SuperExponential;
                out.double_log_slope = f.slope;
                const double k = index[pre - 1] - index[0] + 1.0;
                out.eta = std::exp(std::log(eps[pre - 1]) / std::pow(2.0, k));
                return out;
            }
        }
    }

    {
        std::vector<double> xs(index.begin(), index.begin() + pre);
        std::vector<double> ys(pre);
        for (std::size_t i = 0; i < pre; ++i) ys[i] = std::log(eps[i]);
        const LinFit f = least_squares(xs, ys);
        out.r_squared = f.r_squared;
        if (f.slope < 0.0 && f.r_squared >= 0.98) {
            out.classification = RateClass::Exponential;
            out.eta = std::exp(f.slope);
            return out;
        }
    }

    out.classification = RateClass::Stalled;
    return out;
}

std::vector<double> IterationReport::eps1_sequence() const {
    std::vector<double> s;
    if (!has_reference) return s;
    s.push_back(initial_eps.c1);
    for (const auto& r : iters) s.push_back(r.eps1);
    while (!s.empty() && !(s.back() > 0.0 && std::isfinite(s.back()))) s.pop_back();
    for (double v : s)
        if (!(v > 0.0 && std::isfinite(v))) return {};
    return s;
}

std::vector<double> IterationReport::eps2_sequence() const {
    std::vector<double> s;
    if (!has_reference) return s;
    s.push_back(initial_eps.c2);
    for (const auto& r : iters) s.push_back(r.eps2);
    while (!s.empty() && !(s.back() > 0.0 && std::isfinite(s.back()))) s.pop_back();
    for (double v : s)
        if (!(v > 0.0 && std::isfinite(v))) return {};
    return s;
}

PolicyField policy_from_field(const ControlProblem& problem, const ActionQuadrature& quad,
                              const ValueField& field) {
    ERC_REQUIRE(field.has_derivatives(), "policy_from_field: field lacks derivative caches");
    const bool diffusion = problem.mode == ControlMode::DiffusionControl1D;
    const int n = field.grid.n_nodes;
    const int m = quad.size();
    PolicyField p;
    p.n_levels = 1;
    p.n_nodes = n;
    p.n_actions = m;
    p.log_density.resize(static_cast<std::size_t>(n) * m);
    for (int i = 0; i < n; ++i) {
        const auto g = gibbs_policy(problem, quad, field.grid.node(i), field.dx[i],
                                    diffusion ? std::optional<double>(field.dxx[i]) : std::nullopt);
        for (int k = 0; k < m; ++k)
            p.log_density[static_cast<std::size_t>(i) * m + k] = g.log_weights[k] - g.log_partition;
    }
    return p;
}

namespace {

void finish_rate_fits(IterationReport& rep) {
    if (!rep.has_reference) return;
    const auto s1 = rep.eps1_sequence();
    if (s1.size() >= 4) rep.rate_eps1 = fit_rate(s1);
    const auto s2 = rep.eps2_sequence();
    if (s2.size() >= 4) rep.rate_eps2 = fit_rate(s2);
}

PiaResult run_infinite_engine(const ControlProblem& problem, const Grid1D& grid,
                              const ActionQuadrature& quad, const PiaConfig& cfg,
                              const ValueField* reference, bool diffusion) {
    problem.validate();
    grid.validate();
    cfg.validate();
    ERC_REQUIRE(problem.discount.has_value(), "pia: infinite-horizon problem required");
    ERC_REQUIRE((problem.mode == ControlMode::DiffusionControl1D) == diffusion,
                "pia: control mode does not match the requested algorithm");
    if (reference)
        ERC_REQUIRE(reference->grid == grid && reference->has_derivatives(),
                    "pia: reference field must live on the same grid with derivative caches");

    const double rho = *problem.discount;
    const double c0 = problem.coefficient_bound;
    const double ec = problem.entropy_cap();
    const double sig_floor = 0.5 * problem.sigma_min * problem.sigma_min;
    const int n = grid.n_nodes;
    const std::vector<double> xs = grid.nodes();

    // Step 0: the pessimistic constant.
    ValueField prev = ValueField::constant(grid, -(c0 - ec) / rho);
    const double upper_bound = (c0 + ec) / rho;

    std::vector<double> c2_drift;
    if (!diffusion) {
        const double a_mid = 0.5 * (problem.action_lo + problem.action_hi);
        c2_drift.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const double s = problem.diffusion(xs[i], a_mid);
            c2_drift[i] = 0.5 * s * s;
            if (c2_drift[i] < sig_floor - 1e-12)
                fail_numeric("pia: diffusion below the declared sigma_min at node " +
                             std::to_string(i));
        }
    }

    std::vector<double> ref_density;
    if (reference) {
        auto t = assemble_hamiltonian_table(
            problem, quad, xs, reference->dx,
            diffusion ? std::span<const double>(reference->dxx) : std::span<const double>(), true);
        ref_density = std::move(t.density);
    }

    PiaResult out;
    out.report.has_reference = reference != nullptr;
    out.report.apriori_upper_bound = upper_bound;
    if (reference) out.report.initial_eps = norms(prev, *reference);
    if (cfg.record_values) out.values.push_back(prev);

    LinearPdeCoefficients co;
    co.discount = rho;
    co.second_order.assign(static_cast<std::size_t>(n), 0.0);
    co.first_order.assign(static_cast<std::size_t>(n), 0.0);
    co.source.assign(static_cast<std::size_t>(n), 0.0);

    std::vector<double> prev_density;
    double best_delta = std::numeric_limits<double>::infinity();
    int stalled = 0;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        const double t0 = now_seconds();
        auto table = assemble_hamiltonian_table(
            problem, quad, xs, prev.dx,
            diffusion ? std::span<const double>(prev.dxx) : std::span<const double>(), true);

        for (int i = 0; i < n; ++i) {
            const double c2 = diffusion ? table.h_q[i] : c2_drift[i];
            if (diffusion && c2 < sig_floor - 1e-10)
                fail_numeric("pia: H_q fell below sigma_min^2/2 at node " + std::to_string(i), it);
            co.second_order[i] = c2;
            co.first_order[i] = table.h_z[i];
            co.source[i] = table.h[i] - table.h_z[i] * prev.dx[i] -
                           (diffusion ? c2 * prev.dxx[i] : 0.0);
        }

        PdeSolveInfo info;
        ValueField vn;
        try {
            vn = solve_elliptic(co, grid, &info);
        } catch (const NumericError& e) {
            fail_numeric("pia iteration " + std::to_string(it) + ": " + e.what(), it);
        }

        IterationRecord rec;
        rec.n = it;
        const DiscreteNorms d = norms(vn, prev);
        rec.delta0 = d.c0;
        rec.delta1 = d.c1;
        rec.delta2 = d.c2;

        double mono = std::numeric_limits<double>::infinity();
        double bound = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            mono = std::min(mono, vn.values[i] - prev.values[i]);
            bound = std::max(bound, vn.values[i] - upper_bound);
        }
        rec.monotonicity_violation = mono;
        rec.bound_violation = bound;
        rec.residual = info.max_row_residual;
        rec.upwind_nodes = info.upwind_nodes;

        if (diffusion) {
            double worst = 0.0;
            for (int i = 0; i < n; ++i) {
                const double rhs =
                    (rho * vn.values[i] - co.first_order[i] * vn.dx[i] - co.source[i]) /
                    co.second_order[i];
                worst = std::max(worst, std::abs(vn.dxx[i] - rhs));
            }
            rec.vxx_identity_residual = worst;
        }

        if (it >= 2)
            rec.policy_delta = sup_abs_diff(table.density, prev_density);
        if (reference) {
            const DiscreteNorms e = norms(vn, *reference);
            rec.eps0 = e.c0;
            rec.eps1 = e.c1;
            rec.eps2 = e.c2;
            rec.policy_err = sup_abs_diff(table.density, ref_density);
        } else {
            rec.eps0 = rec.eps1 = rec.eps2 = kNaN;
            rec.policy_err = kNaN;
        }
        if (cfg.record_policies) out.policies.push_back(policy_from_field(problem, quad, prev));

        rec.seconds = now_seconds() - t0;
        out.report.iters.push_back(rec);
        out.report.total_upwind_nodes += info.upwind_nodes;

        prev_density = std::move(table.density);
        prev = std::move(vn);
        if (cfg.record_values) out.values.push_back(prev);
        if (d.total() <= cfg.stop_tol) break;
        if (cfg.stop_on_stall) {
            stalled = d.total() > 0.9 * best_delta ? stalled + 1 : 0;
            if (stalled >= 10) break;
        }
        best_delta = std::min(best_delta, d.total());
    }

    out.final_value = prev;
    finish_rate_fits(out.report);
    return out;
}

PiaResult run_finite_engine(const ControlProblem& problem, const Grid1D& grid,
                            const TimeGrid& tgrid, const ActionQuadrature& quad,
                            const PiaConfig& cfg, const std::vector<ValueField>* reference) {
    problem.validate();
    grid.validate();
    tgrid.validate();
    cfg.validate();
    ERC_REQUIRE(problem.finite_horizon(), "pia_finite_horizon: finite-horizon problem required");
    ERC_REQUIRE(problem.mode == ControlMode::DriftControl,
                "pia_finite_horizon: drift-control mode required");
    const double T = *problem.horizon;
    ERC_REQUIRE(std::abs(tgrid.t_hi - T) <= 1e-12 * std::max(1.0, T),
                "pia_finite_horizon: time grid must span the horizon");

    const int n = grid.n_nodes;
    const int m = quad.size();
    const int steps = tgrid.n_steps;
    const std::size_t levels = static_cast<std::size_t>(steps) + 1;
    if (reference)
        ERC_REQUIRE(reference->size() == levels, "pia_finite_horizon: reference level mismatch");

    const double c0 = problem.coefficient_bound;
    const double ec = problem.entropy_cap();
    const double sig_floor = 0.5 * problem.sigma_min * problem.sigma_min;
    const std::vector<double> xs = grid.nodes();
    const double a_mid = 0.5 * (problem.action_lo + problem.action_hi);

    std::vector<double> c2_drift(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double s = problem.diffusion(xs[i], a_mid);
        c2_drift[i] = 0.5 * s * s;
        if (c2_drift[i] < sig_floor - 1e-12)
            fail_numeric("pia: diffusion below the declared sigma_min at node " + std::to_string(i));
    }

    // Step 0 and the a-priori envelope, level by level.
    std::vector<ValueField> prev(levels);
    std::vector<double> upper(levels);
    for (std::size_t k = 0; k < levels; ++k) {
        const double ttg = T - tgrid.level(static_cast<int>(k));
        prev[k] = ValueField::constant(grid, -c0 - (c0 - ec) * ttg);
        upper[k] = c0 + (c0 + ec) * ttg;
    }
    const ValueField terminal = ValueField::from_function(grid, problem.terminal_reward);

    const std::size_t dens_sz = static_cast<std::size_t>(steps) * n * m;
    std::vector<double> ref_density;
    if (reference) {
        ref_density.resize(dens_sz);
        for (int k = 0; k < steps; ++k) {
            auto t = assemble_hamiltonian_table(problem, quad, xs, (*reference)[k].dx, {}, true);
            std::copy(t.density.begin(), t.density.end(),
                      ref_density.begin() + static_cast<std::size_t>(k) * n * m);
        }
    }

    PiaResult out;
    out.report.has_reference = reference != nullptr;
    if (reference) {
        DiscreteNorms e;
        for (std::size_t k = 0; k < levels; ++k) {
            const DiscreteNorms ek = norms(prev[k], (*reference)[k]);
            e.c0 = std::max(e.c0, ek.c0);
            e.c1 = std::max(e.c1, ek.c1);
            e.c2 = std::max(e.c2, ek.c2);
        }
        out.report.initial_eps = e;
    }
    if (cfg.record_values) out.values_t.push_back(prev);

    std::vector<LinearPdeCoefficients> coeffs(static_cast<std::size_t>(steps));
    for (auto& c : coeffs) {
        c.discount = 0.0;
        c.second_order = c2_drift;
        c.first_order.assign(static_cast<std::size_t>(n), 0.0);
        c.source.assign(static_cast<std::size_t>(n), 0.0);
    }

    std::vector<double> density(dens_sz), prev_density;
    double best_delta = std::numeric_limits<double>::infinity();
    int stalled = 0;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        const double t0 = now_seconds();
        for (int k = 0; k < steps; ++k) {
            auto table = assemble_hamiltonian_table(problem, quad, xs, prev[k].dx, {}, true);
            auto& c = coeffs[static_cast<std::size_t>(k)];
            for (int i = 0; i < n; ++i) {
                c.first_order[i] = table.h_z[i];
                c.source[i] = table.h[i] - table.h_z[i] * prev[k].dx[i];
            }
            std::copy(table.density.begin(), table.density.end(),
                      density.begin() + static_cast<std::size_t>(k) * n * m);
        }

        PdeSolveInfo info;
        std::vector<ValueField> un;
        try {
            un = solve_parabolic(coeffs, terminal, tgrid, &info);
        } catch (const NumericError& e) {
            fail_numeric("pia iteration " + std::to_string(it) + ": " + e.what(), it);
        }

        IterationRecord rec;
        rec.n = it;
        double mono = std::numeric_limits<double>::infinity();
        double bound = -std::numeric_limits<double>::infinity();
        DiscreteNorms d;
        for (std::size_t k = 0; k < levels; ++k) {
            const DiscreteNorms dk = norms(un[k], prev[k]);
            d.c0 = std::max(d.c0, dk.c0);
            d.c1 = std::max(d.c1, dk.c1);
            d.c2 = std::max(d.c2, dk.c2);
            for (int i = 0; i < n; ++i) {
                mono = std::min(mono, un[k].values[i] - prev[k].values[i]);
                bound = std::max(bound, un[k].values[i] - upper[k]);
            }
        }
        rec.delta0 = d.c0;
        rec.delta1 = d.c1;
        rec.delta2 = d.c2;
        rec.monotonicity_violation = mono;
        rec.bound_violation = bound;
        rec.residual = info.max_row_residual;
        rec.upwind_nodes = info.upwind_nodes;

        if (it >= 2) rec.policy_delta = sup_abs_diff(density, prev_density);
        if (reference) {
            DiscreteNorms e;
            for (std::size_t k = 0; k < levels; ++k) {
                const DiscreteNorms ek = norms(un[k], (*reference)[k]);
                e.c0 = std::max(e.c0, ek.c0);
                e.c1 = std::max(e.c1, ek.c1);
                e.c2 = std::max(e.c2, ek.c2);
            }
            rec.eps0 = e.c0;
            rec.eps1 = e.c1;
            rec.eps2 = e.c2;
            rec.policy_err = sup_abs_diff(density, ref_density);
        } else {
            rec.eps0 = rec.eps1 = rec.eps2 = kNaN;
            rec.policy_err = kNaN;
        }

        if (cfg.record_policies) {
            PolicyField p;
            p.n_levels = steps;
            p.n_nodes = n;
            p.n_actions = m;
            p.log_density.resize(dens_sz);
            for (int k = 0; k < steps; ++k) {
                const PolicyField pk = policy_from_field(problem, quad, prev[k]);
                std::copy(pk.log_density.begin(), pk.log_density.end(),
                          p.log_density.begin() + static_cast<std::size_t>(k) * n * m);
            }
            out.policies.push_back(std::move(p));
        }

        rec.seconds = now_seconds() - t0;
        out.report.iters.push_back(rec);
        out.report.total_upwind_nodes += info.upwind_nodes;

        prev_density = density;
        prev = std::move(un);
        if (cfg.record_values) out.values_t.push_back(prev);
        if (d.total() <= cfg.stop_tol) break;
        if (cfg.stop_on_stall) {
            stalled = d.total() > 0.9 * best_delta ? stalled + 1 : 0;
            if (stalled >= 10) break;
        }
        best_delta = std::min(best_delta, d.total());
    }

    out.final_value_t = prev;
    finish_rate_fits(out.report);
    return out;
}

} // namespace

PiaResult pia_finite_horizon(const ControlProblem& problem, const Grid1D& grid,
                             const TimeGrid& tgrid, const ActionQuadrature& quad,
                             const PiaConfig& config, const std::vector<ValueField>* reference) {
    return run_finite_engine(problem, grid, tgrid, quad, config, reference);
}

PiaResult pia_infinite_horizon(const ControlProblem& problem, const Grid1D& grid,
                               const ActionQuadrature& quad, const PiaConfig& config,
                               const ValueField* reference) {
    return run_infinite_engine(problem, grid, quad, config, reference, false);
}

PiaResult pia_diffusion_1d(const ControlProblem& problem, const Grid1D& grid,
                           const ActionQuadrature& quad, const PiaConfig& config,
                           const ValueField* reference) {
    return run_infinite_engine(problem, grid, quad, config, reference, true);
}

ReferenceSolution reference_solution(const ControlProblem& problem, const Grid1D& grid,
                                     const std::optional<TimeGrid>& tgrid,
                                     const ActionQuadrature& quad, const PiaConfig& config) {
    config.validate();
    PiaConfig rcfg = config;
    rcfg.stop_tol = config.reference_tol;
    rcfg.max_iter = 10 * config.max_iter;
    rcfg.record_values = false;
    rcfg.record_policies = false;
    rcfg.stop_on_stall = true;

    ReferenceSolution ref;
    const bool finite = problem.finite_horizon();
    PiaResult run;
    if (finite) {
        ERC_REQUIRE(tgrid.has_value(), "reference_solution: finite horizon needs a time grid");
        run = pia_finite_horizon(problem, grid, *tgrid, quad, rcfg, nullptr);
    } else if (problem.mode == ControlMode::DiffusionControl1D) {
        run = pia_diffusion_1d(problem, grid, quad, rcfg, nullptr);
    } else {
        run = pia_infinite_horizon(problem, grid, quad, rcfg, nullptr);
    }

    for (const auto& r : run.report.iters)
        ref.delta_history.push_back(r.delta0 + r.delta1 + r.delta2);
    ref.iterations = static_cast<int>(run.report.iters.size());

    if (ref.delta_history.empty() || ref.delta_history.back() > rcfg.stop_tol) {
        const bool stalled = static_cast<int>(ref.delta_history.size()) < rcfg.max_iter;
        std::ostringstream os;
        os << "reference_solution: no convergence to " << rcfg.stop_tol;
        if (stalled)
            os << "; the delta stalled near its round-off floor after " << ref.iterations
               << " iterations (raise reference_tol above the floor)";
        else
            os << " within " << rcfg.max_iter << " iterations";
        os << "; delta history tail:";
        const std::size_t from = ref.delta_history.size() > 8 ? ref.delta_history.size() - 8 : 0;
        for (std::size_t i = from; i < ref.delta_history.size(); ++i)
            os << " " << ref.delta_history[i];
        fail_numeric(os.str(), ref.iterations);
    }

    const double rho = problem.discount.value_or(0.0);
    double residual = 0.0;
    if (finite) {
        const auto& u = run.final_value_t;
        const double dt = tgrid->dt();
        for (int k = 0; k < tgrid->n_steps; ++k) {
            for (int i = 0; i < grid.n_nodes; ++i) {
                const double c2 = [&] {
                    const double a_mid = 0.5 * (problem.action_lo + problem.action_hi);
                    const double s = problem.diffusion(grid.node(i), a_mid);
                    return 0.5 * s * s;
                }();
                const auto he = hamiltonian(problem, quad, grid.node(i), u[k].dx[i]);
                const double r = (u[k + 1].values[i] - u[k].values[i]) / dt + c2 * u[k].dxx[i] +
                                 he.h_val;
                residual = std::max(residual, std::abs(r));
            }
        }
        ref.value_t = u;
    } else {
        const auto& v = run.final_value;
        const bool diffusion = problem.mode == ControlMode::DiffusionControl1D;
        const double a_mid = 0.5 * (problem.action_lo + problem.action_hi);
        for (int i = 0; i < grid.n_nodes; ++i) {
            double r;
            if (diffusion) {
                const auto he = hamiltonian(problem, quad, grid.node(i), v.dx[i], v.dxx[i]);
                r = rho * v.values[i] - he.h_val;
            } else {
                const double s = problem.diffusion(grid.node(i), a_mid);
                const auto he = hamiltonian(problem, quad, grid.node(i), v.dx[i]);
                r = rho * v.values[i] - 0.5 * s * s * v.dxx[i] - he.h_val;
            }
            residual = std::max(residual, std::abs(r));
        }
        ref.value = v;
    }
    ref.hjb_residual = residual;
    if (residual > 100.0 * config.reference_tol)
        fail_numeric("reference_solution: discrete HJB residual " + std::to_string(residual) +
                     " exceeds 100*reference_tol");
    return ref;
}

} // namespace erc
