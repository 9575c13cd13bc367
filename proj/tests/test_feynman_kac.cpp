#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "erc/feynman_kac.hpp"
#include "erc/parallel.hpp"

using namespace erc;

namespace {

SdeSpec ou_process() {
    SdeSpec s;
    s.drift = [](double x) { return -x; };
    s.drift_x = [](double) { return -1.0; };
    s.diffusion = [](double) { return 1.0; };
    s.diffusion_x = [](double) { return 0.0; };
    return s;
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

} // namespace

TEST_CASE("seed determinism and worker independence") {
    const SdeSpec b = SdeSpec::brownian();
    const PathBundle p1 = simulate_paths(b, 0.3, 1.0, 4000, 0.01, 91);
    const PathBundle p2 = simulate_paths(b, 0.3, 1.0, 4000, 0.01, 91);
    CHECK(p1.x_final == p2.x_final);
    CHECK(p1.weight_final == p2.weight_final);

    par::set_worker_count(1);
    const PathBundle s1 = simulate_paths(b, 0.3, 1.0, 4000, 0.01, 91);
    par::set_worker_count(2);
    const PathBundle s2 = simulate_paths(b, 0.3, 1.0, 4000, 0.01, 91);
    par::set_worker_count(0);
    CHECK(s1.x_final == s2.x_final);
    CHECK(s1.weight_final == s2.weight_final);

    Integrand f;
    f.terminal = [](double x) { return x * x; };
    const McEstimate e1 = mc_gradient(p1, f, std::nullopt);
    const McEstimate e2 = mc_gradient(p2, f, std::nullopt);
    CHECK(e1.mean == e2.mean);
    CHECK(e1.std_error == e2.std_error);
}

TEST_CASE("pure Brownian case: tangent is 1 and N equals W/t exactly") {
    const PathBundle p = simulate_paths(SdeSpec::brownian(), 0.0, 0.7, 2000, 0.007, 5);
    for (long i = 0; i < p.n_paths; ++i) {
        CHECK(p.tangent_final[i] == 1.0);
        CHECK(p.weight_final[i] == p.brownian_final[i] / p.t_max);
    }
}

TEST_CASE("martingale sanity: E[X_t] = x0 for driftless dynamics") {
    const PathBundle p = simulate_paths(SdeSpec::brownian(), 1.3, 1.0, 100000, 0.01, 11);
    const double m = mean_of(p.x_final);
    const double se = 1.0 / std::sqrt(static_cast<double>(p.n_paths)); // Var X_1 = 1
    CHECK(std::abs(m - 1.3) <= 3.0 * se);
}

TEST_CASE("Ornstein-Uhlenbeck variance at t = 1") {
    const PathBundle p = simulate_paths(ou_process(), 0.0, 1.0, 100000, 0.001, 13);
    const double m = mean_of(p.x_final);
    double var = 0.0;
    for (double x : p.x_final) var += (x - m) * (x - m);
    var /= static_cast<double>(p.n_paths - 1);
    const double exact = 0.5 * (1.0 - std::exp(-2.0));
    const double se = std::sqrt(2.0) * exact / std::sqrt(static_cast<double>(p.n_paths));
    // 3 SE plus a first-order Euler bias allowance
    CHECK(std::abs(var - exact) <= 3.0 * se + 2.0 * p.dt_sim);
}

TEST_CASE("weight moments: E[N] = 0 and E[N^2] = 1/t") {
    const PathBundle p = simulate_paths(SdeSpec::brownian(), 0.0, 0.5, 100000, 0.001, 8);
    const double m = mean_of(p.weight_final);
    const double se_mean = std::sqrt(1.0 / p.t_max / static_cast<double>(p.n_paths));
    CHECK(std::abs(m) <= 3.0 * se_mean);

    double m2 = 0.0;
    for (double w : p.weight_final) m2 += w * w;
    m2 /= static_cast<double>(p.n_paths);
    const double exact = 1.0 / p.t_max;
    const double se2 = std::sqrt(2.0) * exact / std::sqrt(static_cast<double>(p.n_paths));
    CHECK(std::abs(m2 - exact) <= 4.0 * se2); // chi-square tails are skewed; allow 4 SE
}

TEST_CASE("mc_value: constant source on the infinite horizon") {
    Integrand f;
    f.source = [](double) { return 3.0; };
    const PathBundle p = simulate_paths(SdeSpec::brownian(), 0.0, 3.0, 2000, 0.001, 17);
    const McEstimate e = mc_value(p, f, 2.0);
    CHECK(e.std_error <= 1e-12); // deterministic integrand
    CHECK(std::abs(e.mean - 1.5) <= e.tail_bound + 0.6 * 3.0 * p.dt_sim);
}

TEST_CASE("mc_value: terminal martingale on the finite horizon") {
    Integrand f;
    f.terminal = [](double x) { return x; };
    const PathBundle p = simulate_paths(SdeSpec::brownian(), 0.8, 1.0, 100000, 0.01, 19);
    const McEstimate e = mc_value(p, f, std::nullopt);
    CHECK(std::abs(e.mean - 0.8) <= 3.0 * e.std_error);
}

TEST_CASE("mc_gradient: Gaussian quadratic identity E[(x+W)^2 W] = 2x") {
    const double x0 = 0.5;
    const PathBundle p = simulate_paths(SdeSpec::brownian(), x0, 1.0, 100000, 1.0, 23);
    Integrand f;
    f.terminal = [](double x) { return x * x; };
    const McEstimate e = mc_gradient(p, f, std::nullopt);
    CHECK(std::abs(e.mean - 2.0 * x0) <= 3.0 * e.std_error);

    Integrand lin;
    lin.terminal = [](double x) { return x; };
    const McEstimate el = mc_gradient(p, lin, std::nullopt);
    CHECK(std::abs(el.mean - 1.0) <= 3.0 * el.std_error);
}

TEST_CASE("mc_second_derivative: Gaussian identities") {
    const PathBundle p = simulate_paths(SdeSpec::brownian(), 1.1, 1.0, 100000, 1.0, 29);
    Integrand sq;
    sq.terminal = [](double x) { return x * x; };
    const McEstimate e = mc_second_derivative_unit_sigma(p, sq, std::nullopt);
    CHECK(std::abs(e.mean - 2.0) <= 3.0 * e.std_error);

    Integrand c;
    c.terminal = [](double) { return 4.2; };
    const McEstimate ec = mc_second_derivative_unit_sigma(p, c, std::nullopt);
    CHECK(std::abs(ec.mean) <= 3.0 * ec.std_error); // E[R_t] = 0

    const PathBundle p0 = simulate_paths(SdeSpec::brownian(), 0.0, 1.0, 100000, 1.0, 31);
    Integrand s;
    s.terminal = [](double x) { return std::sin(x); };
    const McEstimate es = mc_second_derivative_unit_sigma(p0, s, std::nullopt);
    CHECK(std::abs(es.mean) <= 3.0 * es.std_error);
}

TEST_CASE("delta-split second derivative of a time-integrated source") {
    // v(x) = E int e^{-rho t} sin(x + W_t) dt solves rho v = v_xx/2 + sin,
    // so v = sin/(rho + 1/2) and v_xx(x) = -sin(x)/(rho + 1/2).
    const double rho = 1.0, x0 = 0.9;
    Integrand f;
    f.source = [](double x) { return std::sin(x); };
    f.source_x = [](double x) { return std::cos(x); };
    const PathBundle p = simulate_paths(SdeSpec::brownian(), x0, 8.0, 200000, 0.004, 37);
    const McEstimate e = mc_second_derivative_unit_sigma(p, f, rho, 0.1);
    const double exact = -std::sin(x0) / (rho + 0.5);
    CHECK(std::abs(e.mean - exact) <= 3.0 * e.std_error + 2.0 * p.dt_sim);
}

TEST_CASE("standard error scales like 1/sqrt(n_paths)") {
    Integrand f;
    f.terminal = [](double x) { return x * x; };
    const McEstimate small =
        mc_gradient(simulate_paths(SdeSpec::brownian(), 0.5, 1.0, 10000, 1.0, 41), f,
                    std::nullopt);
    const McEstimate big =
        mc_gradient(simulate_paths(SdeSpec::brownian(), 0.5, 1.0, 40000, 1.0, 43), f,
                    std::nullopt);
    const double ratio = small.std_error / big.std_error;
    CHECK(ratio >= 2.0 * 0.8);
    CHECK(ratio <= 2.0 * 1.2);
}

TEST_CASE("rejection paths") {
    const PathBundle p = simulate_paths(SdeSpec::brownian(), 0.0, 1.0, 100, 0.01, 3);
    Integrand none;
    CHECK_THROWS_AS(mc_value(p, none, std::nullopt), InvalidArgument); // terminal missing
    Integrand has_term;
    has_term.source = [](double) { return 1.0; };
    has_term.terminal = [](double) { return 0.0; };
    CHECK_THROWS_AS(mc_value(p, has_term, 2.0), InvalidArgument); // terminal on infinite horizon

    // R-weight only exists for the pure Brownian case
    const PathBundle pou = simulate_paths(ou_process(), 0.0, 1.0, 100, 0.01, 3);
    Integrand sq;
    sq.terminal = [](double x) { return x * x; };
    CHECK_THROWS_AS(mc_second_derivative_unit_sigma(pou, sq, std::nullopt), InvalidArgument);

    // delta-split form needs both f and f'
    Integrand f_only;
    f_only.source = [](double) { return 1.0; };
    CHECK_THROWS_AS(mc_second_derivative_unit_sigma(p, f_only, 2.0), InvalidArgument);

    // exploding dynamics abort paths; estimators refuse the bundle
    SdeSpec bad;
    bad.drift = [](double x) { return x * x * x; };
    bad.drift_x = [](double x) { return 3.0 * x * x; };
    bad.diffusion = [](double) { return 1.0; };
    bad.diffusion_x = [](double) { return 0.0; };
    const PathBundle pb = simulate_paths(bad, 5.0, 50.0, 8, 1.0, 3);
    CHECK(pb.aborted > 0);
    Integrand g;
    g.terminal = [](double x) { return x; };
    CHECK_THROWS_AS(mc_value(pb, g, std::nullopt), NumericError);
}
