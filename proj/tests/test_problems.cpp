#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "erc/hamiltonian.hpp"
#include "erc/pia.hpp"
#include "erc/problems.hpp"
#include "erc/quadrature.hpp"

using namespace erc;

namespace {
constexpr double kPi = 3.141592653589793238462643383279503;

Grid1D picard_grid(int n = 512) { return {0.0, 2.0 * kPi, n, Boundary::Periodic}; }
} // namespace

TEST_CASE("oracle values from the divergence example") {
    CHECK(counterexample_oracle(1.0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(counterexample_oracle(1.0, 3) == doctest::Approx(-8.0 / 27.0).epsilon(1e-15));
    CHECK(counterexample_oracle(1.0, 4) == 0.0);
    CHECK(counterexample_oracle(1.0, 0) == 0.0);
    CHECK(counterexample_oracle(0.25, 5) == doctest::Approx(4.2139917695).epsilon(1e-9));
    CHECK(counterexample_oracle(0.25, 5) > 0.0); // sign (-1)^2 = +1
    CHECK_THROWS_AS(counterexample_oracle(-1.0, 1), InvalidArgument);
    CHECK_THROWS_AS(counterexample_oracle(1.0, -1), InvalidArgument);
}

TEST_CASE("grid Picard iterates track the oracle within 2%") {
    for (double rho : {1.0, 0.25}) {
        const auto iterates = counterexample_picard(rho, picard_grid(), 9);
        REQUIRE(iterates.size() == 10);
        for (int n = 1; n <= 9; n += 2) {
            const double oracle = counterexample_oracle(rho, n);
            CHECK(std::abs(iterates[n].dx[0] - oracle) <= 0.02 * std::abs(oracle));
        }
        // even iterates vanish: the rotation leaves the slope's sin-slot empty
        for (int n = 2; n <= 8; n += 2) CHECK(std::abs(iterates[n].dx[0]) <= 1e-3);
    }
}

TEST_CASE("iterates stay in the discrete span of sin and cos") {
    // One elliptic sweep maps A cos + B sin to (k1 B cos - k1 A sin)/(rho + k2/2)
    // with the discrete symbols k1 = sin(h)/h, k2 = 2(1 - cos h)/h^2.
    const double rho = 0.7;
    const Grid1D g = picard_grid(256);
    const double h = g.spacing();
    const double k1 = std::sin(h) / h;
    const double k2 = 2.0 * (1.0 - std::cos(h)) / (h * h);
    const auto iterates = counterexample_picard(rho, g, 6);
    double a = -1.0, b = 0.0; // v0 = -cos
    for (int n = 1; n <= 6; ++n) {
        const double denom = rho + 0.5 * k2;
        const double a_new = k1 * b / denom;
        const double b_new = -k1 * a / denom;
        a = a_new;
        b = b_new;
        double worst = 0.0;
        for (int i = 0; i < g.n_nodes; ++i) {
            const double x = g.node(i);
            worst = std::max(worst, std::abs(iterates[n].values[i] -
                                             (a * std::cos(x) + b * std::sin(x))));
        }
        CHECK(worst <= 1e-10);
    }
}

TEST_CASE("divergence detection through the rate fit") {
    for (double rho : {1.0, 0.25}) {
        const auto iterates = counterexample_picard(rho, picard_grid(), 9);
        std::vector<double> odd, idx;
        for (int n = 1; n <= 9; n += 2) {
            odd.push_back(std::abs(iterates[n].dx[0]));
            idx.push_back(n);
        }
        const RateFit f = fit_rate(odd, idx);
        if (rho < 0.5) {
            CHECK(f.classification == RateClass::Divergent);
        } else {
            CHECK(f.classification == RateClass::Exponential);
            CHECK(*f.eta == doctest::Approx(2.0 / 3.0).epsilon(0.03)); // (rho + 1/2)^-1
        }
    }
}

TEST_CASE("the same linear problem under PIA converges in one step") {
    // Picard diverges for rho < 1/2, but the PIA on the identical problem is
    // exact after one iteration: H_z = 1 is action-free.
    const ProblemSpec spec = counterexample_problem();
    ControlProblem p = spec.build();
    p.discount = 0.25;
    const ActionQuadrature q = ActionQuadrature::gauss_legendre(0.0, 1.0, 16);
    PiaConfig cfg;
    cfg.max_iter = 10;
    cfg.stop_tol = 1e-12;
    const PiaResult res = pia_infinite_horizon(p, spec.recommended_grid, q, cfg);
    CHECK(res.report.iters.size() <= 3);
    for (double v : res.final_value.values) CHECK(std::abs(v) <= 1e-9);
}

TEST_CASE("registry contents and audits") {
    CHECK(registry().size() == 3);
    CHECK(find_problem("smooth_benchmark") != nullptr);
    CHECK(find_problem("diffusion_benchmark") != nullptr);
    CHECK(find_problem("counterexample") != nullptr);
    CHECK(find_problem("no_such_problem") == nullptr);
    for (const auto& spec : registry()) {
        const AuditResult a = audit_problem(spec);
        for (const auto& c : a.checks) {
            INFO(spec.name, "/", c.name, " observed=", c.observed, " bound=", c.bound);
            CHECK(c.pass);
        }
        CHECK(a.pass);
    }
}

TEST_CASE("diffusion benchmark: H_q envelope and tail decay") {
    const ProblemSpec spec = diffusion_benchmark();
    const ControlProblem p = spec.build();
    const ActionQuadrature q = ActionQuadrature::gauss_legendre(-1.0, 1.0, 32);
    for (double x : {-4.0, -1.0, 0.0, 0.5, 3.0})
        for (double z : {-2.0, 0.0, 2.0})
            for (double qq : {-3.0, 0.0, 3.0}) {
                const double hq = hamiltonian(p, q, x, z, qq).h_q;
                CHECK(hq >= 0.18 - 1e-12); // min sigma^2 / 2
                CHECK(hq <= 0.98 + 1e-12); // max sigma^2 / 2
            }
    // sup over a of |sigma(x,a) - 1| = 0.4 sech(x) -> 0
    for (double x : {5.0, 10.0}) {
        double spread = 0.0;
        for (double a : q.nodes)
            spread = std::max(spread, std::abs(p.diffusion(x, a) - 1.0));
        CHECK(spread <= 0.4 / std::cosh(x) + 1e-12);
    }
}

TEST_CASE("smooth benchmark rates by discount regime") {
    const ProblemSpec spec = smooth_benchmark();
    const ActionQuadrature q = ActionQuadrature::gauss_legendre(-1.0, 1.0, 32);

    SUBCASE("large discount: super-exponential") {
        const ControlProblem p = spec.build(); // rho = 20
        PiaConfig cfg;
        const ReferenceSolution ref =
            reference_solution(p, spec.recommended_grid, std::nullopt, q, cfg);
        const PiaResult res =
            pia_infinite_horizon(p, spec.recommended_grid, q, cfg, &ref.value);
        CHECK(res.report.rate_eps1.classification == RateClass::SuperExponential);
    }
    SUBCASE("small discount: still converges, never divergent") {
        ControlProblem p = spec.build();
        p.discount = 0.05;
        PiaConfig cfg;
        cfg.max_iter = 500;
        cfg.stop_tol = 1e-8;
        cfg.reference_tol = 1e-11;
        const ReferenceSolution ref =
            reference_solution(p, spec.recommended_grid, std::nullopt, q, cfg);
        const PiaResult res =
            pia_infinite_horizon(p, spec.recommended_grid, q, cfg, &ref.value);
        const auto& last = res.report.iters.back();
        CHECK(last.delta0 + last.delta1 + last.delta2 <= 1e-8);
        CHECK(res.report.iters.size() <= 500);
        CHECK(res.report.rate_eps1.classification != RateClass::Divergent);
        for (const auto& it : res.report.iters) CHECK(it.monotonicity_violation >= -1e-8);
    }
}

TEST_CASE("picard argument validation") {
    const Grid1D not_periodic{0.0, 1.0, 32, Boundary::LinearExtrapolation};
    CHECK_THROWS_AS(counterexample_picard(1.0, not_periodic, 3), InvalidArgument);
    CHECK_THROWS_AS(counterexample_picard(0.0, picard_grid(), 3), InvalidArgument);
    CHECK_THROWS_AS(counterexample_picard(1.0, picard_grid(), -1), InvalidArgument);
}
