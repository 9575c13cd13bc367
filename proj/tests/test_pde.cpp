#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "erc/pde.hpp"

using namespace erc;

namespace {
constexpr double kPi = 3.141592653589793238462643383279503;

LinearPdeCoefficients constant_coeffs(int n, double c2, double c1, double f, double rho) {
    LinearPdeCoefficients c;
    c.second_order.assign(n, c2);
    c.first_order.assign(n, c1);
    c.source.assign(n, f);
    c.discount = rho;
    return c;
}

double sup_err(const ValueField& w, const std::function<double(double)>& exact) {
    double worst = 0.0;
    for (int i = 0; i < w.grid.n_nodes; ++i)
        worst = std::max(worst, std::abs(w.values[i] - exact(w.grid.node(i))));
    return worst;
}
} // namespace

TEST_CASE("constants solve rho w = f when f = rho c") {
    for (Boundary b : {Boundary::Periodic, Boundary::LinearExtrapolation}) {
        const Grid1D g{-1.0, 3.0, 65, b};
        LinearPdeCoefficients c = constant_coeffs(65, 0.7, -0.4, 0.0, 2.5);
        for (int i = 0; i < 65; ++i) c.source[i] = 2.5 * 1.75;
        const ValueField w = solve_elliptic(c, g);
        for (double v : w.values) CHECK(v == doctest::Approx(1.75).epsilon(1e-13));
    }
}

TEST_CASE("elliptic oracle: rho=1, c2=1/2, |c1|=1, f = sin on the periodic circle") {
    // rho w = w_xx/2 + c1 w_x + sin x. Substituting w = A sin + B cos:
    //   c1 = +1: (3/2)A + B = 1, (3/2)B = A  => w = (6 sin + 4 cos)/13
    //   c1 = -1: (3/2)A - B = 1, (3/2)B = -A => w = (6 sin - 4 cos)/13
    const Grid1D g{0.0, 2.0 * kPi, 256, Boundary::Periodic};
    LinearPdeCoefficients c = constant_coeffs(256, 0.5, 1.0, 0.0, 1.0);
    for (int i = 0; i < 256; ++i) c.source[i] = std::sin(g.node(i));

    const ValueField wp = solve_elliptic(c, g);
    CHECK(wp.values[0] == doctest::Approx(4.0 / 13.0).epsilon(2e-4));
    CHECK(sup_err(wp, [](double x) { return (6.0 * std::sin(x) + 4.0 * std::cos(x)) / 13.0; }) <=
          5e-4);

    for (int i = 0; i < 256; ++i) c.first_order[i] = -1.0;
    const ValueField wm = solve_elliptic(c, g);
    CHECK(wm.values[0] == doctest::Approx(-4.0 / 13.0).epsilon(2e-4));
}

TEST_CASE("doubling the node count cuts the error fourfold") {
    auto run = [&](int n) {
        const Grid1D g{0.0, 2.0 * kPi, n, Boundary::Periodic};
        LinearPdeCoefficients c = constant_coeffs(n, 0.5, 1.0, 0.0, 1.0);
        for (int i = 0; i < n; ++i) c.source[i] = std::sin(g.node(i));
        const ValueField w = solve_elliptic(c, g);
        return sup_err(w,
                       [](double x) { return (6.0 * std::sin(x) + 4.0 * std::cos(x)) / 13.0; });
    };
    const double e256 = run(256), e512 = run(512);
    CHECK(e256 / e512 >= 3.2);
    CHECK(e256 / e512 <= 4.8);
}

TEST_CASE("solved rows hold exactly on the returned derivative caches") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Boundary b : {Boundary::Periodic, Boundary::LinearExtrapolation}) {
        const Grid1D g{-2.0, 2.0, 97, b};
        LinearPdeCoefficients c = constant_coeffs(97, 0.0, 0.0, 0.0, 1.3);
        for (int i = 0; i < 97; ++i) {
            c.second_order[i] = 0.4 + 0.3 * u(rng);
            c.first_order[i] = 40.0 * u(rng); // large drift: triggers upwinding
            c.source[i] = u(rng);
        }
        PdeSolveInfo info;
        const ValueField w = solve_elliptic(c, g, &info);
        CHECK(info.upwind_nodes > 0);
        double worst = 0.0;
        for (int i = 0; i < 97; ++i)
            worst = std::max(worst, std::abs(c.discount * w.values[i] -
                                             c.second_order[i] * w.dxx[i] -
                                             c.first_order[i] * w.dx[i] - c.source[i]));
        CHECK(worst <= 1e-9);
        CHECK(info.max_row_residual <= 1e-9);
    }
}

TEST_CASE("discrete maximum principle with upwind fallback") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Boundary b : {Boundary::Periodic, Boundary::LinearExtrapolation}) {
        for (int trial = 0; trial < 20; ++trial) {
            const Grid1D g{0.0, 1.0, 51, b};
            LinearPdeCoefficients c = constant_coeffs(51, 0.0, 0.0, 0.0, 0.2);
            for (int i = 0; i < 51; ++i) {
                c.second_order[i] = 0.05 + 0.2 * u(rng);
                c.first_order[i] = 30.0 * (u(rng) - 0.5); // Peclet far beyond 2
                c.source[i] = u(rng);                     // nonnegative source
            }
            PdeSolveInfo info;
            const ValueField w = solve_elliptic(c, g, &info);
            for (double v : w.values) CHECK(v >= -1e-13);
            CHECK(info.upwind_nodes > 0); // the switch fires and is logged
        }
    }
}

TEST_CASE("linearity of the solve") {
    const Grid1D g{-1.0, 1.0, 41, Boundary::LinearExtrapolation};
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    LinearPdeCoefficients c = constant_coeffs(41, 0.3, 0.8, 0.0, 1.0);
    std::vector<double> f1(41), f2(41);
    for (int i = 0; i < 41; ++i) {
        f1[i] = u(rng);
        f2[i] = u(rng);
    }
    const double alpha = 1.7, beta = -0.6;
    LinearPdeCoefficients ca = c, cb = c, cc = c;
    ca.source = f1;
    cb.source = f2;
    for (int i = 0; i < 41; ++i) cc.source[i] = alpha * f1[i] + beta * f2[i];
    const ValueField wa = solve_elliptic(ca, g), wb = solve_elliptic(cb, g),
                     wc = solve_elliptic(cc, g);
    for (int i = 0; i < 41; ++i)
        CHECK(wc.values[i] ==
              doctest::Approx(alpha * wa.values[i] + beta * wb.values[i]).epsilon(1e-12));
}

TEST_CASE("resolvent bound: sup|w| <= sup|f| / rho") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Boundary b : {Boundary::Periodic, Boundary::LinearExtrapolation}) {
        const Grid1D g{0.0, 5.0, 73, b};
        for (double rho : {0.05, 1.0, 20.0}) {
            LinearPdeCoefficients c = constant_coeffs(73, 0.0, 0.0, 0.0, rho);
            double fsup = 0.0;
            for (int i = 0; i < 73; ++i) {
                const double s = u(rng);
                c.second_order[i] = 0.2 + 0.5 * s * s;
                c.first_order[i] = 20.0 * u(rng);
                c.source[i] = u(rng);
                fsup = std::max(fsup, std::abs(c.source[i]));
            }
            const ValueField w = solve_elliptic(c, g);
            for (double v : w.values) CHECK(std::abs(v) <= fsup / rho + 1e-12);
        }
    }
}

TEST_CASE("parabolic: constants are caloric; affine-in-t source is exact") {
    const Grid1D g{-1.0, 1.0, 33, Boundary::LinearExtrapolation};
    const TimeGrid tg{1.0, 16};
    std::vector<LinearPdeCoefficients> steps(16, constant_coeffs(33, 0.4, -0.7, 0.0, 0.0));

    const auto levels0 = solve_parabolic(steps, ValueField::constant(g, 3.25), tg);
    for (const auto& lv : levels0)
        for (double v : lv.values) CHECK(v == doctest::Approx(3.25).epsilon(1e-13));

    for (auto& s : steps) s.source.assign(33, 1.0);
    const auto levels1 = solve_parabolic(steps, ValueField::constant(g, 0.0), tg);
    for (int k = 0; k <= 16; ++k) {
        const double expect = tg.t_hi - tg.level(k); // w = T - t, exact for implicit Euler
        for (double v : levels1[k].values) CHECK(v == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("parabolic heat decay on the circle") {
    const int n = 512, steps = 1000;
    const Grid1D g{0.0, 2.0 * kPi, n, Boundary::Periodic};
    const TimeGrid tg{1.0, steps};
    std::vector<LinearPdeCoefficients> cs(steps, constant_coeffs(n, 0.5, 0.0, 0.0, 0.0));
    const auto levels = solve_parabolic(
        cs, ValueField::from_function(g, [](double x) { return std::sin(x); }), tg);
    const double decay = std::exp(-0.5);
    CHECK(sup_err(levels[0], [&](double x) { return decay * std::sin(x); }) <= 1e-3);
}

TEST_CASE("parabolic rows hold on the returned caches") {
    const Grid1D g{-1.0, 1.0, 41, Boundary::LinearExtrapolation};
    const TimeGrid tg{0.5, 8};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<LinearPdeCoefficients> cs;
    for (int k = 0; k < 8; ++k) {
        LinearPdeCoefficients c = constant_coeffs(41, 0.0, 0.0, 0.0, 0.0);
        for (int i = 0; i < 41; ++i) {
            c.second_order[i] = 0.3 + 0.1 * u(rng);
            c.first_order[i] = 2.0 * u(rng);
            c.source[i] = u(rng);
        }
        cs.push_back(std::move(c));
    }
    const auto levels =
        solve_parabolic(cs, ValueField::from_function(g, [](double x) { return x * x; }), tg);
    const double dt = tg.dt();
    double worst = 0.0;
    for (int k = 0; k < 8; ++k)
        for (int i = 0; i < 41; ++i) {
            const double r = (levels[k].values[i] - levels[k + 1].values[i]) / dt -
                             cs[k].second_order[i] * levels[k].dxx[i] -
                             cs[k].first_order[i] * levels[k].dx[i] - cs[k].source[i];
            worst = std::max(worst, std::abs(r));
        }
    CHECK(worst <= 1e-9);
}

TEST_CASE("rejection paths") {
    const Grid1D g{0.0, 1.0, 11, Boundary::LinearExtrapolation};
    LinearPdeCoefficients c = constant_coeffs(11, 0.5, 0.0, 1.0, 0.0);
    CHECK_THROWS_AS(solve_elliptic(c, g), InvalidArgument); // rho must be positive
    c.discount = 1.0;
    c.second_order[3] = -0.1;
    CHECK_THROWS_AS(solve_elliptic(c, g), InvalidArgument); // ellipticity violated
    c.second_order[3] = 0.5;
    c.source[2] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(solve_elliptic(c, g), InvalidArgument);
    LinearPdeCoefficients short_c = constant_coeffs(7, 0.5, 0.0, 1.0, 1.0);
    CHECK_THROWS_AS(solve_elliptic(short_c, g), InvalidArgument);
}
