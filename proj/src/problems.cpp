#include "erc/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "erc/pde.hpp"
#include "erc/quadrature.hpp"

namespace erc {

namespace {

constexpr double kPi = 3.141592653589793238462643383279503;

double sech(double x) { return 1.0 / std::cosh(x); }

} // namespace

ProblemSpec smooth_benchmark() {
    ProblemSpec spec;
    spec.name = "smooth_benchmark";
    spec.summary = "drift control, infinite horizon; b = a tanh(x) + 0.2 sin(x), sigma = 1";
    spec.build = [] {
        ControlProblem p;
        p.drift = [](double x, double a) { return a * std::tanh(x) + 0.2 * std::sin(x); };
        p.diffusion = [](double, double) { return 1.0; };
        p.running_reward = [](double x, double a) { return -0.5 * a * a + std::cos(x); };
        p.terminal_reward = [](double x) { return std::cos(x); };
        p.action_lo = -1.0;
        p.action_hi = 1.0;
        p.temperature = 1.0;
        p.discount = 20.0;
        p.coefficient_bound = 2.0;
        p.sigma_min = 1.0;
        p.mode = ControlMode::DriftControl;
        return p;
    };
    spec.recommended_grid = Grid1D{-2.0 * kPi, 2.0 * kPi, 385, Boundary::LinearExtrapolation};
    return spec;
}

ProblemSpec diffusion_benchmark() {
    ProblemSpec spec;
    spec.name = "diffusion_benchmark";
    spec.summary = "1D diffusion control; sigma = 1 + 0.4 sin(a) sech(x), b = a sech(x)";
    spec.build = [] {
        ControlProblem p;
        p.drift = [](double x, double a) { return a * sech(x); };
        p.diffusion = [](double x, double a) { return 1.0 + 0.4 * std::sin(a) * sech(x); };
        p.running_reward = [](double x, double a) { return -0.5 * a * a + std::cos(x); };
        p.terminal_reward = [](double x) { return std::cos(x); };
        p.action_lo = -1.0;
        p.action_hi = 1.0;
        p.temperature = 1.0;
        p.discount = 20.0;
        p.coefficient_bound = 2.0;
        p.sigma_min = 0.6;
        p.mode = ControlMode::DiffusionControl1D;
        return p;
    };
    spec.recommended_grid = Grid1D{-3.0 * kPi, 3.0 * kPi, 385, Boundary::LinearExtrapolation};
    return spec;
}

ProblemSpec counterexample_problem() {
    ProblemSpec spec;
    spec.name = "counterexample";
    spec.summary = "rho v = v_xx/2 + v_x; v = 0, Picard iteration diverges for rho < 1/2";
    spec.build = [] {
        ControlProblem p;
        p.drift = [](double, double) { return 1.0; };
        p.diffusion = [](double, double) { return 1.0; };
        p.running_reward = [](double, double) { return 0.0; };
        p.terminal_reward = [](double) { return 0.0; };
        p.action_lo = 0.0;
        p.action_hi = 1.0;
        p.temperature = 1.0;
        p.discount = 1.0;
        p.coefficient_bound = 1.0;
        p.sigma_min = 1.0;
        p.mode = ControlMode::DriftControl;
        return p;
    };
    spec.recommended_grid = Grid1D{0.0, 2.0 * kPi, 512, Boundary::Periodic};
    return spec;
}

const std::vector<ProblemSpec>& registry() {
    static const std::vector<ProblemSpec> reg = {smooth_benchmark(), diffusion_benchmark(),
                                                 counterexample_problem()};
    return reg;
}

const ProblemSpec* find_problem(std::string_view name) {
    for (const auto& p : registry())
        if (p.name == name) return &p;
    return nullptr;
}

double counterexample_oracle(double rho, int n) {
    ERC_REQUIRE(rho > 0.0, "counterexample_oracle: rho must be positive");
    ERC_REQUIRE(n >= 0, "counterexample_oracle: n >= 0 required");
    if (n % 2 == 0) return 0.0;
    const double magnitude = std::pow(rho + 0.5, -n);
    return ((n - 1) / 2) % 2 == 0 ? magnitude : -magnitude;
}

std::vector<ValueField> counterexample_picard(double rho, const Grid1D& grid, int n_iter) {
    grid.validate();
    ERC_REQUIRE(grid.boundary == Boundary::Periodic,
                "counterexample_picard: periodic grid required");
    ERC_REQUIRE(rho > 0.0, "counterexample_picard: rho must be positive");
    ERC_REQUIRE(n_iter >= 0, "counterexample_picard: n_iter >= 0 required");

    std::vector<ValueField> iterates;
    iterates.reserve(static_cast<std::size_t>(n_iter) + 1);
    iterates.push_back(
        with_derivatives(ValueField::from_function(grid, [](double x) { return -std::cos(x); })));

    LinearPdeCoefficients co;
    co.discount = rho;
    const std::size_t n = static_cast<std::size_t>(grid.n_nodes);
    co.second_order.assign(n, 0.5);
    co.first_order.assign(n, 0.0);
    co.source.assign(n, 0.0);

    for (int it = 1; it <= n_iter; ++it) {
        co.source = iterates.back().dx; // the previous slope feeds the source, not the operator
        iterates.push_back(solve_elliptic(co, grid));
    }
    return iterates;
}

namespace {

struct Extremum {
    double max_abs = 0.0;
    double min_val = std::numeric_limits<double>::infinity();
};

// Sampled sup of |phi|, |phi_x|, |phi_xx| over x-range x action nodes,
// derivatives by central differences in x.
void scan_coef(const Coef2& phi, double x_lo, double x_hi, int nx,
               const std::vector<double>& actions, Extremum& value, Extremum& d1, Extremum& d2) {
    const double fd = 1e-4;
    for (int i = 0; i <= nx; ++i) {
        const double x = x_lo + (x_hi - x_lo) * i / nx;
        for (double a : actions) {
            const double f0 = phi(x, a);
            const double fp = phi(x + fd, a);
            const double fm = phi(x - fd, a);
            value.max_abs = std::max(value.max_abs, std::abs(f0));
            value.min_val = std::min(value.min_val, f0);
            d1.max_abs = std::max(d1.max_abs, std::abs((fp - fm) / (2.0 * fd)));
            d2.max_abs = std::max(d2.max_abs, std::abs((fp - 2.0 * f0 + fm) / (fd * fd)));
        }
    }
}

double action_spread(const Coef2& phi, double x, const std::vector<double>& actions) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double a : actions) {
        const double v = phi(x, a);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

} // namespace

AuditResult audit_problem(const ProblemSpec& spec) {
    const ControlProblem p = spec.build();
    p.validate();
    const double c0 = p.coefficient_bound;
    const double x_lo = std::min(spec.recommended_grid.x_lo, -10.0);
    const double x_hi = std::max(spec.recommended_grid.x_hi, 10.0);
    const ActionQuadrature quad = ActionQuadrature::gauss_legendre(p.action_lo, p.action_hi, 64);

    AuditResult out;
    auto add = [&](const std::string& name, double observed, double bound, bool le = true) {
        const bool pass = le ? observed <= bound + 1e-9 : observed >= bound - 1e-9;
        out.checks.push_back({name, observed, bound, pass});
        out.pass = out.pass && pass;
    };

    const struct {
        const char* name;
        const Coef2* fn;
    } coefs[] = {{"drift", &p.drift}, {"diffusion", &p.diffusion}, {"reward", &p.running_reward}};
    for (const auto& c : coefs) {
        Extremum v, d1, d2;
        scan_coef(*c.fn, x_lo, x_hi, 256, quad.nodes, v, d1, d2);
        add(std::string(c.name) + "_sup", v.max_abs, c0);
        add(std::string(c.name) + "_dx_sup", d1.max_abs, c0);
        add(std::string(c.name) + "_dxx_sup", d2.max_abs, c0);
        if (c.fn == &p.diffusion) add("diffusion_min", v.min_val, p.sigma_min, false);
    }
    if (p.terminal_reward) {
        Extremum v, d1, d2;
        Coef2 g2 = [&p](double x, double) { return p.terminal_reward(x); };
        scan_coef(g2, x_lo, x_hi, 256, {0.5 * (p.action_lo + p.action_hi)}, v, d1, d2);
        add("terminal_sup", v.max_abs, c0);
        add("terminal_dx_sup", d1.max_abs, c0);
        add("terminal_dxx_sup", d2.max_abs, c0);
    }

    if (p.mode == ControlMode::DiffusionControl1D) {
        // Tail decay of the action dependence: the spread over a must vanish
        // as |x| grows.
        const double far = std::max(std::abs(x_lo), std::abs(x_hi));
        double spread_far = 0.0, spread_farther = 0.0;
        for (const Coef2* fn : {&p.drift, &p.diffusion}) {
            spread_far = std::max({spread_far, action_spread(*fn, far, quad.nodes),
                                   action_spread(*fn, -far, quad.nodes)});
            spread_farther = std::max({spread_farther, action_spread(*fn, 2.0 * far, quad.nodes),
                                       action_spread(*fn, -2.0 * far, quad.nodes)});
        }
        add("tail_action_spread", spread_far, 1e-3);
        add("tail_action_spread_decay", spread_farther, spread_far);
    }
    return out;
}

} // namespace erc
