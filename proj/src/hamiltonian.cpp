#include "erc/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "erc/parallel.hpp"

namespace erc {

namespace {

void check_mode_args(const ControlProblem& problem, std::optional<double> q) {
    ERC_REQUIRE(problem.temperature > 0.0, "hamiltonian: temperature must be positive");
    if (problem.mode == ControlMode::DiffusionControl1D)
        ERC_REQUIRE(q.has_value(), "hamiltonian: diffusion mode requires the q argument");
    else
        ERC_REQUIRE(!q.has_value(), "hamiltonian: q argument is diffusion-mode only");
}

// Scores s(a_k) at one point; returns the max for the log-sum-exp shift.
double scores_at(const ControlProblem& problem, const ActionQuadrature& quad, double x, double z,
                 std::optional<double> q, std::vector<double>& s) {
    const int m = quad.size();
    s.resize(static_cast<std::size_t>(m));
    const double lam = problem.temperature;
    double smax = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < m; ++k) {
        const double a = quad.nodes[k];
        double val = problem.drift(x, a) * z + problem.running_reward(x, a);
        if (q) {
            const double sig = problem.diffusion(x, a);
            val += 0.5 * sig * sig * *q;
        }
        val /= lam;
        ERC_REQUIRE(std::isfinite(val), "hamiltonian: non-finite Gibbs score");
        s[k] = val;
        smax = std::max(smax, val);
    }
    return smax;
}

struct PointEval {
    double log_partition; // ln integral of exp(s)
    double h;             // lambda * log_partition
    double h_z;
    double h_q;
};

PointEval evaluate_point(const ControlProblem& problem, const ActionQuadrature& quad, double x,
                         double z, std::optional<double> q, std::vector<double>& s,
                         double* density_row) {
    const double smax = scores_at(problem, quad, x, z, q, s);
    const int m = quad.size();

    double zed = 0.0;   // integral of exp(s - smax)
    double num_b = 0.0; // integral of b exp(s - smax)
    double num_q = 0.0; // integral of sigma^2/2 exp(s - smax)
    for (int k = 0; k < m; ++k) {
        const double e = std::exp(s[k] - smax);
        const double we = quad.weights[k] * e;
        zed += we;
        num_b += we * problem.drift(x, quad.nodes[k]);
        if (q) {
            const double sig = problem.diffusion(x, quad.nodes[k]);
            num_q += we * 0.5 * sig * sig;
        }
    }

    PointEval out;
    out.log_partition = smax + std::log(zed);
    out.h = problem.temperature * out.log_partition;
    out.h_z = num_b / zed;
    out.h_q = q ? num_q / zed : 0.0;

    if (density_row) {
        for (int k = 0; k < m; ++k) density_row[k] = std::exp(s[k] - out.log_partition);
    }
    return out;
}

} // namespace

GibbsEval gibbs_policy(const ControlProblem& problem, const ActionQuadrature& quad, double x,
                       double z, std::optional<double> q) {
    check_mode_args(problem, q);
    GibbsEval out;
    std::vector<double> s;
    out.density.resize(static_cast<std::size_t>(quad.size()));
    const PointEval pe = evaluate_point(problem, quad, x, z, q, s, out.density.data());
    out.log_weights = std::move(s);
    out.log_partition = pe.log_partition;

    // Entropy through log-densities s - logZ; avoids log of an underflowed
    // density and makes the exactly-uniform case land on ln|A| with no
    // mixed-rule error (same node set as the normalization).
    double ent = 0.0;
    for (int k = 0; k < quad.size(); ++k) {
        const double g = out.density[static_cast<std::size_t>(k)];
        if (g > 0.0) ent -= quad.weights[static_cast<std::size_t>(k)] * g *
                            (out.log_weights[static_cast<std::size_t>(k)] - out.log_partition);
    }
    out.entropy = ent;
    return out;
}

HamiltonianEval hamiltonian(const ControlProblem& problem, const ActionQuadrature& quad, double x,
                            double z, std::optional<double> q) {
    check_mode_args(problem, q);
    std::vector<double> s;
    const PointEval pe = evaluate_point(problem, quad, x, z, q, s, nullptr);
    HamiltonianEval out;
    out.h_val = pe.h;
    out.h_z = pe.h_z;
    out.h_q = pe.h_q;
    out.residual_h = pe.h - pe.h_z * z - (q ? pe.h_q * *q : 0.0);
    return out;
}

HBoundReport verify_h_bound(const ControlProblem& problem, const ActionQuadrature& quad,
                            std::span<const HBoundSample> samples, double epsilon) {
    ERC_REQUIRE(problem.mode == ControlMode::DiffusionControl1D,
                "verify_h_bound: diffusion mode only");
    ERC_REQUIRE(!samples.empty(), "verify_h_bound: empty sample");
    ERC_REQUIRE(epsilon > 0.0, "verify_h_bound: epsilon must be positive");

    const double c0 = problem.coefficient_bound;
    auto fit = [&](double eps) {
        double worst = -std::numeric_limits<double>::infinity();
        for (const auto& smp : samples) {
            const HamiltonianEval he = hamiltonian(problem, quad, smp.x, smp.z, smp.q);
            const double slack = std::abs(he.residual_h) - eps * std::abs(smp.q) - c0 * std::abs(smp.z);
            worst = std::max(worst, slack);
        }
        return worst;
    };

    HBoundReport rep;
    rep.fitted_c_eps = fit(epsilon);
    rep.fitted_c_eps_tenth = fit(epsilon / 10.0);
    rep.max_excess = std::max(0.0, rep.fitted_c_eps);
    const double base = std::max(rep.fitted_c_eps, 1e-12);
    rep.superlinear_growth = rep.fitted_c_eps_tenth > 10.0 * base;
    return rep;
}

namespace {

template <bool Parallel>
HamiltonianTable assemble_impl(const ControlProblem& problem, const ActionQuadrature& quad,
                               std::span<const double> xs, std::span<const double> zs,
                               std::span<const double> qs, bool with_density) {
    const bool diffusion = problem.mode == ControlMode::DiffusionControl1D;
    ERC_REQUIRE(xs.size() == zs.size(), "assemble_hamiltonian_table: xs/zs size mismatch");
    if (diffusion)
        ERC_REQUIRE(qs.size() == xs.size(), "assemble_hamiltonian_table: qs size mismatch");
    else
        ERC_REQUIRE(qs.empty(), "assemble_hamiltonian_table: qs given in drift mode");

    const std::size_t n = xs.size();
    const int m = quad.size();
    HamiltonianTable t;
    t.n_actions = m;
    t.h.resize(n);
    t.h_z.resize(n);
    if (diffusion) t.h_q.resize(n);
    if (with_density) t.density.resize(n * static_cast<std::size_t>(m));

    auto body = [&](std::size_t i) {
        std::vector<double> s; // per-iteration scratch, thread-private
        std::optional<double> q = diffusion ? std::optional<double>(qs[i]) : std::nullopt;
        double* row = with_density ? t.density.data() + i * static_cast<std::size_t>(m) : nullptr;
        const PointEval pe = evaluate_point(problem, quad, xs[i], zs[i], q, s, row);
        t.h[i] = pe.h;
        t.h_z[i] = pe.h_z;
        if (diffusion) t.h_q[i] = pe.h_q;
    };

    if constexpr (Parallel)
        par::parallel_for(n, body);
    else
        par::serial_for(n, body);
    return t;
}

} // namespace

HamiltonianTable assemble_hamiltonian_table(const ControlProblem& problem,
                                            const ActionQuadrature& quad,
                                            std::span<const double> xs, std::span<const double> zs,
                                            std::span<const double> qs, bool with_density) {
    return assemble_impl<true>(problem, quad, xs, zs, qs, with_density);
}

HamiltonianTable assemble_hamiltonian_table_serial(const ControlProblem& problem,
                                                   const ActionQuadrature& quad,
                                                   std::span<const double> xs,
                                                   std::span<const double> zs,
                                                   std::span<const double> qs, bool with_density) {
    return assemble_impl<false>(problem, quad, xs, zs, qs, with_density);
}

} // namespace erc
