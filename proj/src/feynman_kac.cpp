#include "erc/feynman_kac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "erc/parallel.hpp"
#include "erc/rng.hpp"

namespace erc {

SdeSpec SdeSpec::brownian() {
    SdeSpec s;
    s.drift = [](double) { return 0.0; };
    s.drift_x = [](double) { return 0.0; };
    s.diffusion = [](double) { return 1.0; };
    s.diffusion_x = [](double) { return 0.0; };
    s.unit_brownian = true;
    return s;
}

SdeSpec SdeSpec::driftless(std::function<double(double)> sigma,
                           std::function<double(double)> sigma_x) {
    SdeSpec s;
    s.drift = [](double) { return 0.0; };
    s.drift_x = [](double) { return 0.0; };
    s.diffusion = std::move(sigma);
    s.diffusion_x = std::move(sigma_x);
    return s;
}

void SdeSpec::validate() const {
    ERC_REQUIRE(drift && drift_x && diffusion && diffusion_x,
                "SdeSpec: drift/diffusion and their derivatives must be set");
}

namespace {

/// Per-step view of one simulated path: values at the left endpoint t_k.
struct StepView {
    int k;
    double t;
    double x;
    double n_weight; // N_{t_k}; 0 at k = 0 where N is undefined
    double w;        // W_{t_k}
};

struct EndView {
    double x;
    double tangent;
    double n_weight;
    double w;
    bool aborted;
};

// Replays path i of the plan, invoking step(...) at every left endpoint and
// end(...) at t_max. This is the single source of truth for the dynamics:
// simulate_paths and every estimator stream through it, so the same seed
// always yields the same trajectory.
template <class StepFn>
EndView walk_path(const PathBundle& pb, long i, StepFn&& step) {
    PathRng rng(mix_seed(pb.seed, static_cast<std::uint64_t>(i)));
    const double dt = pb.dt_sim;
    const double sqdt = std::sqrt(dt);
    double x = pb.x0;
    double tangent = 1.0;
    double stoch = 0.0; // int sigma^{-1} tangent dW
    double w = 0.0;

    for (int k = 0; k < pb.n_steps; ++k) {
        const double t = k * dt;
        step(StepView{k, t, x, k >= 1 ? stoch / t : 0.0, w});

        const double dW = sqdt * rng.normal();
        const double sig = pb.sde.diffusion(x);
        stoch += tangent / sig * dW;
        const double x_new = x + pb.sde.drift(x) * dt + sig * dW;
        tangent += pb.sde.drift_x(x) * tangent * dt + pb.sde.diffusion_x(x) * tangent * dW;
        w += dW;
        x = x_new;
        if (!std::isfinite(x) || !std::isfinite(tangent))
            return EndView{x, tangent, 0.0, w, true};
    }
    return EndView{x, tangent, stoch / pb.t_max, w, false};
}

McEstimate reduce(std::vector<double>& contribs, double tail) {
    const long n = static_cast<long>(contribs.size());
    McEstimate e;
    e.n_paths = n;
    e.tail_bound = tail;
    e.mean = par::pairwise_sum(contribs) / static_cast<double>(n);
    for (double& c : contribs) {
        const double d = c - e.mean;
        c = d * d;
    }
    const double var = par::pairwise_sum(contribs) / static_cast<double>(n - 1);
    e.std_error = std::sqrt(var / static_cast<double>(n));
    return e;
}

void check_bundle(const PathBundle& pb) {
    ERC_REQUIRE(pb.n_paths >= 2, "feynman_kac: need at least 2 paths");
    if (pb.aborted > 0)
        fail_numeric("feynman_kac: " + std::to_string(pb.aborted) +
                     " paths aborted on non-finite state");
}

} // namespace

PathBundle simulate_paths(const SdeSpec& sde, double x0, double t_max, long n_paths,
                          double dt_sim, std::uint64_t seed) {
    sde.validate();
    ERC_REQUIRE(dt_sim > 0.0, "simulate_paths: dt_sim must be positive");
    ERC_REQUIRE(t_max > 0.0, "simulate_paths: t_max must be positive");
    ERC_REQUIRE(n_paths >= 1, "simulate_paths: n_paths >= 1 required");

    PathBundle pb;
    pb.sde = sde;
    pb.x0 = x0;
    pb.n_paths = n_paths;
    pb.seed = seed;
    pb.n_steps = std::max(1, static_cast<int>(std::llround(std::ceil(t_max / dt_sim - 1e-9))));
    pb.dt_sim = dt_sim;
    pb.t_max = pb.n_steps * dt_sim;

    const std::size_t n = static_cast<std::size_t>(n_paths);
    pb.x_final.resize(n);
    pb.tangent_final.resize(n);
    pb.weight_final.resize(n);
    pb.brownian_final.resize(n);
    std::vector<unsigned char> bad(n, 0);

    par::parallel_for(n, [&](std::size_t i) {
        const EndView e = walk_path(pb, static_cast<long>(i), [](const StepView&) {});
        pb.x_final[i] = e.x;
        pb.tangent_final[i] = e.tangent;
        pb.weight_final[i] = e.n_weight;
        pb.brownian_final[i] = e.w;
        bad[i] = e.aborted ? 1 : 0;
    });
    for (unsigned char b : bad) pb.aborted += b;
    return pb;
}

McEstimate mc_value(const PathBundle& bundle, const Integrand& integrand,
                    std::optional<double> discount) {
    check_bundle(bundle);
    const double dt = bundle.dt_sim;
    std::vector<double> contribs(static_cast<std::size_t>(bundle.n_paths), 0.0);
    std::vector<double> fmax(contribs.size(), 0.0);

    if (discount) {
        ERC_REQUIRE(*discount > 0.0, "mc_value: discount must be positive");
        ERC_REQUIRE(static_cast<bool>(integrand.source),
                    "mc_value: infinite horizon requires a source");
        ERC_REQUIRE(!integrand.terminal,
                    "mc_value: terminal reward has no meaning on the infinite horizon");
        const double rho = *discount;
        par::parallel_for(contribs.size(), [&](std::size_t i) {
            double acc = 0.0, fm = 0.0;
            walk_path(bundle, static_cast<long>(i), [&](const StepView& s) {
                const double f = integrand.source(s.x);
                fm = std::max(fm, std::abs(f));
                acc += std::exp(-rho * s.t) * f * dt;
            });
            contribs[i] = acc;
            fmax[i] = fm;
        });
        const double fsup = *std::max_element(fmax.begin(), fmax.end());
        return reduce(contribs, std::exp(-rho * bundle.t_max) * fsup / rho);
    }

    ERC_REQUIRE(static_cast<bool>(integrand.terminal),
                "mc_value: terminal reward required in finite-horizon mode");
    par::parallel_for(contribs.size(), [&](std::size_t i) {
        double acc = 0.0;
        const EndView e = walk_path(bundle, static_cast<long>(i), [&](const StepView& s) {
            if (integrand.source) acc += integrand.source(s.x) * dt;
        });
        contribs[i] = acc + integrand.terminal(e.x);
    });
    return reduce(contribs, 0.0);
}

McEstimate mc_gradient(const PathBundle& bundle, const Integrand& integrand,
                       std::optional<double> discount) {
    check_bundle(bundle);
    const double dt = bundle.dt_sim;
    std::vector<double> contribs(static_cast<std::size_t>(bundle.n_paths), 0.0);
    std::vector<double> fmax(contribs.size(), 0.0);

    if (discount) {
        ERC_REQUIRE(*discount > 0.0, "mc_gradient: discount must be positive");
        ERC_REQUIRE(static_cast<bool>(integrand.source),
                    "mc_gradient: infinite horizon requires a source");
        ERC_REQUIRE(!integrand.terminal,
                    "mc_gradient: terminal reward has no meaning on the infinite horizon");
        const double rho = *discount;
        par::parallel_for(contribs.size(), [&](std::size_t i) {
            double acc = 0.0, fm = 0.0;
            walk_path(bundle, static_cast<long>(i), [&](const StepView& s) {
                if (s.k == 0) return; // N_t undefined at t = 0
                const double f = integrand.source(s.x);
                fm = std::max(fm, std::abs(f));
                acc += std::exp(-rho * s.t) * f * s.n_weight * dt;
            });
            contribs[i] = acc;
            fmax[i] = fm;
        });
        const double fsup = *std::max_element(fmax.begin(), fmax.end());
        const double tail =
            std::exp(-rho * bundle.t_max) * fsup / (rho * std::sqrt(bundle.t_max));
        return reduce(contribs, tail);
    }

    ERC_REQUIRE(static_cast<bool>(integrand.terminal),
                "mc_gradient: terminal reward required in finite-horizon mode");
    par::parallel_for(contribs.size(), [&](std::size_t i) {
        double acc = 0.0;
        const EndView e = walk_path(bundle, static_cast<long>(i), [&](const StepView& s) {
            if (s.k == 0) return;
            if (integrand.source) acc += integrand.source(s.x) * s.n_weight * dt;
        });
        contribs[i] = acc + integrand.terminal(e.x) * e.n_weight;
    });
    return reduce(contribs, 0.0);
}

McEstimate mc_second_derivative_unit_sigma(const PathBundle& bundle, const Integrand& integrand,
                                           std::optional<double> discount, double delta_split) {
    check_bundle(bundle);
    ERC_REQUIRE(bundle.sde.unit_brownian,
                "mc_second_derivative_unit_sigma: requires the pure Brownian case "
                "(sigma == 1, zero drift); use grid-based differencing for v_xx otherwise");
    ERC_REQUIRE(delta_split > 0.0, "mc_second_derivative_unit_sigma: delta_split > 0 required");
    const double dt = bundle.dt_sim;
    std::vector<double> contribs(static_cast<std::size_t>(bundle.n_paths), 0.0);

    auto r_weight = [](double w, double t) { return (w * w - t) / (t * t); };

    if (discount) {
        ERC_REQUIRE(*discount > 0.0, "mc_second_derivative_unit_sigma: discount must be positive");
        ERC_REQUIRE(integrand.source && integrand.source_x,
                    "mc_second_derivative_unit_sigma: time-integrated form needs f and f'");
        ERC_REQUIRE(!integrand.terminal,
                    "mc_second_derivative_unit_sigma: no terminal on the infinite horizon");
        const double rho = *discount;
        const double delta = delta_split;
        par::parallel_for(contribs.size(), [&](std::size_t i) {
            double acc = 0.0;
            walk_path(bundle, static_cast<long>(i), [&](const StepView& s) {
                if (s.k == 0) return;
                const double disc = std::exp(-rho * s.t);
                if (s.t <= delta)
                    acc += disc * integrand.source_x(s.x) * s.n_weight * dt;
                else
                    acc += disc * integrand.source(s.x) * r_weight(s.w, s.t) * dt;
            });
            contribs[i] = acc;
        });
        return reduce(contribs, 0.0);
    }

    ERC_REQUIRE(static_cast<bool>(integrand.terminal),
                "mc_second_derivative_unit_sigma: terminal required in finite-horizon mode");
    ERC_REQUIRE(!integrand.source,
                "mc_second_derivative_unit_sigma: finite-horizon form is terminal-only");
    par::parallel_for(contribs.size(), [&](std::size_t i) {
        const EndView e = walk_path(bundle, static_cast<long>(i), [](const StepView&) {});
        contribs[i] = integrand.terminal(e.x) * r_weight(e.w, bundle.t_max);
    });
    return reduce(contribs, 0.0);
}

} // namespace erc
