#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "erc/common.hpp"

namespace erc {

/// Scalar SDE dX = b(X) dt + sigma(X) dW with the derivatives needed by the
/// tangent process. The PIA validation path uses the driftless dynamics of
/// the probabilistic representation (the drift's effect lives in the source
/// term), but general drift is supported for the module's own sanity checks.
struct SdeSpec {
    std::function<double(double)> drift;
    std::function<double(double)> drift_x;
    std::function<double(double)> diffusion;
    std::function<double(double)> diffusion_x;
    bool unit_brownian = false; // b == 0 and sigma == 1; enables the R-weight

    static SdeSpec brownian(); // dX = dW
    static SdeSpec driftless(std::function<double(double)> sigma,
                             std::function<double(double)> sigma_x);
    void validate() const;
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long n_paths = 0;
    double tail_bound = 0.0; // truncation tail added to the error budget
};

/// Simulation plan plus per-path terminal summaries. Full trajectories are
/// not stored: estimators replay the exact same paths from the per-path seed
/// recipe, so all intermediate states (and the Brownian increments behind
/// the weights) are available deterministically at O(n_paths) memory.
struct PathBundle {
    SdeSpec sde;
    double x0 = 0.0;
    double t_max = 1.0;
    double dt_sim = 0.01;
    long n_paths = 0;
    std::uint64_t seed = 0;
    int n_steps = 0;

    std::vector<double> x_final;       // X_T per path
    std::vector<double> tangent_final; // dX_T/dx0 per path
    std::vector<double> weight_final;  // N_T = (1/T) int sigma^{-1} tangent dW
    std::vector<double> brownian_final; // W_T
    long aborted = 0;
};

/// Euler-Maruyama for X and its tangent, with the weight accumulated from
/// left-point integrands. Deterministic given the seed, for any worker count.
PathBundle simulate_paths(const SdeSpec& sde, double x0, double t_max, long n_paths,
                          double dt_sim, std::uint64_t seed);

/// Integrand specification shared by the estimators. source is f(x) for the
/// running term; source_x is its derivative (required only by the delta-split
/// part of the second-derivative estimator); terminal is g(x).
struct Integrand {
    std::function<double(double)> source;
    std::function<double(double)> source_x;
    std::function<double(double)> terminal;
};

/// E[ int e^{-rho t} f(X_t) dt ] (discount set; truncated at t_max with the
/// tail bound e^{-rho t_max} sup|f| / rho reported) or
/// E[ g(X_T) + int f(X_t) dt ] (discount unset; terminal required).
/// Left-Riemann time quadrature on the simulation steps.
McEstimate mc_value(const PathBundle& bundle, const Integrand& integrand,
                    std::optional<double> discount);

/// Same integrals weighted by N_t (terminal term by N_T): the
/// Bismut-Elworthy-Li representation of the spatial derivative at x0.
McEstimate mc_gradient(const PathBundle& bundle, const Integrand& integrand,
                       std::optional<double> discount);

/// Second spatial derivative for the pure-Brownian case via the weight
/// R_t = (W_t^2 - t)/t^2. Time-integrated sources use first-order weights on
/// (0, delta_split] and the R-weight beyond, mirroring the non-integrable
/// 1/t behavior of R near 0. Rejects any bundle that is not unit Brownian
/// (use grid differencing for v_xx in that case).
McEstimate mc_second_derivative_unit_sigma(const PathBundle& bundle, const Integrand& integrand,
                                           std::optional<double> discount,
                                           double delta_split = 0.1);

} // namespace erc
