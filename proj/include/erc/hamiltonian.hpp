#pragma once

#include <optional>
#include <span>
#include <vector>

#include "erc/model.hpp"
#include "erc/quadrature.hpp"

namespace erc {

/// Gibbs policy at one (x, z[, q]) point, evaluated on the quadrature nodes.
/// log_weights holds the raw scores s(a) = [b z + r]/lambda (plus
/// sigma^2 q / (2 lambda) in diffusion mode); log_partition is
/// ln of the quadrature integral of exp(s), computed by max-shifted
/// log-sum-exp. The raw exponential exp(s) is never formed: for small
/// temperatures it overflows long before the policy itself degenerates.
struct GibbsEval {
    std::vector<double> log_weights;
    double log_partition = 0.0;
    std::vector<double> density; // Gamma at the quadrature nodes
    double entropy = 0.0;        // -integral of Gamma ln Gamma
};

/// Hamiltonian value and partial derivatives at one (x, z[, q]) point.
/// h_z and h_q are Gibbs-weighted quadrature averages of b and sigma^2/2
/// (the exact derivatives of the quadrature Hamiltonian); residual_h is the
/// affine remainder h = H - H_z z - H_q q (diffusion mode).
struct HamiltonianEval {
    double h_val = 0.0;
    double h_z = 0.0;
    double h_q = 0.0;
    double residual_h = 0.0;
};

GibbsEval gibbs_policy(const ControlProblem& problem, const ActionQuadrature& quad, double x,
                       double z, std::optional<double> q = std::nullopt);

HamiltonianEval hamiltonian(const ControlProblem& problem, const ActionQuadrature& quad, double x,
                            double z, std::optional<double> q = std::nullopt);

/// One (x, z, q) sample for verify_h_bound.
struct HBoundSample {
    double x = 0.0;
    double z = 0.0;
    double q = 0.0;
};

/// Empirical check of the growth bound |h| <= eps |q| + C0 |z| + C_eps.
/// fitted_c_eps is the smallest constant closing the bound on the sample;
/// max_excess is how far |h| exceeds eps|q| + C0|z| (0 when it never does).
/// superlinear_growth flags fitted_c_eps growing by more than 10x when eps
/// shrinks by 10x.
struct HBoundReport {
    double fitted_c_eps = 0.0;
    double fitted_c_eps_tenth = 0.0; // refit at eps/10
    double max_excess = 0.0;
    bool superlinear_growth = false;
};

HBoundReport verify_h_bound(const ControlProblem& problem, const ActionQuadrature& quad,
                            std::span<const HBoundSample> samples, double epsilon);

/// Hamiltonian terms evaluated at every node of a spatial sweep; the per-node
/// work is embarrassingly parallel. `density` (optional) holds the Gibbs
/// density row-major [node][action]. The OpenMP variant writes only to
/// per-node slots, so it is bit-identical to the serial reference.
struct HamiltonianTable {
    std::vector<double> h;
    std::vector<double> h_z;
    std::vector<double> h_q;     // empty in drift mode
    std::vector<double> density; // empty unless requested
    int n_actions = 0;
};

HamiltonianTable assemble_hamiltonian_table(const ControlProblem& problem,
                                            const ActionQuadrature& quad,
                                            std::span<const double> xs, std::span<const double> zs,
                                            std::span<const double> qs, bool with_density);

/// Serial reference implementation of the same kernel.
HamiltonianTable assemble_hamiltonian_table_serial(const ControlProblem& problem,
                                                   const ActionQuadrature& quad,
                                                   std::span<const double> xs,
                                                   std::span<const double> zs,
                                                   std::span<const double> qs, bool with_density);

} // namespace erc
