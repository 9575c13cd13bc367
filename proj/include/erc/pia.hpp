#pragma once

#include <optional>
#include <span>
#include <vector>

#include "erc/hamiltonian.hpp"
#include "erc/model.hpp"
#include "erc/pde.hpp"
#include "erc/quadrature.hpp"

namespace erc {

struct PiaConfig {
    int max_iter = 200;
    double stop_tol = 1e-10;      // on the discrete ||v^n - v^{n-1}||_2
    double reference_tol = 1e-12; // tighter tolerance for the ground-truth run
    bool record_policies = false;
    bool record_values = true;
    // Break out early once the delta stops improving (10 iterations without a
    // 10% gain on the best seen). The reference run sets this so a stop_tol
    // below the round-off floor fails in seconds, not at 10*max_iter.
    bool stop_on_stall = false;

    void validate() const;
};

/// Relaxed control on grid x action nodes, stored as normalized Gibbs
/// log-weights: log pi = score - log-partition. Finite-horizon policies
/// stack one block per time level.
struct PolicyField {
    int n_levels = 1;
    int n_nodes = 0;
    int n_actions = 0;
    std::vector<double> log_density; // [level][node][action], row-major

    double at(int level, int node, int action) const {
        return log_density[(static_cast<std::size_t>(level) * n_nodes + node) * n_actions +
                           action];
    }
};

enum class RateClass { SuperExponential, Exponential, Stalled, Divergent };

struct RateFit {
    RateClass classification = RateClass::Stalled;
    std::optional<double> eta; // present iff Super/Exponential
    double floor = 0.0;        // resolution floor where the decrease stops
    double double_log_slope = 0.0;
    double r_squared = 0.0;
    int pre_floor_count = 0;
};

/// Classify an error sequence. Entries must be positive; the sequence is
/// trimmed at the first stall or at the noise floor, then tested for
/// super-exponential decrease (strictly decreasing ratios plus a
/// double-log slope near ln 2), exponential decrease (log-linear fit), or
/// divergence (>= 10% growth over a 3-step window above the floor).
RateFit fit_rate(std::span<const double> eps);

/// Same, with explicit iteration indices (the default is 0,1,2,...).
RateFit fit_rate(std::span<const double> eps, std::span<const double> index);

const char* to_string(RateClass c);

struct IterationRecord {
    int n = 0;
    // vs the reference run (NaN when no reference is available)
    double eps0 = 0.0, eps1 = 0.0, eps2 = 0.0;
    // vs the previous iterate
    double delta0 = 0.0, delta1 = 0.0, delta2 = 0.0;
    double policy_delta = 0.0;           // sup |pi^n - pi^{n-1}| over grid x actions
    double policy_err = 0.0;             // sup |pi^n - pi_ref|
    double monotonicity_violation = 0.0; // min over nodes of v^n - v^{n-1}
    double bound_violation = 0.0;        // max over nodes of v^n minus the a-priori bound
    double residual = 0.0;               // max row residual of the solved linear system
    double vxx_identity_residual = 0.0;  // diffusion mode: explicit v_xx consistency
    int upwind_nodes = 0;
    double seconds = 0.0;
};

struct IterationReport {
    std::vector<IterationRecord> iters;
    bool has_reference = false;
    DiscreteNorms initial_eps; // distance of the Step-0 iterate to the reference
    RateFit rate_eps1;
    RateFit rate_eps2;
    double apriori_upper_bound = 0.0; // infinite horizon: the constant bound
    int total_upwind_nodes = 0;

    /// eps1 sequence fed to the rate fit: initial_eps.c1 followed by the
    /// per-iteration values, truncated to positive entries.
    std::vector<double> eps1_sequence() const;
    std::vector<double> eps2_sequence() const;
};

struct PiaResult {
    // Infinite-horizon iterates v^0..v^N (when record_values is set).
    std::vector<ValueField> values;
    // Finite-horizon iterates: [iterate][time level].
    std::vector<std::vector<ValueField>> values_t;
    // Policies pi^1..pi^N (when record_policies is set).
    std::vector<PolicyField> policies;
    ValueField final_value;                // infinite horizon
    std::vector<ValueField> final_value_t; // finite horizon
    IterationReport report;
};

/// Finite-horizon drift-control PIA (parabolic policy-evaluation solves).
PiaResult pia_finite_horizon(const ControlProblem& problem, const Grid1D& grid,
                             const TimeGrid& tgrid, const ActionQuadrature& quad,
                             const PiaConfig& config,
                             const std::vector<ValueField>* reference = nullptr);

/// Infinite-horizon drift-control PIA (elliptic solves).
PiaResult pia_infinite_horizon(const ControlProblem& problem, const Grid1D& grid,
                               const ActionQuadrature& quad, const PiaConfig& config,
                               const ValueField* reference = nullptr);

/// Infinite-horizon scalar diffusion-control PIA: coefficients H_q, H_z and
/// the affine remainder h are frozen from the previous iterate.
PiaResult pia_diffusion_1d(const ControlProblem& problem, const Grid1D& grid,
                           const ActionQuadrature& quad, const PiaConfig& config,
                           const ValueField* reference = nullptr);

struct ReferenceSolution {
    ValueField value;                 // infinite horizon
    std::vector<ValueField> value_t;  // finite horizon
    double hjb_residual = 0.0;        // discrete fixed-point residual
    int iterations = 0;
    std::vector<double> delta_history;
};

/// Ground truth for the report's eps columns: the same discrete iteration
/// continued to reference_tol. The discrete HJB residual of the returned
/// iterate must come out <= 100 * reference_tol, or this throws. On
/// non-convergence within 10*max_iter the error carries the delta history.
ReferenceSolution reference_solution(const ControlProblem& problem, const Grid1D& grid,
                                     const std::optional<TimeGrid>& tgrid,
                                     const ActionQuadrature& quad, const PiaConfig& config);

/// Gibbs policy of a value iterate (log-densities over grid x action nodes),
/// from the field's cached derivatives. Recomputing this on a stored iterate
/// reproduces the recorded policy bit-exactly.
PolicyField policy_from_field(const ControlProblem& problem, const ActionQuadrature& quad,
                              const ValueField& field);

} // namespace erc
