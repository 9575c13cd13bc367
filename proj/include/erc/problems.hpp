#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "erc/model.hpp"

namespace erc {

/// One numeric audit: an observed extremum against its declared bound.
struct AuditCheck {
    std::string name;
    double observed = 0.0;
    double bound = 0.0;
    bool pass = false;
};

struct AuditResult {
    std::vector<AuditCheck> checks;
    bool pass = true;
};

/// Registry entry: a named reference problem plus its recommended
/// discretization.
struct ProblemSpec {
    std::string name;
    std::string summary;
    std::function<ControlProblem()> build;
    Grid1D recommended_grid;
    int quadrature_nodes = 32;
};

const std::vector<ProblemSpec>& registry();
const ProblemSpec* find_problem(std::string_view name);

/// Infinite-horizon drift-control benchmark with smooth bounded coefficients:
/// b(x,a) = a tanh(x) + 0.2 sin(x), sigma = 1, r(x,a) = -a^2/2 + cos(x),
/// A = [-1, 1], lambda = 1, C0 = 2, sigma_min = 1. The terminal reward cos(x)
/// is attached for finite-horizon runs.
ProblemSpec smooth_benchmark();

/// Scalar diffusion-control benchmark: sigma(x,a) = 1 + 0.4 sin(a) sech(x),
/// b(x,a) = a sech(x), r(x,a) = -a^2/2 + cos(x); sigma_min = 0.6. The action
/// dependence of b and sigma decays as |x| grows (a-independent limits).
ProblemSpec diffusion_benchmark();

/// The linear problem rho v = v_xx/2 + v_x (b = 1, sigma = 1, r = 0 with
/// A = [0,1], lambda = 1): its unique bounded solution is v = 0, yet Picard
/// iteration on the first-order term diverges for rho < 1/2.
ProblemSpec counterexample_problem();

/// Closed form for the Picard iterates' slope at the origin:
/// 0 for even n, (-1)^((n-1)/2) (rho + 1/2)^(-n) for odd n.
double counterexample_oracle(double rho, int n);

/// Picard iteration rho v^n = v_xx^n / 2 + v_x^{n-1} with v^0 = -cos(x) on a
/// periodic grid (the iterated coefficient sits in the source; this is not
/// the PIA). Returns v^0..v^{n_iter}.
std::vector<ValueField> counterexample_picard(double rho, const Grid1D& grid, int n_iter);

/// Numeric audit of the declared coefficient bounds (and, in diffusion mode,
/// of the decay of the action dependence).
AuditResult audit_problem(const ProblemSpec& spec);

} // namespace erc
