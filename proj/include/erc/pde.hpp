#pragma once

#include <span>
#include <vector>

#include "erc/model.hpp"

namespace erc {

/// Frozen-coefficient linear operator on a grid: per-node arrays for the
/// w_xx coefficient (>= 0), the w_x coefficient, and the additive source,
/// plus the discount rho (0 in parabolic stepping, where d/dt carries the
/// evolution).
struct LinearPdeCoefficients {
    std::vector<double> second_order;
    std::vector<double> first_order;
    std::vector<double> source;
    double discount = 0.0;
};

/// Per-node stencil choice made during row assembly. Central first
/// differences switch to one-sided upwinding when the cell Peclet number
/// |c1| h / c2 exceeds 2, restoring the M-matrix property; the switch is
/// counted in PdeSolveInfo. On truncated (non-periodic) grids the boundary
/// rows close the stencil with a reflective ghost, i.e. a vanishing slope at
/// the edge; this keeps the diffusion term in the row, so the system stays
/// an M-matrix for any drift and any positive discount.
enum class NodeStencil : unsigned char {
    Central,
    UpwindForward,
    UpwindBackward,
    BoundaryLeft,
    BoundaryRight,
};

struct PdeSolveInfo {
    int upwind_nodes = 0;
    double max_row_residual = 0.0; // max |(A w - rhs)_i| of the solved system
};

/// The discrete operator a solve actually used: grid plus per-node stencils.
/// apply_derivatives reproduces the row-consistent first/second differences,
/// so fixed-point residuals can be evaluated against the exact discrete
/// operator rather than a nearby one.
struct DiscreteOperator {
    Grid1D grid;
    std::vector<NodeStencil> stencil;

    void apply_derivatives(std::span<const double> w, std::span<double> dx,
                           std::span<double> dxx) const;
};

/// Solve rho w = c2 w_xx + c1 w_x + f on the grid (second-order central
/// scheme, upwind fallback per node, Thomas / cyclic-Thomas). The returned
/// field's dx/dxx caches hold the row-consistent derivatives, so
/// rho*values = c2*dxx + c1*dx + f holds to round-off at every node.
ValueField solve_elliptic(const LinearPdeCoefficients& coeffs, const Grid1D& grid,
                          PdeSolveInfo* info = nullptr, DiscreteOperator* op_out = nullptr);

/// Backward implicit-Euler march for w_t + c2 w_xx + c1 w_x + f = 0 with
/// terminal data w(T, .). coeffs_per_step[k] holds the coefficients at time
/// level k (the level being solved); fully implicit, one tridiagonal solve
/// per step, unconditionally stable. Returns levels 0..n_steps, each with
/// row-consistent derivative caches (the terminal level gets the plain
/// central/boundary stencils).
std::vector<ValueField> solve_parabolic(std::span<const LinearPdeCoefficients> coeffs_per_step,
                                        const ValueField& terminal, const TimeGrid& tgrid,
                                        PdeSolveInfo* info = nullptr);

} // namespace erc
