#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "erc/common.hpp"

namespace erc {

enum class ControlMode { DriftControl, DiffusionControl1D };
enum class Boundary { Periodic, LinearExtrapolation };

/// Coefficient of (state, action).
using Coef2 = std::function<double(double x, double a)>;
/// Coefficient of state only.
using Coef1 = std::function<double(double x)>;

/// The control problem: drift b(x,a), diffusion sigma(x,a), running reward
/// r(x,a), terminal reward g(x), action interval A, temperature lambda, and
/// either a horizon T or a discount rho. coefficient_bound is the declared
/// sup bound C0 for the coefficients and their first two derivatives;
/// sigma_min the declared nondegeneracy floor. Both are inputs, not inferred:
/// coefficients arrive as opaque handles.
struct ControlProblem {
    Coef2 drift;
    Coef2 diffusion;        // ignores the action in drift-control mode
    Coef2 running_reward;
    Coef1 terminal_reward;  // finite horizon only
    double action_lo = 0.0;
    double action_hi = 1.0;
    double temperature = 1.0;
    std::optional<double> horizon;   // T
    std::optional<double> discount;  // rho
    double coefficient_bound = 1.0;  // C0
    double sigma_min = 1.0;
    ControlMode mode = ControlMode::DriftControl;

    double action_width() const { return action_hi - action_lo; }
    bool finite_horizon() const { return horizon.has_value(); }

    /// lambda * (ln|A|)^+
    double entropy_cap() const {
        const double l = std::log(action_width());
        return temperature * (l > 0.0 ? l : 0.0);
    }

    void validate() const;
};

/// Uniform 1D grid. LinearExtrapolation grids span [x_lo, x_hi] inclusive
/// with spacing (x_hi - x_lo)/(n_nodes - 1). Periodic grids hold n_nodes
/// distinct points with spacing (x_hi - x_lo)/n_nodes; x_hi is identified
/// with x_lo so index arithmetic wraps cleanly and central differences stay
/// second order across the seam.
struct Grid1D {
    double x_lo = 0.0;
    double x_hi = 1.0;
    int n_nodes = 3;
    Boundary boundary = Boundary::LinearExtrapolation;

    double spacing() const {
        return boundary == Boundary::Periodic ? (x_hi - x_lo) / n_nodes
                                              : (x_hi - x_lo) / (n_nodes - 1);
    }
    double node(int i) const { return x_lo + spacing() * i; }
    std::vector<double> nodes() const;
    void validate() const;
    bool operator==(const Grid1D&) const = default;
};

/// Uniform time grid on [0, T].
struct TimeGrid {
    double t_hi = 1.0;
    int n_steps = 1;

    double dt() const { return t_hi / n_steps; }
    double level(int k) const { return dt() * k; }
    void validate() const;
};

/// Discrete analogs of the sup norms of a function and its first two
/// derivatives.
struct DiscreteNorms {
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double total() const { return c0 + c1 + c2; }
};

/// Values on a grid plus cached first/second finite differences. Two stencil
/// families fill dx/dxx:
///  - finite_difference_derivatives(): the module's reference stencils
///    (central interior; one-sided second-order dx and zero dxx at
///    LinearExtrapolation ends; cyclic wrap on periodic grids);
///  - the PDE solver fills them with its own row stencils so that the solved
///    equation holds exactly on the cached arrays (see pde.hpp).
struct ValueField {
    Grid1D grid;
    std::vector<double> values;
    std::vector<double> dx;
    std::vector<double> dxx;

    static ValueField constant(const Grid1D& g, double c);
    static ValueField from_function(const Grid1D& g, const std::function<double(double)>& f);
    bool has_derivatives() const {
        return dx.size() == values.size() && dxx.size() == values.size();
    }
};

/// Fill the cached dx/dxx from values with the reference stencils.
/// Deterministic and idempotent; rejects non-finite values.
void finite_difference_derivatives(ValueField& field);

/// Value-returning convenience.
ValueField with_derivatives(ValueField field);

/// Componentwise sup of |a-b|, |a_x-b_x|, |a_xx-b_xx| over nodes, with the
/// derivatives recomputed from values under the reference stencils (so the
/// result does not depend on which cache the fields happen to carry).
DiscreteNorms norms(const ValueField& a, const ValueField& b);

/// Linear interpolation of per-node data at x, extrapolating linearly beyond
/// the ends (periodic grids wrap).
double interpolate(const Grid1D& grid, const std::vector<double>& node_values, double x);

} // namespace erc
