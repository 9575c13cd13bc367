#include "erc/model.hpp"

#include <algorithm>
#include <cmath>

namespace erc {

void ControlProblem::validate() const {
    ERC_REQUIRE(static_cast<bool>(drift), "ControlProblem: drift not set");
    ERC_REQUIRE(static_cast<bool>(diffusion), "ControlProblem: diffusion not set");
    ERC_REQUIRE(static_cast<bool>(running_reward), "ControlProblem: running_reward not set");
    ERC_REQUIRE(action_lo < action_hi, "ControlProblem: action_lo < action_hi required");
    ERC_REQUIRE(temperature > 0.0, "ControlProblem: temperature must be positive");
    ERC_REQUIRE(horizon.has_value() != discount.has_value(),
                "ControlProblem: exactly one of horizon/discount must be set");
    if (horizon) ERC_REQUIRE(*horizon > 0.0, "ControlProblem: horizon must be positive");
    if (discount) ERC_REQUIRE(*discount > 0.0, "ControlProblem: discount must be positive");
    if (horizon)
        ERC_REQUIRE(static_cast<bool>(terminal_reward),
                    "ControlProblem: finite horizon requires terminal_reward");
    ERC_REQUIRE(coefficient_bound > 0.0, "ControlProblem: coefficient_bound must be positive");
    ERC_REQUIRE(sigma_min > 0.0, "ControlProblem: sigma_min must be positive");
    if (mode == ControlMode::DiffusionControl1D)
        ERC_REQUIRE(!horizon.has_value(), "ControlProblem: diffusion control is infinite-horizon");
}

std::vector<double> Grid1D::nodes() const {
    std::vector<double> xs(n_nodes);
    for (int i = 0; i < n_nodes; ++i) xs[i] = node(i);
    return xs;
}

void Grid1D::validate() const {
    ERC_REQUIRE(n_nodes >= 3, "Grid1D: n_nodes >= 3 required");
    ERC_REQUIRE(x_lo < x_hi, "Grid1D: x_lo < x_hi required");
    ERC_REQUIRE(std::isfinite(x_lo) && std::isfinite(x_hi), "Grid1D: bounds must be finite");
}

void TimeGrid::validate() const {
    ERC_REQUIRE(n_steps >= 1, "TimeGrid: n_steps >= 1 required");
    ERC_REQUIRE(t_hi > 0.0, "TimeGrid: t_hi > 0 required");
}

ValueField ValueField::constant(const Grid1D& g, double c) {
    g.validate();
    ValueField f;
    f.grid = g;
    f.values.assign(static_cast<std::size_t>(g.n_nodes), c);
    f.dx.assign(f.values.size(), 0.0);
    f.dxx.assign(f.values.size(), 0.0);
    return f;
}

ValueField ValueField::from_function(const Grid1D& g, const std::function<double(double)>& fn) {
    g.validate();
    ValueField f;
    f.grid = g;
    f.values.resize(static_cast<std::size_t>(g.n_nodes));
    for (int i = 0; i < g.n_nodes; ++i) f.values[static_cast<std::size_t>(i)] = fn(g.node(i));
    return f;
}

void finite_difference_derivatives(ValueField& field) {
    field.grid.validate();
    const int n = field.grid.n_nodes;
    ERC_REQUIRE(static_cast<int>(field.values.size()) == n,
                "finite_difference_derivatives: values size does not match grid");
    for (double v : field.values)
        ERC_REQUIRE(std::isfinite(v), "finite_difference_derivatives: non-finite value");

    const double h = field.grid.spacing();
    const auto& v = field.values;
    field.dx.assign(v.size(), 0.0);
    field.dxx.assign(v.size(), 0.0);

    if (field.grid.boundary == Boundary::Periodic) {
        for (int i = 0; i < n; ++i) {
            const int l = (i - 1 + n) % n;
            const int r = (i + 1) % n;
            field.dx[i] = (v[r] - v[l]) / (2.0 * h);
            field.dxx[i] = (v[r] - 2.0 * v[i] + v[l]) / (h * h);
        }
        return;
    }

    for (int i = 1; i + 1 < n; ++i) {
        field.dx[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
        field.dxx[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
    }
    // Linear-extrapolation closure: zero curvature at the ends, one-sided
    // second-order slope.
    field.dx[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    field.dx[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    field.dxx[0] = 0.0;
    field.dxx[n - 1] = 0.0;
}

ValueField with_derivatives(ValueField field) {
    finite_difference_derivatives(field);
    return field;
}

DiscreteNorms norms(const ValueField& a, const ValueField& b) {
    ERC_REQUIRE(a.grid == b.grid, "norms: fields live on different grids");
    ValueField da = a;
    ValueField db = b;
    finite_difference_derivatives(da);
    finite_difference_derivatives(db);

    DiscreteNorms out;
    for (std::size_t i = 0; i < da.values.size(); ++i) {
        out.c0 = std::max(out.c0, std::abs(da.values[i] - db.values[i]));
        out.c1 = std::max(out.c1, std::abs(da.dx[i] - db.dx[i]));
        out.c2 = std::max(out.c2, std::abs(da.dxx[i] - db.dxx[i]));
    }
    return out;
}

double interpolate(const Grid1D& grid, const std::vector<double>& node_values, double x) {
    ERC_REQUIRE(static_cast<int>(node_values.size()) == grid.n_nodes,
                "interpolate: value array does not match grid");
    const int n = grid.n_nodes;
    const double h = grid.spacing();

    if (grid.boundary == Boundary::Periodic) {
        const double period = grid.x_hi - grid.x_lo;
        double u = std::fmod(x - grid.x_lo, period);
        if (u < 0.0) u += period;
        const int i = std::min(static_cast<int>(u / h), n - 1);
        const int r = (i + 1) % n;
        const double w = (u - i * h) / h;
        return (1.0 - w) * node_values[i] + w * node_values[r];
    }

    const double u = (x - grid.x_lo) / h;
    int i = static_cast<int>(std::floor(u));
    i = std::clamp(i, 0, n - 2); // clamping the cell gives linear extrapolation outside
    const double w = u - i;
    return (1.0 - w) * node_values[i] + w * node_values[i + 1];
}

} // namespace erc
