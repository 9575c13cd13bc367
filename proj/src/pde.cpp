#include "erc/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace erc {

namespace {

struct Rows {
    std::vector<double> sub, diag, sup; // tridiagonal bands; corners via wrap on periodic grids
    std::vector<NodeStencil> stencil;
    int upwind_nodes = 0;
};

void check_coeffs(const LinearPdeCoefficients& c, const Grid1D& grid) {
    grid.validate();
    const std::size_t n = static_cast<std::size_t>(grid.n_nodes);
    ERC_REQUIRE(c.second_order.size() == n && c.first_order.size() == n && c.source.size() == n,
                "pde: coefficient arrays do not match the grid");
    for (std::size_t i = 0; i < n; ++i) {
        ERC_REQUIRE(std::isfinite(c.second_order[i]) && std::isfinite(c.first_order[i]) &&
                        std::isfinite(c.source[i]),
                    "pde: non-finite coefficient");
        ERC_REQUIRE(c.second_order[i] >= 0.0, "pde: negative second-order coefficient");
    }
}

// Assemble rows of (rho_eff I - c2 D2 - c1 D1) w = rhs.
Rows assemble_rows(const LinearPdeCoefficients& c, const Grid1D& grid, double rho_eff) {
    const int n = grid.n_nodes;
    const double h = grid.spacing();
    const double h2 = h * h;
    Rows r;
    r.sub.assign(static_cast<std::size_t>(n), 0.0);
    r.diag.assign(static_cast<std::size_t>(n), 0.0);
    r.sup.assign(static_cast<std::size_t>(n), 0.0);
    r.stencil.assign(static_cast<std::size_t>(n), NodeStencil::Central);

    const bool periodic = grid.boundary == Boundary::Periodic;
    const int lo = periodic ? 0 : 1;
    const int hi = periodic ? n : n - 1;

    for (int i = lo; i < hi; ++i) {
        const double c2 = c.second_order[i];
        const double c1 = c.first_order[i];
        double sub = -c2 / h2;
        double diag = rho_eff + 2.0 * c2 / h2;
        double sup = -c2 / h2;
        if (std::abs(c1) * h <= 2.0 * c2) {
            sub += c1 / (2.0 * h);
            sup += -c1 / (2.0 * h);
        } else if (c1 > 0.0) {
            diag += c1 / h;
            sup += -c1 / h;
            r.stencil[i] = NodeStencil::UpwindForward;
            ++r.upwind_nodes;
        } else {
            diag += -c1 / h;
            sub += c1 / h;
            r.stencil[i] = NodeStencil::UpwindBackward;
            ++r.upwind_nodes;
        }
        r.sub[i] = sub;
        r.diag[i] = diag;
        r.sup[i] = sup;
    }

    if (!periodic) {
        // Truncation closure: reflective ghost (zero slope at the edge). The
        // diffusion term stays in the boundary row, which keeps the system an
        // M-matrix for any drift and any discount; a zero-curvature ghost
        // instead deletes the elliptic term from the row and develops O(1/rho)
        // boundary spikes once the discount is small.
        const double c2l = c.second_order[0];
        r.diag[0] = rho_eff + 2.0 * c2l / h2;
        r.sup[0] = -2.0 * c2l / h2;
        r.stencil[0] = NodeStencil::BoundaryLeft;

        const double c2r = c.second_order[n - 1];
        r.diag[n - 1] = rho_eff + 2.0 * c2r / h2;
        r.sub[n - 1] = -2.0 * c2r / h2;
        r.stencil[n - 1] = NodeStencil::BoundaryRight;
    }
    return r;
}

// Thomas algorithm; no pivoting (rows are assembled diagonally dominant in
// the monotone regime).
void solve_tridiagonal(const Rows& r, std::span<const double> rhs, std::span<double> w) {
    const std::size_t n = rhs.size();
    std::vector<double> cp(n), dp(n);
    double piv = r.diag[0];
    ERC_REQUIRE(std::abs(piv) > 1e-300, "pde: singular system (zero pivot)");
    cp[0] = r.sup[0] / piv;
    dp[0] = rhs[0] / piv;
    for (std::size_t i = 1; i < n; ++i) {
        piv = r.diag[i] - r.sub[i] * cp[i - 1];
        if (!(std::abs(piv) > 1e-300) || !std::isfinite(piv))
            fail_numeric("pde: singular or ill-conditioned tridiagonal system (pivot at node " +
                         std::to_string(i) + "); check ellipticity and discount > 0");
        cp[i] = r.sup[i] / piv;
        dp[i] = (rhs[i] - r.sub[i] * dp[i - 1]) / piv;
    }
    w[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) w[i] = dp[i] - cp[i] * w[i + 1];
}

// Cyclic tridiagonal via the Sherman-Morrison rank-one correction.
void solve_cyclic(const Rows& r, std::span<const double> rhs, std::span<double> w) {
    const std::size_t n = rhs.size();
    ERC_REQUIRE(n >= 3, "pde: cyclic solve needs at least 3 nodes");
    const double corner_low = r.sub[0];      // couples w[0] to w[n-1]
    const double corner_high = r.sup[n - 1]; // couples w[n-1] to w[0]

    Rows rr = r;
    const double gamma = -r.diag[0];
    rr.diag[0] = r.diag[0] - gamma;
    rr.diag[n - 1] = r.diag[n - 1] - corner_low * corner_high / gamma;
    rr.sub[0] = 0.0;
    rr.sup[n - 1] = 0.0;

    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = corner_high;

    std::vector<double> y(n), q(n);
    solve_tridiagonal(rr, rhs, y);
    solve_tridiagonal(rr, u, q);

    const double vy = y[0] + corner_low / gamma * y[n - 1];
    const double vq = q[0] + corner_low / gamma * q[n - 1];
    const double denom = 1.0 + vq;
    if (!(std::abs(denom) > 1e-300) || !std::isfinite(denom))
        fail_numeric("pde: singular cyclic system");
    const double factor = vy / denom;
    for (std::size_t i = 0; i < n; ++i) w[i] = y[i] - factor * q[i];
}

double row_residual(const Rows& r, const Grid1D& grid, std::span<const double> rhs,
                    std::span<const double> w) {
    const int n = grid.n_nodes;
    const bool periodic = grid.boundary == Boundary::Periodic;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const int l = periodic ? (i - 1 + n) % n : i - 1;
        const int k = periodic ? (i + 1) % n : i + 1;
        double v = r.diag[i] * w[i] - rhs[i];
        if (l >= 0) v += r.sub[i] * w[l];
        if (k < n || periodic) v += r.sup[i] * w[periodic ? k : std::min(k, n - 1)];
        worst = std::max(worst, std::abs(v));
    }
    return worst;
}

void solve_rows(const Rows& r, const Grid1D& grid, std::span<const double> rhs,
                std::span<double> w) {
    if (grid.boundary == Boundary::Periodic)
        solve_cyclic(r, rhs, w);
    else
        solve_tridiagonal(r, rhs, w);
}

} // namespace

void DiscreteOperator::apply_derivatives(std::span<const double> w, std::span<double> dx,
                                         std::span<double> dxx) const {
    const int n = grid.n_nodes;
    const double h = grid.spacing();
    const bool periodic = grid.boundary == Boundary::Periodic;
    for (int i = 0; i < n; ++i) {
        const int l = periodic ? (i - 1 + n) % n : std::max(i - 1, 0);
        const int r = periodic ? (i + 1) % n : std::min(i + 1, n - 1);
        switch (stencil[i]) {
        case NodeStencil::Central:
            dx[i] = (w[r] - w[l]) / (2.0 * h);
            dxx[i] = (w[r] - 2.0 * w[i] + w[l]) / (h * h);
            break;
        case NodeStencil::UpwindForward:
            dx[i] = (w[r] - w[i]) / h;
            dxx[i] = (w[r] - 2.0 * w[i] + w[l]) / (h * h);
            break;
        case NodeStencil::UpwindBackward:
            dx[i] = (w[i] - w[l]) / h;
            dxx[i] = (w[r] - 2.0 * w[i] + w[l]) / (h * h);
            break;
        case NodeStencil::BoundaryLeft:
            dx[i] = 0.0;
            dxx[i] = 2.0 * (w[i + 1] - w[i]) / (h * h);
            break;
        case NodeStencil::BoundaryRight:
            dx[i] = 0.0;
            dxx[i] = 2.0 * (w[i - 1] - w[i]) / (h * h);
            break;
        }
    }
}

ValueField solve_elliptic(const LinearPdeCoefficients& coeffs, const Grid1D& grid,
                          PdeSolveInfo* info, DiscreteOperator* op_out) {
    check_coeffs(coeffs, grid);
    ERC_REQUIRE(coeffs.discount > 0.0, "solve_elliptic: discount must be positive");

    Rows rows = assemble_rows(coeffs, grid, coeffs.discount);
    const std::size_t n = static_cast<std::size_t>(grid.n_nodes);

    ValueField out;
    out.grid = grid;
    out.values.assign(n, 0.0);
    solve_rows(rows, grid, coeffs.source, out.values);
    for (double v : out.values)
        if (!std::isfinite(v)) fail_numeric("solve_elliptic: non-finite solution");

    DiscreteOperator op{grid, rows.stencil};
    out.dx.assign(n, 0.0);
    out.dxx.assign(n, 0.0);
    op.apply_derivatives(out.values, out.dx, out.dxx);

    if (info) {
        info->upwind_nodes = rows.upwind_nodes;
        info->max_row_residual = row_residual(rows, grid, coeffs.source, out.values);
    }
    if (op_out) *op_out = std::move(op);
    return out;
}

std::vector<ValueField> solve_parabolic(std::span<const LinearPdeCoefficients> coeffs_per_step,
                                        const ValueField& terminal, const TimeGrid& tgrid,
                                        PdeSolveInfo* info) {
    tgrid.validate();
    const Grid1D& grid = terminal.grid;
    grid.validate();
    ERC_REQUIRE(static_cast<int>(coeffs_per_step.size()) == tgrid.n_steps,
                "solve_parabolic: need one coefficient set per time step");
    ERC_REQUIRE(static_cast<int>(terminal.values.size()) == grid.n_nodes,
                "solve_parabolic: terminal does not match grid");
    for (double v : terminal.values)
        ERC_REQUIRE(std::isfinite(v), "solve_parabolic: non-finite terminal");

    const std::size_t n = static_cast<std::size_t>(grid.n_nodes);
    const double dt = tgrid.dt();

    std::vector<ValueField> levels(static_cast<std::size_t>(tgrid.n_steps) + 1);
    levels[tgrid.n_steps] = terminal;
    {
        // Terminal level is data, not a solve; cache plain central/boundary
        // stencils for it.
        LinearPdeCoefficients zero;
        zero.second_order.assign(n, 1.0);
        zero.first_order.assign(n, 0.0);
        zero.source.assign(n, 0.0);
        Rows r = assemble_rows(zero, grid, 1.0);
        DiscreteOperator op{grid, r.stencil};
        auto& lv = levels[tgrid.n_steps];
        lv.dx.assign(n, 0.0);
        lv.dxx.assign(n, 0.0);
        op.apply_derivatives(lv.values, lv.dx, lv.dxx);
    }

    PdeSolveInfo agg;
    std::vector<double> rhs(n);
    for (int k = tgrid.n_steps - 1; k >= 0; --k) {
        const LinearPdeCoefficients& c = coeffs_per_step[k];
        check_coeffs(c, grid);
        Rows rows = assemble_rows(c, grid, 1.0 / dt);
        const auto& next = levels[k + 1].values;
        for (std::size_t i = 0; i < n; ++i) rhs[i] = next[i] / dt + c.source[i];

        ValueField lv;
        lv.grid = grid;
        lv.values.assign(n, 0.0);
        solve_rows(rows, grid, rhs, lv.values);
        for (double v : lv.values)
            if (!std::isfinite(v))
                fail_numeric("solve_parabolic: non-finite solution at level " + std::to_string(k));

        DiscreteOperator op{grid, rows.stencil};
        lv.dx.assign(n, 0.0);
        lv.dxx.assign(n, 0.0);
        op.apply_derivatives(lv.values, lv.dx, lv.dxx);

        agg.upwind_nodes += rows.upwind_nodes;
        agg.max_row_residual =
            std::max(agg.max_row_residual, row_residual(rows, grid, rhs, lv.values));
        levels[k] = std::move(lv);
    }
    if (info) *info = agg;
    return levels;
}

} // namespace erc
