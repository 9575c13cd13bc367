#include "erc/quadrature.hpp"

#include <cmath>

namespace erc {

namespace {

// Nodes/weights of the n-point rule on [-1, 1] by Newton iteration on the
// Legendre polynomial (three-term recurrence for P_n and P_n').
void legendre_rule(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(static_cast<std::size_t>(n), 0.0);
    w.assign(static_cast<std::size_t>(n), 0.0);
    const double pi = 3.141592653589793238462643383279503;
    for (int k = 0; k < (n + 1) / 2; ++k) {
        double root = std::cos(pi * (k + 0.75) / (n + 0.5));
        double deriv = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = root;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * root * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            deriv = n * (root * p1 - p0) / (root * root - 1.0);
            const double step = p1 / deriv;
            root -= step;
            if (std::abs(step) < 1e-16) break;
        }
        x[k] = -root;
        x[n - 1 - k] = root;
        const double wk = 2.0 / ((1.0 - root * root) * deriv * deriv);
        w[k] = wk;
        w[n - 1 - k] = wk;
    }
}

} // namespace

double ActionQuadrature::width() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

ActionQuadrature ActionQuadrature::gauss_legendre(double lo, double hi, int n_total) {
    ERC_REQUIRE(lo < hi, "gauss_legendre: lo < hi required");
    ERC_REQUIRE(n_total >= 1, "gauss_legendre: at least one node required");

    const int panels = (n_total + 31) / 32;
    const int base = n_total / panels;
    const int extra = n_total % panels; // first `extra` panels get base+1 points

    ActionQuadrature q;
    q.nodes.reserve(static_cast<std::size_t>(n_total));
    q.weights.reserve(static_cast<std::size_t>(n_total));

    const double panel_width = (hi - lo) / panels;
    std::vector<double> x, w;
    for (int p = 0; p < panels; ++p) {
        const int np = base + (p < extra ? 1 : 0);
        legendre_rule(np, x, w);
        const double a = lo + p * panel_width;
        const double mid = a + 0.5 * panel_width;
        const double half = 0.5 * panel_width;
        for (int k = 0; k < np; ++k) {
            q.nodes.push_back(mid + half * x[k]);
            q.weights.push_back(half * w[k]);
        }
    }
    return q;
}

} // namespace erc
