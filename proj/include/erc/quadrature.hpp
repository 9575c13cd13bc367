#pragma once

#include <vector>

#include "erc/common.hpp"

namespace erc {

/// Quadrature rule over the action interval A = [lo, hi]. Nodes lie inside A,
/// weights are positive and sum to |A| (the rule is exact on constants).
struct ActionQuadrature {
    std::vector<double> nodes;
    std::vector<double> weights;

    int size() const { return static_cast<int>(nodes.size()); }
    double width() const; // sum of weights

    /// Composite Gauss-Legendre with n_total nodes split over equal panels of
    /// at most 32 points. Exact for polynomials up to degree 2*panel-1.
    static ActionQuadrature gauss_legendre(double lo, double hi, int n_total = 32);
};

} // namespace erc
