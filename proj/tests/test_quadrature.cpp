#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "erc/quadrature.hpp"

using namespace erc;

namespace {
double apply(const ActionQuadrature& q, double (*f)(double)) {
    double s = 0.0;
    for (int k = 0; k < q.size(); ++k) s += q.weights[k] * f(q.nodes[k]);
    return s;
}
} // namespace

TEST_CASE("weights sum to the interval width") {
    for (int n : {4, 16, 32, 33, 64, 100}) {
        const ActionQuadrature q = ActionQuadrature::gauss_legendre(-1.5, 2.5, n);
        CHECK(q.size() == n);
        CHECK(q.width() == doctest::Approx(4.0).epsilon(1e-12));
    }
}

TEST_CASE("nodes interior, weights positive") {
    const ActionQuadrature q = ActionQuadrature::gauss_legendre(0.0, 1.0, 48);
    for (int k = 0; k < q.size(); ++k) {
        CHECK(q.nodes[k] > 0.0);
        CHECK(q.nodes[k] < 1.0);
        CHECK(q.weights[k] > 0.0);
    }
}

TEST_CASE("polynomial exactness of the single-panel rule") {
    const double a = -1.0, b = 2.0;
    const ActionQuadrature q = ActionQuadrature::gauss_legendre(a, b, 32);
    for (int k = 0; k <= 20; ++k) {
        double s = 0.0;
        for (int j = 0; j < q.size(); ++j) s += q.weights[j] * std::pow(q.nodes[j], k);
        const double exact = (std::pow(b, k + 1) - std::pow(a, k + 1)) / (k + 1);
        CHECK(s == doctest::Approx(exact).epsilon(1e-12));
    }
}

TEST_CASE("composite panels stay accurate") {
    const ActionQuadrature q = ActionQuadrature::gauss_legendre(0.0, 6.283185307179586, 96);
    CHECK(apply(q, std::sin) == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(apply(q, std::exp) ==
          doctest::Approx(std::exp(6.283185307179586) - 1.0).epsilon(1e-12));
}

TEST_CASE("argument validation") {
    CHECK_THROWS_AS(ActionQuadrature::gauss_legendre(1.0, 0.0, 8), InvalidArgument);
    CHECK_THROWS_AS(ActionQuadrature::gauss_legendre(0.0, 1.0, 0), InvalidArgument);
}
