#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "gffdrift/quadrature.hpp"

using namespace gffdrift;

TEST_CASE("smooth integrals") {
    auto r = quad::integrate([](double x) { return std::exp(-x); }, 0.0, 5.0);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(1.0 - std::exp(-5.0)).epsilon(1e-13));
    CHECK(r.abs_error < 1e-9);

    r = quad::integrate([](double x) { return x * x * x; }, 1.0, -1.0);
    CHECK(std::abs(r.value) < 1e-15);
    r = quad::integrate([](double x) { return x * x; }, 2.0, 0.0);
    CHECK(r.value == doctest::Approx(-8.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("endpoint singularity and breakpoints") {
    auto r = quad::integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, {1e-10, 0.0, 4000});
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-9));

    const std::vector<double> br{0.3};
    r = quad::integrate([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, {}, br);
    CHECK(r.value == doctest::Approx(0.5 * (0.09 + 0.49)).epsilon(1e-14));
    CHECK(r.intervals == 2);
}

TEST_CASE("reported error covers the true error") {
    for (double a : {1.0, 10.0, 100.0}) {
        auto r = quad::integrate([&](double x) { return a / (1.0 + a * a * x * x); }, -1.0, 1.0, {1e-6});
        const double exact = 2.0 * std::atan(a);
        CHECK(std::abs(r.value - exact) <= r.abs_error + 1e-15);
    }
}

TEST_CASE("budget exhaustion is reported") {
    auto f = [](double x) { return std::sin(1.0 / x) / x; };
    auto r = quad::integrate(f, 1e-8, 1.0, {1e-14, 0.0, 20});
    CHECK_FALSE(r.converged);
    CHECK_THROWS_AS(quad::integrate_checked(f, 1e-8, 1.0, {1e-14, 0.0, 20}), QuadratureFault);
}

TEST_CASE("nested integral of a disc") {
    // ∫_0^1 r dr ∫_0^{2π} dφ = π
    auto inner = [](double r) {
        return quad::integrate([r](double) { return r; }, 0.0, 2.0 * std::numbers::pi);
    };
    auto res = quad::integrate_nested(inner, 0.0, 1.0, {});
    CHECK(res.value == doctest::Approx(std::numbers::pi).epsilon(1e-13));
}

TEST_CASE("gauss-legendre exactness") {
    for (int n : {2, 5, 8, 10, 16}) {
        const auto g = quad::gauss_legendre(n);
        REQUIRE(g.nodes.size() == static_cast<std::size_t>(n));
        for (int d = 0; d <= 2 * n - 1; ++d) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += g.weights[i] * std::pow(g.nodes[i], d);
            const double exact = d % 2 ? 0.0 : 2.0 / (d + 1);
            CHECK(std::abs(s - exact) < 1e-13);
        }
    }
}

TEST_CASE("composite rule and geometric edges") {
    const std::vector<double> edges{0.0, 0.5, 2.0};
    const auto r = quad::composite_rule(edges, 6);
    CHECK(r.nodes.size() == 12);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::exp(r.nodes[i]);
    CHECK(s == doctest::Approx(std::exp(2.0) - 1.0).epsilon(1e-12));

    const std::vector<double> extra{0.37};
    const auto e = quad::geometric_edges(1e-3, 10.0, 4, extra);
    CHECK(e.front() == doctest::Approx(1e-3));
    CHECK(e.back() == doctest::Approx(10.0));
    for (std::size_t i = 1; i < e.size(); ++i) CHECK(e[i] > e[i - 1]);
    CHECK(std::find(e.begin(), e.end(), 0.37) != e.end());
    CHECK(e.size() >= 17);
}
