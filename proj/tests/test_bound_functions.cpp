#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "gffdrift/bound_functions.hpp"
#include "gffdrift/errors.hpp"

using namespace gffdrift;

namespace {

const double kTwoPi = 2.0 * std::numbers::pi;

template <class F>
double gk_oracle(F f, double a, double b) {
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13, &err);
}

} // namespace

TEST_CASE("L") {
    CHECK(L(1.0, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(L(1.0 / (std::exp(1.0) - 1.0), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
    for (double x : {1e-8, 0.3, 7.0}) CHECK(L(x, 5.0) - L(x, 0.0) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK_THROWS_AS(L(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(L(1.0, -1.0), DomainError);
}

TEST_CASE("LB and UB") {
    for (double x : {1e-6, 0.1, 2.0})
        for (double z : {1.0, 30.0}) {
            CHECK(LB(0, x, z) == 1.0);
            CHECK(UB(0, x, z) == doctest::Approx(L(x, z)).epsilon(1e-15));
            CHECK(LB(3, x, z) * UB(3, x, z) == doctest::Approx(L(x, z)).epsilon(1e-14));
        }
    const double sq = std::sqrt(L(0.01, 3.0));
    CHECK(std::abs(LB(50, 0.01, 3.0) - sq) <= 1e-12 * sq);
    CHECK_THROWS_AS(LB(1, 10.0, 0.0), DomainError);
    CHECK_THROWS_AS(LB(-1, 0.1, 1.0), DomainError);
}

TEST_CASE("sigma") {
    for (double x : {1e-4, 0.5})
        for (double z : {1.0, 9.0}) {
            CHECK(sigma_k(1, x, z) == 1.0);
            CHECK(sigma_k(2, x, z) == doctest::Approx(L(x, z)).epsilon(1e-15));
            CHECK(sigma_k(3, x, z) == doctest::Approx(1.0 + 0.5 * std::log(L(x, z))).epsilon(1e-15));
            CHECK(sigma_k(6, x, z) == doctest::Approx(UB(2, x, z)).epsilon(1e-15));
            CHECK(sigma_k(7, x, z) == doctest::Approx(LB(3, x, z)).epsilon(1e-15));
        }
    CHECK_THROWS_AS(sigma_k(0, 0.1, 1.0), DomainError);
}

TEST_CASE("z and f") {
    BoundParams p;
    auto [z, f] = z_f(p, 1, 1);
    CHECK(z == doctest::Approx(100.0 * std::pow(2.0, 2.2)).epsilon(1e-14));
    CHECK(z == doctest::Approx(459.48).epsilon(1e-4));
    for (int k = 1; k < 6; ++k)
        for (int n = 1; n < 6; ++n) {
            const auto a = z_f(p, k, n);
            CHECK(a.second / std::sqrt(a.first) == doctest::Approx(p.K2).epsilon(1e-14));
            CHECK(z_f(p, k, n + 1).first == z_f(p, k + 1, n).first);
        }
    CHECK_THROWS_AS(z_f(p, 0, 1), DomainError);
    BoundParams bad;
    bad.K1 = 0.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = {};
    bad.eps = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("c sequence") {
    for (auto pol : {C3Policy::Floor, C3Policy::Skip}) {
        const auto cs = c_sequence(0.1, 200, pol);
        CHECK(cs.at(1) == 1.0);
        CHECK(cs.at(2) == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-15));
        CHECK(cs.policy_applied);
        for (int k = 2; 2 * k + 1 <= cs.kmax(); ++k)
            CHECK(cs.at(2 * k) * cs.at(2 * k + 1) ==
                  doctest::Approx(kTwoPi * (1.0 - std::pow(k, -1.1))).epsilon(1e-14));
        for (int i = 1; i <= cs.kmax(); ++i) CHECK(cs.at(i) > 0.0);
        const double c3 = cs.at(3);
        for (int k = 1; 2 * k + 1 <= cs.kmax(); ++k)
            CHECK(std::abs(cs.at(2 * k + 1) - c_odd_closed_form(c3, 0.1, k)) <= 1e-14 * cs.at(2 * k + 1));
    }
    CHECK(c_sequence(0.1, 3, C3Policy::Literal).at(3) == 0.0);
    CHECK_THROWS_AS(c_sequence(0.1, 10, C3Policy::Literal), NumericFault);
    CHECK(c_sequence(0.3, 10, C3Policy::Floor, 0.25).at(3) == doctest::Approx(kTwoPi / (4.0 * std::numbers::pi) * 0.25));
}

TEST_CASE("closed product form by direct multiplication") {
    const double eps = 0.5, c3 = 0.7;
    const auto all = c_odd_closed_forms(c3, eps, 1000);
    long double prod = c3;
    for (int k = 2; k <= 1000; ++k) {
        const long double a = std::pow(static_cast<long double>(k), -1.5L);
        prod *= (1.0L - a) / (1.0L + a);
        if (k % 97 == 0 || k == 1000) {
            CHECK(std::abs(all[k - 1] - static_cast<double>(prod)) <= 1e-14 * static_cast<double>(prod));
            CHECK(c_odd_closed_form(c3, eps, k) == all[k - 1]);
        }
    }
}

TEST_CASE("c sequence limits converge") {
    for (double eps : {0.1, 0.5, 1.0})
        for (auto pol : {C3Policy::Floor, C3Policy::Skip}) {
            const auto cs = c_sequence(eps, 200001, pol);
            CHECK(cs.converged);
            CHECK(cs.odd_limit > 0.0);
            CHECK(cs.even_limit > 0.0);
            CHECK(cs.odd_limit * cs.even_limit == doctest::Approx(kTwoPi).epsilon(1e-8));
        }
}

TEST_CASE("schedule, envelope and stirling control") {
    // log L(λ,0) in [2, 4) gives k = 1
    for (double logl : {2.0, 3.0, 3.99}) CHECK(k_schedule(1.0 / (std::exp(std::exp(logl)) - 1.0)) == 1);
    CHECK(k_schedule(1e-10) == static_cast<int>(std::floor(std::log(std::log1p(1e10)) / 2.0)));
    CHECK(k_schedule(0.5) == 0);
    CHECK_THROWS_AS(k_schedule(1.0), DomainError);

    for (double l : {1e-3, 1e-8, 1e-30}) {
        const auto [lo, hi] = envelope(l, 0.1, 0.5, 2.0);
        CHECK(lo <= hi);
        CHECK(lo > 0.0);
    }
    CHECK_THROWS_AS(envelope(2.0, 0.1, 1.0, 1.0), DomainError);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    while (checked < 50) {
        const double lambda = std::pow(10.0, -4.0 - 296.0 * u(rng));
        const int kmax = k_schedule(lambda);
        if (kmax < 1) continue;
        const int k = 1 + static_cast<int>(u(rng) * kmax) % kmax;
        CHECK(1.0 / LB(k, lambda, 0.0) <= stirling_bound(lambda, k));
        ++checked;
    }
}

TEST_CASE("monotonicity on random grids") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const int k = static_cast<int>(u(rng) * 9);
        const double x = std::pow(10.0, -10.0 + 11.0 * u(rng)), z = std::pow(10.0, 3.0 * u(rng));
        const double x2 = x * (1.0 + 10.0 * u(rng)), z2 = z * (1.0 + 10.0 * u(rng));
        CHECK(L(x2, z) <= L(x, z));
        CHECK(LB(k, x2, z) <= LB(k, x, z));
        CHECK(UB(k, x2, z) <= UB(k, x, z) * (1.0 + 1e-15));
        CHECK(LB(k, x, z2) >= LB(k, x, z));
        CHECK(UB(k, x, z2) >= UB(k, x, z) * (1.0 - 1e-15));
    }
}

TEST_CASE("forward recurrence against compensated summation") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double logl = 50.0 * u(rng);
        const double z = std::exp(logl);  // x large so L ≈ z
        const double x = 1e6;
        const int k = static_cast<int>(u(rng) * 80);
        const double h = 0.5 * std::log(L(x, z));
        double sum = 1.0, c = 0.0, term = 1.0;
        for (int j = 1; j <= k; ++j) {
            term = std::exp(j * std::log(h) - std::lgamma(j + 1.0));
            const double y = term - c;
            const double t = sum + y;
            c = (t - sum) - y;
            sum = t;
        }
        CHECK(std::abs(LB(k, x, z) - sum) <= 1e-14 * sum + 1e-14 * k * 1e-2 * sum);
    }
}

TEST_CASE("identity examples") {
    const double l = L(0.01, 4.0);
    CHECK(1.0 <= LB(3, 0.01, 4.0));
    CHECK(LB(3, 0.01, 4.0) <= std::sqrt(l));
    CHECK(std::sqrt(l) <= UB(3, 0.01, 4.0));
    CHECK(UB(3, 0.01, 4.0) <= l);

    const double z = 2.0;
    const double lhs = gk_oracle([&](double x) { return 1.0 / ((x * x + x) * UB(0, x, z)); }, 0.1, 1.0);
    CHECK(lhs == doctest::Approx(2.0 * (LB(1, 0.1, z) - LB(1, 1.0, z))).epsilon(1e-8));
    CHECK(std::abs(lhs - 2.0 * (LB(1, 0.1, z) - UB(1, 1.0, z))) > 1e-3);

    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const int k = static_cast<int>(u(rng) * 7);
        const double a = std::pow(10.0, -8.0 + 7.0 * u(rng));
        const double b = a * (1.0 + 100.0 * u(rng));
        const double zz = std::pow(10.0, 2.0 * u(rng));
        const double v = gk_oracle([&](double x) { return 1.0 / ((x * x + x) * LB(k, x, zz)); }, a, b);
        CHECK(v <= 2.0 * (UB(k, a, zz) - UB(k, b, zz)) * (1.0 + 1e-12));
    }
}

TEST_CASE("identity report") {
    const auto rep = check_identities(random_identity_samples(2000, 200, 99));
    CHECK(rep.failures() == 0);
    CHECK(rep.summary_value("max_derivative_rel_err", 1.0) <= 1e-6);
    CHECK(rep.summary_value("sandwich_failures", 1.0) == 0.0);
    CHECK(rep.summary_value("antiderivative_form_max_rel_err", 1.0) <= 1e-8);
    CHECK(rep.summary_value("antiderivative_form_matches") == 200.0);
    // the printed form only agrees where L(b, z) is close to 1, so LB and UB nearly coincide
    CHECK(rep.summary_value("printed_form_matches") < 20.0);
}

TEST_CASE("K1/K2 validation report") {
    const auto rep = validate_K1K2(BoundParams{}, FittedConstants{}, 16);
    CHECK(rep.samples.size() == 16 * 16 + 3 * 16);
    CHECK(rep.summary_value("cond1_failures", -1.0) >= 0.0);
    // condition 2 at k = 1 asks for B <= 0, which no positive B meets
    bool k1_flagged = false;
    for (const auto& s : rep.samples)
        if (s.note.rfind("cond2: B", 0) == 0 && s.params[0].second == 1.0) k1_flagged = !s.pass;
    CHECK(k1_flagged);
}
