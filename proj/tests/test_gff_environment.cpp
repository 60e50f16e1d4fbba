#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/special_functions/expint.hpp>

#include "doctest.h"
#include "gffdrift/errors.hpp"
#include "gffdrift/gff_environment.hpp"

using namespace gffdrift;

namespace {

const double kPi = std::numbers::pi;

// E[ω_k(0) ω_l(x)] summed over the full plane of retained torus modes.
double mode_sum_covariance(const BumpSpec& b, const TorusGrid& g, double norm, Vec2 x, int k, int l) {
    const int n = g.N / 2;
    const double dp = 2.0 * kPi / g.L;
    double s = 0.0;
    for (int a = -n + 1; a < n; ++a)
        for (int c = -n + 1; c < n; ++c) {
            if (a == 0 && c == 0) continue;
            const double p1 = a * dp, p2 = c * dp, p2sq = p1 * p1 + p2 * p2;
            const double v = norm * b.v_hat_radial(std::sqrt(p2sq)) / (p2sq * g.L * g.L);
            // ω̂ = (i p2, -i p1) ξ̂
            const double m1 = k == 1 ? p2 : -p1;
            const double m2 = l == 1 ? p2 : -p1;
            s += v * m1 * m2 * std::cos(p1 * x[0] + p2 * x[1]);
        }
    return s;
}

} // namespace

TEST_CASE("grid validation") {
    const auto b = BumpSpec::gaussian(1.0);
    CHECK_NOTHROW(TorusGrid{32.0, 64}.validate(b));
    CHECK_THROWS_AS((TorusGrid{64.0, 64}.validate(b)), ConfigError);   // Nyquist π < 6
    CHECK_THROWS_AS((TorusGrid{32.0, 48}.validate(b)), ConfigError);   // not a power of two
    CHECK_THROWS_AS((TorusGrid{32.0, 8}.validate(b)), ConfigError);
    CHECK_THROWS_AS((TorusGrid{-1.0, 64}.validate(b)), ConfigError);
}

TEST_CASE("synthesis is deterministic per seed") {
    const auto b = BumpSpec::gaussian(1.0);
    const TorusGrid g{32.0, 64};
    const auto f1 = synthesize(b, g, 42, kDefaultNorm);
    const auto f2 = synthesize(b, g, 42, kDefaultNorm);
    const auto f3 = synthesize(b, g, 43, kDefaultNorm);
    CHECK(f1.omega1 == f2.omega1);
    CHECK(f1.omega2 == f2.omega2);
    CHECK(f1.xi == f2.xi);
    CHECK(f1.omega1 != f3.omega1);
}

TEST_CASE("drift is divergence free") {
    const auto b = BumpSpec::gaussian(1.0);
    const auto f = synthesize(b, {64.0, 128}, 5, kDefaultNorm);
    CHECK(f.spectral_divergence_exact() <= 1e-12);
    CHECK(f.spectral_divergence_roundtrip() <= 1e-12);
}

TEST_CASE("drift variance matches the mode-sum oracle") {
    const auto b = BumpSpec::gaussian(1.0);
    const TorusGrid g{32.0, 64};
    const double oracle = mode_sum_covariance(b, g, kDefaultNorm, {0.0, 0.0}, 1, 1);
    FieldSynthesizer syn(b, g, kDefaultNorm);
    FieldRealization f;
    double s = 0.0, s2 = 0.0;
    const int n = 500;
    for (int seed = 0; seed < n; ++seed) {
        syn.synthesize(1000 + seed, f, false);
        double m = 0.0;
        for (double w : f.omega1) m += w * w;
        m /= f.omega1.size();
        s += m;
        s2 += m * m;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / (n - 1));
    CHECK(std::abs(mean - oracle) <= 4.0 * se);
    CHECK(analytic_torus_covariance(b, g, kDefaultNorm, {0.0, 0.0}, 1, 1) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(analytic_torus_covariance(b, g, kDefaultNorm, {1.0, 2.0}, 1, 2) ==
          doctest::Approx(mode_sum_covariance(b, g, kDefaultNorm, {1.0, 2.0}, 1, 2)).epsilon(1e-10));
}

TEST_CASE("empirical covariance") {
    const auto b = BumpSpec::gaussian(1.0);
    const TorusGrid g{32.0, 64};
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < 100; ++i) seeds.push_back(7000 + i);
    const std::vector<Vec2> seps{{0.0, 0.0}, {1.0, 2.0}, {-1.0, -2.0}};
    const auto rows = empirical_covariance(b, g, kDefaultNorm, seeds, seps);
    auto find = [&](Vec2 x, int k, int l) {
        for (const auto& r : rows)
            if (r.separation == x && r.k == k && r.l == l) return r;
        FAIL("row missing");
        return rows.front();
    };
    const auto c12 = find({0.0, 0.0}, 1, 2);
    CHECK(std::abs(c12.empirical) <= 3.0 * c12.stderr_);
    const auto c11 = find({0.0, 0.0}, 1, 1);
    CHECK(std::abs(c11.empirical - c11.analytic) <= 4.0 * c11.stderr_);
    // E[ω1(0) ω2(x)] = E[ω2(0) ω1(-x)] holds sample by sample after spatial averaging
    CHECK(find({1.0, 2.0}, 1, 2).empirical == doctest::Approx(find({-1.0, -2.0}, 2, 1).empirical).epsilon(1e-10));

    std::vector<std::uint64_t> few(seeds.begin(), seeds.begin() + 10);
    CHECK_THROWS_AS(empirical_covariance(b, g, kDefaultNorm, few, seps), StatisticsError);
}

TEST_CASE("interpolation at grid nodes and between them") {
    const auto b = BumpSpec::gaussian(1.0);
    const TorusGrid g{32.0, 64};
    const auto f = synthesize(b, g, 9, kDefaultNorm);
    const double h = g.h();
    for (int i : {0, 3, 17, 63})
        for (int j : {0, 5, 40}) {
            const auto w = f.drift_at({i * h, j * h}, Interpolation::Fast);
            CHECK(w[0] == doctest::Approx(f.omega1[i * g.N + j]).epsilon(1e-13));
            CHECK(w[1] == doctest::Approx(f.omega2[i * g.N + j]).epsilon(1e-13));
            const auto r = f.drift_at({i * h, j * h}, Interpolation::Reference);
            CHECK(std::abs(r[0] - w[0]) < 1e-10 * f.omega_rms());
        }
    // wrapping
    const auto a = f.drift_at({1.3, 2.1}, Interpolation::Reference);
    const auto c = f.drift_at({1.3 + g.L, 2.1 - 3.0 * g.L}, Interpolation::Reference);
    CHECK(a[0] == doctest::Approx(c[0]).epsilon(1e-10));
}

TEST_CASE("fast interpolation error scales like h^3") {
    const auto b = BumpSpec::gaussian(1.0);
    std::mt19937_64 rng(3);
    auto fitted_constant = [&](const TorusGrid& g) {
        const auto f = synthesize(b, g, 21, kDefaultNorm);
        std::uniform_real_distribution<double> u(0.0, g.L);
        double c = 0.0;
        for (int i = 0; i < 100; ++i) {
            const Vec2 x{u(rng), u(rng)};
            const auto fa = f.drift_at(x, Interpolation::Fast);
            const auto re = f.drift_at(x, Interpolation::Reference);
            const double err = std::hypot(fa[0] - re[0], fa[1] - re[1]);
            c = std::max(c, err / (std::pow(g.h(), 3) * f.omega_rms()));
        }
        return c;
    };
    const double c64 = fitted_constant({32.0, 64});
    const double c256 = fitted_constant({32.0, 256});
    MESSAGE("fitted C at h=0.5: " << c64 << ", at h=0.125: " << c256);
    CHECK(std::isfinite(c64));
    // an h^2 method would show a fourfold growth of the fitted constant
    CHECK(c256 / c64 < 2.5);
    CHECK(c256 / c64 > 0.4);
}

TEST_CASE("zero field") {
    const auto f = FieldRealization::zero({32.0, 64});
    const auto w = f.drift_at({3.0, 4.0}, Interpolation::Fast);
    CHECK(w[0] == 0.0);
    CHECK(w[1] == 0.0);
}

TEST_CASE("save and load round trip") {
    const auto b = BumpSpec::gaussian(1.0);
    const auto f = synthesize(b, {32.0, 64}, 77, kDefaultNorm);
    const std::string path = "gff_roundtrip_test.bin";
    f.save(path);
    const auto g = FieldRealization::load(path);
    CHECK(g.omega1 == f.omega1);
    CHECK(g.omega2 == f.omega2);
    CHECK(g.seed == 77);
    const auto x = f.drift_at({1.7, 9.2}, Interpolation::Fast);
    const auto y = g.drift_at({1.7, 9.2}, Interpolation::Fast);
    CHECK(x == y);
    std::remove(path.c_str());
}

TEST_CASE("peclet integral against the exponential integral") {
    // gaussian σ = 1: (norm/2π) ∫_κ^∞ e^{-r²}/r dr = (norm/2π) E1(κ²)/2
    const auto b = BumpSpec::gaussian(1.0);
    for (double k : {0.5, 0.05, 0.005, 0.0005}) {
        const double oracle = kDefaultNorm / (2.0 * kPi) * 0.5 * boost::math::expint(1, k * k);
        CHECK(peclet_integral(b, k, kDefaultNorm) == doctest::Approx(oracle).epsilon(1e-9));
    }
    // logarithmic growth: tenfold smaller κ adds log 10 per unit of norm/2π
    const double d1 = peclet_integral(b, 0.005, kDefaultNorm) - peclet_integral(b, 0.05, kDefaultNorm);
    const double d2 = peclet_integral(b, 0.0005, kDefaultNorm) - peclet_integral(b, 0.005, kDefaultNorm);
    CHECK(std::abs(d1 / std::log(10.0) - 1.0) < 0.02);
    CHECK(std::abs(d2 / std::log(10.0) - 1.0) < 0.02);
}

TEST_CASE("drift marginals are gaussian") {
    const auto b = BumpSpec::gaussian(1.0);
    const TorusGrid g{32.0, 64};
    FieldSynthesizer syn(b, g, kDefaultNorm);
    FieldRealization f;
    double m2 = 0.0, m4 = 0.0;
    long n = 0;
    for (int s = 0; s < 32; ++s) {
        syn.synthesize(500 + s, f, false);
        for (double w : f.omega1) {
            m2 += w * w;
            m4 += w * w * w * w;
            ++n;
        }
    }
    m2 /= n;
    m4 /= n;
    const double excess = m4 / (m2 * m2) - 3.0;
    MESSAGE("excess kurtosis " << excess << " over " << n << " samples");
    CHECK(std::abs(excess) < 0.2);
}
