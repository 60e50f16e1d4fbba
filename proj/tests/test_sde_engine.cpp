#include <cmath>
#include <vector>

#include "doctest.h"
#include "gffdrift/errors.hpp"
#include "gffdrift/sde_engine.hpp"

using namespace gffdrift;

namespace {

const TorusGrid kGrid{32.0, 64};

SimConfig small_config(long n, double T, std::uint64_t seed) {
    SimConfig c;
    c.dt = 0.01;
    c.T = T;
    c.n_paths = n;
    c.master_seed = seed;
    c.points_per_decade = 8;
    return c;
}

} // namespace

TEST_CASE("single steps") {
    auto constant = FieldRealization::zero(kGrid);
    std::fill(constant.omega1.begin(), constant.omega1.end(), 1.0);
    constant.rebuild_interpolation_table();
    auto r = euler_maruyama_step({0.0, 0.0}, constant, 0.01, {0.0, 0.0});
    CHECK(r.x[0] == doctest::Approx(0.01).epsilon(1e-14));
    CHECK(r.x[1] == 0.0);
    CHECK(r.drift_increment[0] == doctest::Approx(0.01).epsilon(1e-14));

    const auto zero = FieldRealization::zero(kGrid);
    r = euler_maruyama_step({0.0, 0.0}, zero, 0.25, {2.0, -1.0});
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.x[1] == doctest::Approx(-0.5).epsilon(1e-15));
    r = euler_maruyama_step({3.5, -2.0}, zero, 0.1, {0.0, 0.0});
    CHECK(r.x[0] == 3.5);
    CHECK(r.x[1] == -2.0);
}

TEST_CASE("non-finite drift is an integration fault") {
    auto bad = FieldRealization::zero(kGrid);
    std::fill(bad.omega1.begin(), bad.omega1.end(), std::nan(""));
    bad.rebuild_interpolation_table();
    CHECK_THROWS_AS(euler_maruyama_step({0.0, 0.0}, bad, 0.01, {0.0, 0.0}), IntegrationFault);
}

TEST_CASE("config validation") {
    SimConfig c = small_config(10, 1.0, 1);
    CHECK_NOTHROW(c.validate(1.0));
    c.dt = 0.2;
    CHECK_THROWS_AS(c.validate(1.0), ConfigError);
    c = small_config(0, 1.0, 1);
    CHECK_THROWS_AS(c.validate(1.0), ConfigError);
    c = small_config(10, 1.0, 1);
    c.record_times = {0.5, 2.0};
    CHECK_THROWS_AS(c.validate(1.0), ConfigError);
    c.record_times = {0.5, 0.2};
    CHECK_THROWS_AS(c.validate(1.0), ConfigError);
}

TEST_CASE("default record times") {
    const auto t = default_record_times(0.01, 10.0, 16);
    CHECK(t.front() == doctest::Approx(0.1));
    CHECK(t.back() == 10.0);
    for (std::size_t i = 1; i < t.size(); ++i) {
        CHECK(t[i] > t[i - 1]);
        CHECK(std::abs(t[i] / 0.01 - std::round(t[i] / 0.01)) < 1e-9);
    }
}

TEST_CASE("zero drift ensemble is brownian") {
    auto c = small_config(2000, 10.0, 3);
    const auto e = simulate_ensemble(c, BumpSpec::gaussian(), kGrid, 0.0);
    REQUIRE(e.valid);
    for (std::size_t i = 0; i < e.times.size(); ++i) {
        CHECK(e.counts[i] == 2000);
        const double t = e.times[i];
        CHECK(std::abs(e.msd(i) / (2.0 * t) - 1.0) <= 3.0 * e.msd_stderr(i) / (2.0 * t));
        CHECK(std::abs(e.mean(i, TrajectoryEnsemble::X1)) <= 3.0 * e.stderr_of(i, TrajectoryEnsemble::X1, TrajectoryEnsemble::X1Sq));
        CHECK(e.mean(i, TrajectoryEnsemble::F1Sq) == 0.0);
    }
}

TEST_CASE("worker count does not change the accumulators") {
    auto c = small_config(64, 2.0, 11);
    c.workers = 1;
    const auto a = simulate_ensemble(c, BumpSpec::gaussian(), kGrid, kDefaultNorm);
    c.workers = 8;
    const auto b = simulate_ensemble(c, BumpSpec::gaussian(), kGrid, kDefaultNorm);
    CHECK(a.sums == b.sums);
    CHECK(a.counts == b.counts);
    c.master_seed = 12;
    const auto d = simulate_ensemble(c, BumpSpec::gaussian(), kGrid, kDefaultNorm);
    CHECK(a.sums != d.sums);
}

TEST_CASE("decomposition and isotropy with drift") {
    auto c = small_config(600, 5.0, 21);
    const auto e = simulate_ensemble(c, BumpSpec::gaussian(), kGrid, kDefaultNorm);
    REQUIRE(e.valid);
    using T = TrajectoryEnsemble;
    for (std::size_t i = 0; i < e.times.size(); ++i) {
        // X1 = B1 + F1 exactly per path, so the second moments add up to rounding
        const double lhs = e.mean(i, T::X1Sq);
        const double rhs = e.mean(i, T::B1Sq) + e.mean(i, T::F1Sq) + 2.0 * e.mean(i, T::B1F1);
        CHECK(std::abs(lhs - rhs) <= 1e-9 * lhs);
        const double se = std::hypot(e.stderr_of(i, T::X1Sq, T::X1SqSq), e.stderr_of(i, T::X2Sq, T::X2SqSq));
        CHECK(std::abs(e.mean(i, T::X1Sq) - e.mean(i, T::X2Sq)) <= 3.0 * se);
        CHECK(e.mean(i, T::F1Sq) > 0.0);
    }
    // with drift the displacement exceeds the Brownian value at the horizon
    const std::size_t last = e.times.size() - 1;
    CHECK(e.msd(last) > 2.0 * e.times[last]);
}

TEST_CASE("path functionals reproduce the accumulators") {
    auto c = small_config(100, 1.0, 5);
    c.record_times = {0.25, 0.5, 1.0};
    PathFunctional pf{"r2_sum", PathQuantity::R2, {1.0, 2.0, -1.0}};
    const auto e = simulate_ensemble(c, BumpSpec::gaussian(), kGrid, kDefaultNorm, {pf});
    REQUIRE(e.functionals.size() == 1);
    const double expect = e.msd(0) + 2.0 * e.msd(1) - e.msd(2);
    CHECK(e.functionals[0].mean() == doctest::Approx(expect).epsilon(1e-12));
    CHECK(e.functionals[0].n == 100);
}

TEST_CASE("step size pilot") {
    auto c = small_config(200, 2.0, 8);
    const auto p = step_size_pilot(c, BumpSpec::gaussian(), kGrid, kDefaultNorm, 200);
    CHECK(p.n_paths == 200);
    CHECK(std::isfinite(p.diff));
    CHECK(p.msd_stderr > 0.0);
    CHECK(p.pass == (std::abs(p.diff) < p.msd_stderr));
    CHECK(p.pass);
}
