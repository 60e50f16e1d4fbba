// Acceptance run: one PASS/FAIL line per criterion, details indented below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "gffdrift/bound_functions.hpp"
#include "gffdrift/estimators.hpp"
#include "gffdrift/gff_environment.hpp"
#include "gffdrift/resolvent_numerics.hpp"
#include "gffdrift/runner.hpp"
#include "gffdrift/sde_engine.hpp"

using namespace gffdrift;

namespace {

const double kPi = std::numbers::pi;

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int g_failed = 0;

void verdict(int id, const char* title, bool pass, double secs) {
    std::printf("criterion %d %s: %s (%.1f s)\n", id, title, pass ? "PASS" : "FAIL", secs);
    std::fflush(stdout);
    if (!pass) ++g_failed;
}

template <class... A>
void detail(const char* fmt, A... a) {
    std::printf("    ");
    std::printf(fmt, a...);
    std::printf("\n");
}

// Least-squares slope and intercept of y on x.
std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

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
            const double m1 = k == 1 ? p2 : -p1;
            const double m2 = l == 1 ? p2 : -p1;
            s += v * m1 * m2 * std::cos(p1 * x[0] + p2 * x[1]);
        }
    return s;
}

void criterion1() {
    Stopwatch sw;
    SimConfig c;
    c.dt = 0.01;
    c.T = 10.0;
    c.n_paths = 10000;
    c.master_seed = 101;
    const auto times = default_record_times(c.dt, c.T, c.points_per_decade);
    // λT = 10 here, so the diffusive tail beyond the horizon is extrapolated
    PathFunctional lap{"laplace_r2", PathQuantity::R2, laplace_weights(times, 1.0, true)};
    const auto e = simulate_ensemble(c, BumpSpec::gaussian(), {32.0, 64}, 0.0, {lap});
    bool ok = e.valid;
    double worst = 0.0;
    for (std::size_t i = 0; i < e.times.size(); ++i) {
        const double z = std::abs(e.msd(i) - 2.0 * e.times[i]) / e.msd_stderr(i);
        worst = std::max(worst, z);
        ok = ok && z <= 3.0;
    }
    detail("%zu record times, max |MSD/(2t) - 1| / SE = %.2f", e.times.size(), worst);
    LaplaceOptions opt;
    opt.extrapolate_tail = true;
    const auto est = laplace_transform(msd_curve(e), 1.0, opt);
    const double se = e.functionals[0].stderr_();
    const double dev = std::abs(est.value - 2.0);
    detail("Laplace at lambda=1: %.5f (functional mean %.5f), SE %.5f, quadrature bound %.2e, |dev| %.5f", est.value,
           e.functionals[0].mean(), se, est.quad_err, dev);
    ok = ok && dev <= 3.0 * se + est.quad_err;
    const double secs = sw.seconds();
    ok = ok && secs < 120.0;
    verdict(1, "zero-drift calibration", ok, secs);
}

void criterion2() {
    Stopwatch sw;
    const auto bump = BumpSpec::gaussian(1.0);
    const TorusGrid g{256.0, 512};
    const auto f = synthesize(bump, g, 7, kDefaultNorm);
    const double div = f.spectral_divergence_roundtrip();
    const double div_exact = f.spectral_divergence_exact();
    detail("512^2 realization: divergence/RMS roundtrip %.2e, on coefficients %.2e", div, div_exact);
    bool ok = div <= 1e-12 && div_exact <= 1e-12;

    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < 200; ++i) seeds.push_back(5000 + i);
    const double h = g.h();
    const std::vector<Vec2> seps{{0.0, 0.0}, {h, 0.0}, {2 * h, 0.0}, {0.0, 4 * h}, {3 * h, 3 * h}};
    const auto rows = empirical_covariance(bump, g, kDefaultNorm, seeds, seps);
    double worst = 0.0;
    for (const auto& r : rows) {
        const double oracle = mode_sum_covariance(bump, g, kDefaultNorm, r.separation, r.k, r.l);
        const double z = std::abs(r.empirical - oracle) / r.stderr_;
        worst = std::max(worst, z);
        ok = ok && z <= 4.0;
    }
    detail("covariance over 200 seeds, %zu (separation, k, l) rows: max |emp - oracle| / SE = %.2f", rows.size(), worst);
    const double secs = sw.seconds();
    ok = ok && secs < 300.0;
    verdict(2, "field validity", ok, secs);
}

void criterion3() {
    Stopwatch sw;
    SimConfig c;
    c.dt = 0.01;
    c.T = 100.0;
    c.n_paths = 10000;
    c.master_seed = 303;
    const auto bump = BumpSpec::gaussian();
    const TorusGrid grid;
    const auto pilot = step_size_pilot(c, bump, grid, kDefaultNorm, 1000);
    detail("step-size pilot (1000 paths, dt vs dt/2): diff %.4f +- %.4f, MSD(T) SE %.4f, %s", pilot.diff,
           pilot.diff_stderr, pilot.msd_stderr, pilot.pass ? "pass" : "fail");

    const auto times = default_record_times(c.dt, c.T, c.points_per_decade);
    PathFunctional slope{"dslope", PathQuantity::R2, loglog_slope_weights(times, 1.0, c.T)};
    boost::math::normal nd;
    auto analyse = [&](double norm, const char* label, double& z_out) {
        const auto e = simulate_ensemble(c, bump, grid, norm, {slope});
        const auto d = diffusion_coefficient(msd_curve(e));
        std::vector<double> w;
        for (double s : d.stderrs) w.push_back(s > 0.0 ? 1.0 / (s * s) : 1.0);
        const auto iso = isotonic_fit(d.values, w);
        const double m = e.functionals[0].mean(), se = e.functionals[0].stderr_();
        z_out = m / se;
        detail("%s: D(1)=%.4f D(100)=%.4f, isotonic rise %.4f, dD/dlog t over [1,100] = %.5f +- %.5f, z = %.2f, "
               "one-sided p = %.2e",
               label, d.values[std::lower_bound(d.times.begin(), d.times.end(), 1.0 - 1e-9) - d.times.begin()],
               d.values.back(), iso.back() - iso.front(), m, se, z_out, cdf(complement(nd, z_out)));
        return e.valid;
    };
    double z_drift = 0.0, z_zero = 0.0;
    bool ok = analyse(kDefaultNorm, "drift on", z_drift);
    ok = analyse(0.0, "zero drift", z_zero) && ok;
    const double p = cdf(complement(nd, z_drift));
    ok = ok && p < 0.01 && std::abs(z_zero) <= 3.0;
    verdict(3, "superdiffusive trend", ok, sw.seconds());
}

void criterion4() {
    Stopwatch sw;
    const auto rep = check_identities(random_identity_samples(10000, 500, 404));
    const double der = rep.summary_value("max_derivative_rel_err", 1.0);
    const double sand = rep.summary_value("sandwich_failures", 1.0);
    const double anti = rep.summary_value("antiderivative_form_max_rel_err", 1.0);
    detail("10^4 points, 500 intervals: max derivative rel err %.2e, sandwich failures %.0f", der, sand);
    detail("integral identity: LB-LB form max rel err %.2e (%.0f/500 match), printed LB-UB form matches %.0f/500", anti,
           rep.summary_value("antiderivative_form_matches"), rep.summary_value("printed_form_matches"));
    const double secs = sw.seconds();
    verdict(4, "bound-function identities", rep.failures() == 0 && der <= 1e-6 && sand == 0 && anti <= 1e-8 && secs < 10.0,
            secs);
}

void criterion5() {
    Stopwatch sw;
    bool ok = true;
    const int kmax = 200001;  // odd index 2k+1 up to k = 10^5
    for (double eps : {0.1, 0.5, 1.0})
        for (auto pol : {C3Policy::Floor, C3Policy::Skip}) {
            const auto cs = c_sequence(eps, kmax, pol);
            const auto closed = c_odd_closed_forms(cs.at(3), eps, (kmax - 1) / 2);
            double worst = 0.0;
            for (int k = 1; 2 * k + 1 <= kmax; ++k)
                worst = std::max(worst, std::abs(cs.at(2 * k + 1) - closed[k - 1]) / cs.at(2 * k + 1));
            detail("eps=%.1f %-5s: closed form rel err %.1e, limits odd %.12f even %.12f, Cauchy gap %.1e, %s", eps,
                   to_string(pol).c_str(), worst, cs.odd_limit, cs.even_limit, cs.cauchy_gap,
                   cs.converged ? "converged" : "not converged");
            ok = ok && worst <= 1e-14 && cs.converged && cs.odd_limit > 0.0 && cs.even_limit > 0.0;
        }
    const double secs = sw.seconds();
    verdict(5, "c-sequence", ok && secs < 1.0, secs);
}

struct SweepPoint {
    double lambda;
    double sched_form;
    double conv_form;
};

double beta_fit(const std::vector<SweepPoint>& pts, bool converged) {
    std::vector<double> x, y;
    for (const auto& p : pts)
        if (p.lambda <= 1e-7 * (1.0 + 1e-9)) {
            x.push_back(std::log(std::abs(std::log(p.lambda))));
            y.push_back(std::log(converged ? p.conv_form : p.sched_form));
        }
    return linear_fit(x, y).first;
}

void criterion6() {
    Stopwatch sw;
    const auto bump = BumpSpec::gaussian(1.0);
    std::vector<SweepPoint> pts;
    bool sandwich = true;
    for (int j = 0; j <= 32; ++j) {
        const double lambda = std::pow(10.0, -2.0 - j / 4.0);
        const auto sched = iterate_resolvent(lambda, 0, bump);
        const auto conv = iterate_resolvent(lambda, 400, bump);
        for (const auto* it : {&sched, &conv}) {
            const auto& q = it->level_forms;
            double max_even = 0.0, min_odd = 1e300;
            for (std::size_t lv = 1; lv <= q.size(); ++lv) {
                if (lv % 2) min_odd = std::min(min_odd, q[lv - 1]);
                else max_even = std::max(max_even, q[lv - 1]);
                if (lv + 2 <= q.size()) {
                    if (lv % 2) sandwich = sandwich && q[lv + 1] <= q[lv - 1];
                    else sandwich = sandwich && q[lv + 1] >= q[lv - 1];
                }
            }
            sandwich = sandwich && max_even <= min_odd;
        }
        // λ² D_diag = 2 × quadratic form
        pts.push_back({lambda, 2.0 * sched.quadratic_form, 2.0 * conv.quadratic_form});
        if (j % 4 == 0)
            detail("lambda %.0e: levels %d (schedule) / %d (fixed point), lambda^2 D_diag %.6f / %.6f", lambda,
                   sched.levels_done, conv.levels_done, 2.0 * sched.quadratic_form, 2.0 * conv.quadratic_form);
    }
    detail("odd levels above even levels, each subsequence monotone: %s", sandwich ? "yes" : "no");

    const double beta = beta_fit(pts, true);
    const double beta_sched = beta_fit(pts, false);
    detail("beta over lambda in [1e-10, 1e-7]: %.4f at the fixed point, %.4f at k_schedule+1 levels", beta, beta_sched);

    double rmin = 1e300, rmax = 0.0, factor = 1e300;
    for (const auto& p : pts) {
        const double r = p.conv_form / std::sqrt(std::abs(std::log(p.lambda)));
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
        factor = std::min(factor, std::pow(std::log(std::abs(std::log(p.lambda))), 3.0));
    }
    detail("lambda^2 D_diag / sqrt|log lambda|: max/min %.3f vs allowed (log|log lambda|)^3 >= %.3f", rmax / rmin, factor);

    // same fit at the other candidate couplings, for the ledger
    for (double cpl : {1.0, physical_coupling(kDefaultNorm)}) {
        std::vector<SweepPoint> alt;
        for (int j = 20; j <= 32; ++j) {
            const double lambda = std::pow(10.0, -2.0 - j / 4.0);
            const auto it = iterate_resolvent(lambda, 400, bump, cpl);
            alt.push_back({lambda, 0.0, 2.0 * it.quadratic_form});
        }
        detail("coupling %.4f: beta %.4f (informational)", cpl, beta_fit(alt, true));
    }
    const double secs = sw.seconds();
    verdict(6, "resolvent iteration asymptotics",
            sandwich && beta >= 0.45 && beta <= 0.55 && rmax / rmin < factor && secs < 600.0, secs);
}

void criterion7() {
    Stopwatch sw;
    const auto bump = BumpSpec::gaussian(1.0);
    const std::vector<double> lambdas{0.5, 0.2, 0.1};
    SimConfig c;
    c.dt = 0.01;
    c.T = 200.0;
    c.n_paths = 10000;
    c.master_seed = 707;
    c.points_per_decade = 32;
    const auto times = default_record_times(c.dt, c.T, c.points_per_decade);
    std::vector<PathFunctional> fn;
    for (double l : lambdas) fn.push_back({"laplace_f1sq", PathQuantity::F1Sq, laplace_weights(times, l, false)});
    const auto e = simulate_ensemble(c, bump, TorusGrid{}, kDefaultNorm, fn);
    bool ok = e.valid;
    const auto f1 = f1_curve(e);
    const double beta = physical_coupling(kDefaultNorm), pref = resolvent_prefactor(kDefaultNorm);
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        const double l = lambdas[i];
        const double mc = 0.5 * l * l * e.functionals[i].mean();
        const double se = 0.5 * l * l * e.functionals[i].stderr_();
        const auto le = drift_part_transform(f1, l);
        const double lower = pref * solve_truncated_two(2.0 * l, bump, 128, beta).value;
        const double upper = pref * free_quadratic_form(2.0 * l, bump);
        detail("lambda %.1f: two-level %.5f <= MC %.5f + 3 SE (SE %.5f, quad %.1e); free form %.5f", l, lower, mc, se,
               0.5 * l * l * le.quad_err, upper);
        ok = ok && lower <= mc + 3.0 * se;
    }
    // The iteration interpolates its multiplier between grid points; at the
    // default 48 per decade that error is ~5e-8 relative and converges at
    // fourth order, so the comparison runs on a grid where it is negligible.
    for (double l : lambdas) {
        const double d128 = solve_truncated_two(l, bump, 128, kDefaultCoupling, true).value;
        const double d256 = solve_truncated_two(l, bump, 256, kDefaultCoupling, true).value;
        const auto it48 = iterate_resolvent(l, 2, bump, kDefaultCoupling, 48);
        const auto it192 = iterate_resolvent(l, 2, bump, kDefaultCoupling, 192);
        const auto it384 = iterate_resolvent(l, 2, bump, kDefaultCoupling, 384);
        const double tol = std::abs(d256 - d128) + std::abs(it384.quadratic_form - it192.quadratic_form) + it384.quad_error;
        const double diff = std::abs(d128 - it384.quadratic_form);
        detail("lambda %.1f: diagonal-only solve %.12f vs two-level iteration %.12f (384/decade), |diff| %.2e <= error "
               "%.2e; at 48/decade %.12f",
               l, d128, it384.quadratic_form, diff, tol, it48.quadratic_form);
        ok = ok && diff <= tol;
    }
    const double secs = sw.seconds();
    verdict(7, "two-level sandwich vs Monte Carlo", ok && secs < 900.0, secs);
}

void criterion8() {
    Stopwatch sw;
    const auto bump = BumpSpec::gaussian(1.0);
    bool ok = true;
    auto line = [&](const LemmaCheckReport& r, std::size_t n, const char* key) {
        const double stab = r.summary_value(key, 1e300);
        detail("%-12s %zu samples: %s = %.4g, %zu violations, stability %.3f (%s)", r.lemma_id.c_str(), n,
               r.constant_name.c_str(), r.fitted_constant, r.failures(), stab, key);
        ok = ok && n >= 200 && r.finite_constant() && r.failures() == 0 && stab <= 2.0;
    };
    const auto rs = default_replacement_samples();
    line(check_replacement(rs, bump), rs.size(), "stability_across_z");
    const auto os = default_offdiag_samples();
    line(check_offdiag(os, bump), os.size(), "stability_across_lambda");
    const auto ms = default_main_samples();
    const auto mr = check_main_lemmas(ms, bump);
    line(mr.main_ub, ms.size(), "stability_across_decades");
    line(mr.rho_squared, ms.size(), "stability_across_decades");
    line(mr.main_lb, ms.size(), "stability_across_decades");
    detail("mainLB: C2 fixed at %.1f, %.0f of %zu samples vacuous", mr.main_lb.summary_value("C2"),
           mr.main_lb.summary_value("vacuous_samples"), ms.size());

    // mainUB restricted to the small-lambda decades, for the ledger
    std::vector<MainLemmaSample> small;
    for (const auto& s : ms)
        if (s.lambda <= 1e-2) small.push_back(s);
    const auto ms_small = check_main_lemmas(small, bump);
    detail("mainUB on lambda <= 1e-2 only (informational): C = %.4g, stability %.3f", ms_small.main_ub.fitted_constant,
           ms_small.main_ub.summary_value("stability_across_decades"));
    const double secs = sw.seconds();
    verdict(8, "auxiliary lemma audits", ok && secs < 1200.0, secs);
}

} // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    std::printf("%d of 8 criteria failed\n", g_failed);
    return g_failed == 0 ? 0 : 1;
}
