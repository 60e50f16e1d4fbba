#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "gffdrift/errors.hpp"
#include "gffdrift/resolvent_numerics.hpp"

namespace gffdrift {

namespace {

// The sample that sets a fitted constant sits exactly on the bound; allow for
// the rounding of rescaling its ratio back.
constexpr double kRoundoff = 1e-12;

constexpr double kPi = std::numbers::pi;

// ∫_a^1 dρ / (ρ h(ρ)) in log ρ; zero when a ≥ 1.
template <class H>
double log_integral(double a, H&& h) {
    if (a >= 1.0) return 0.0;
    auto f = [&](double t) {
        const double rho = std::exp(t);
        return 1.0 / h(rho);
    };
    quad::Options opt;
    opt.rel_tol = 1e-12;
    return quad::integrate_checked(f, std::log(a), 0.0, opt, {}, "log_integral").value;
}

// π ∫ V̂(r) r w(r) dr over the kernel support with breakpoints at √λ scales.
template <class W>
double radial_integral(double lambda, const BumpSpec& bump, W&& w) {
    const double rmax = 1.2 * bump.cutoff();
    std::vector<double> br;
    for (double r = 1e-3 * std::sqrt(lambda); r < rmax; r *= 3.0) br.push_back(r);
    auto f = [&](double r) { return bump.v_hat_radial(r) * r * w(r); };
    quad::Options opt;
    opt.rel_tol = 1e-11;
    return kPi * quad::integrate_checked(f, 0.0, rmax, opt, br, "radial_integral").value;
}

double finite_max(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, x);
    return m;
}

} // namespace

std::string to_string(FFamily f) {
    switch (f) {
    case FFamily::UB: return "UB";
    case FFamily::LB: return "LB";
    case FFamily::One: return "one";
    }
    return "?";
}

double family_value(FFamily fam, int k, double rho, double z) {
    switch (fam) {
    case FFamily::UB: return UB(k, rho, z);
    case FFamily::LB: return LB(k, rho, z);
    case FFamily::One: return 1.0;
    }
    return 1.0;
}

double family_g(FFamily fam, int k, double rho, double z) { return L(rho, z) / family_value(fam, k, rho, z); }

double angular_constant(const BumpSpec& bump, double coupling) {
    return coupling * coupling * 0.5 * kPi * bump.v_hat_radial(0.0);
}

double group_stability(const std::vector<double>& ratios, const std::vector<int>& groups) {
    std::map<int, double> best;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        auto [it, fresh] = best.emplace(groups[i], ratios[i]);
        if (!fresh) it->second = std::max(it->second, ratios[i]);
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& [g, v] : best) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (best.empty()) return 1.0;
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

// Replacement ------------------------------------------------------------

std::vector<ReplacementSample> default_replacement_samples() {
    std::vector<ReplacementSample> out;
    const std::vector<std::pair<FFamily, int>> fams{
        {FFamily::UB, 1}, {FFamily::UB, 3}, {FFamily::LB, 1}, {FFamily::LB, 3}, {FFamily::One, 0}};
    for (double lambda : {1e-2, 1e-4, 1e-6, 1e-8})
        for (double p : {0.0, 0.01, 0.1, 0.5, 2.0})
            for (double z : {1.0, 10.0, 100.0})
                for (const auto& [fam, k] : fams) out.push_back({lambda, p, z, k, fam});
    return out;
}

LemmaCheckReport check_replacement(const std::vector<ReplacementSample>& samples, const BumpSpec& bump,
                                   double coupling) {
    LemmaCheckReport rep;
    rep.lemma_id = "replacement";
    rep.constant_name = "C_Diag";
    const double b2 = coupling * coupling;
    std::vector<double> ratios;
    std::vector<int> z_groups;
    for (const auto& s : samples) {
        const double rho0 = s.lambda + s.p * s.p;
        auto f = [&](double rho) { return family_value(s.family, s.k, rho, s.z); };
        const double lhs = b2 * angular_integral(s.p, s.lambda, RadialFunction(f), bump, 1e-9).value;
        const double rhs = kPi * log_integral(rho0, f);
        const double g = family_g(s.family, s.k, rho0, s.z);
        const double band = g / std::sqrt(s.z);
        LemmaSample out;
        out.params = {{"lambda", s.lambda}, {"p", s.p}, {"z", s.z}, {"k", double(s.k)},
                      {"family", double(static_cast<int>(s.family))}};
        out.lhs = lhs;
        out.rhs = rhs;
        out.ratio = std::abs(lhs - rhs) / band;
        out.note = to_string(s.family);
        rep.samples.push_back(out);
        ratios.push_back(out.ratio);
        z_groups.push_back(static_cast<int>(std::lround(std::log10(s.z))));
    }
    rep.fitted_constant = finite_max(ratios);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        auto& out = rep.samples[i];
        const double rho0 = samples[i].lambda + samples[i].p * samples[i].p;
        const double band = family_g(samples[i].family, samples[i].k, rho0, samples[i].z) / std::sqrt(samples[i].z);
        out.margin = rep.fitted_constant * band - std::abs(out.lhs - out.rhs);
        out.pass = out.margin >= -kRoundoff * std::abs(out.lhs - out.rhs);
    }
    rep.set_summary("angular_constant", angular_constant(bump, coupling));
    rep.set_summary("main_term_constant", kPi);
    rep.set_summary("coupling", coupling);
    rep.set_summary("stability_across_z", group_stability(ratios, z_groups));
    rep.notes.push_back("lhs carries coupling^2; main term uses pi, which equals the measured angular constant "
                        "only at coupling sqrt(2) when Vhat(0) = 1");
    return rep;
}

// Off-diagonal -------------------------------------------------------------

std::vector<OffdiagSample> default_offdiag_samples() {
    std::vector<OffdiagSample> out;
    const std::vector<std::pair<FFamily, int>> fams{{FFamily::UB, 1}, {FFamily::UB, 3}, {FFamily::LB, 1}, {FFamily::LB, 3}};
    const double zs[] = {1.0, 10.0, 100.0};
    int n = 0;
    for (double lambda : {1e-2, 1e-4, 1e-6})
        for (double q1 : {0.05, 0.3, 1.0})
            for (double ratio : {0.5, 1.0, 2.0, 5.0})
                for (double angle : {0.3, 2.0})
                    for (const auto& [fam, k] : fams) out.push_back({lambda, q1, ratio * q1, angle, zs[n++ % 3], k, fam});
    return out;
}

quad::Result offdiag_integral(const OffdiagSample& s, const BumpSpec& bump, double rel_tol) {
    const double R = bump.cutoff();
    const double q2 = s.q2, a = s.q2_angle;
    const double c2x = q2 * std::cos(a), c2y = q2 * std::sin(a);
    // Peak of the denominator at q₃ = -q₁, i.e. u e_t = q₂ - q₁.
    const double px = c2x - s.q1, py = c2y;
    const double u_star = std::hypot(px, py);
    const double tau_star = std::remainder(std::atan2(py, px) - a, 2.0 * kPi);
    const double f_peak = family_value(s.family, s.k, s.lambda, s.z);
    const double width = std::sqrt(s.lambda / f_peak);

    auto integrand = [&](double u, double tau) {
        const double t = a + tau;
        const double x = -c2x + u * std::cos(t);
        const double y = -c2y + u * std::sin(t);
        const double r2 = x * x + y * y;
        if (r2 <= 0.0) return 0.0;
        const double sin2 = y * y / r2;
        const double sx = s.q1 + x;
        const double d2 = sx * sx + y * y;
        const double rho = s.lambda + d2;
        return bump.v_hat_radial(std::sqrt(r2)) * sin2 / (s.lambda + d2 * family_value(s.family, s.k, rho, s.z));
    };
    auto inner = [&](double u) {
        double tmax = kPi;
        if (q2 > 0.0 && u > 0.0) {
            const double cth = (u * u + q2 * q2 - R * R) / (2.0 * u * q2);
            if (cth >= 1.0) return quad::Result{};
            if (cth > -1.0) tmax = std::acos(cth);
        }
        std::vector<double> br{0.0};
        if (u > 0.0)
            for (double m : {1.0, 4.0, 16.0, 64.0}) {
                const double d = m * (width + std::abs(u - u_star)) / u;
                br.push_back(tau_star - d);
                br.push_back(tau_star + d);
            }
        br.push_back(tau_star);
        quad::Options opt;
        opt.rel_tol = 0.1 * rel_tol;
        opt.abs_tol = 1e-300;
        return quad::integrate([&](double tau) { return integrand(u, tau); }, -tmax, tmax, opt, br);
    };
    const double u_lo = std::max(0.0, q2 - R), u_hi = q2 + R;
    std::vector<double> br{u_star, q2};
    for (double m : {1.0, 4.0, 16.0, 64.0, 256.0}) {
        br.push_back(u_star - m * width);
        br.push_back(u_star + m * width);
    }
    quad::Options opt;
    opt.rel_tol = rel_tol;
    opt.abs_tol = 1e-300;
    opt.max_intervals = 20000;
    quad::Result r = quad::integrate_nested(inner, u_lo, u_hi, opt, br);
    if (!r.converged || !std::isfinite(r.value))
        throw QuadratureFault("offdiag_integral: singular patch did not converge", r.worst_a, r.worst_b);
    r.value *= s.q1;
    r.abs_error *= s.q1;
    return r;
}

LemmaCheckReport check_offdiag(const std::vector<OffdiagSample>& samples, const BumpSpec& bump, double coupling) {
    LemmaCheckReport rep;
    rep.lemma_id = "off-diagonals";
    rep.constant_name = "C_off";
    const double b2 = coupling * coupling;
    std::vector<double> ratios;
    std::vector<int> lambda_groups;
    for (const auto& s : samples) {
        const double lhs = b2 * offdiag_integral(s, bump).value;
        const double fv = family_value(s.family, s.k, 20.0 * (s.lambda + s.q1 * s.q1), s.z);
        LemmaSample out;
        out.params = {{"lambda", s.lambda}, {"q1", s.q1}, {"q2", s.q2}, {"q2_angle", s.q2_angle},
                      {"z", s.z}, {"k", double(s.k)}, {"family", double(static_cast<int>(s.family))}};
        out.lhs = lhs;
        out.rhs = 1.0 / fv;
        out.ratio = lhs * fv;
        out.note = to_string(s.family);
        rep.samples.push_back(out);
        ratios.push_back(out.ratio);
        lambda_groups.push_back(static_cast<int>(std::lround(std::log10(s.lambda))));
    }
    rep.fitted_constant = finite_max(ratios);
    for (auto& out : rep.samples) {
        out.rhs *= rep.fitted_constant;
        out.margin = out.rhs - out.lhs;
        out.pass = out.margin >= -kRoundoff * out.lhs;
    }
    rep.set_summary("coupling", coupling);
    rep.set_summary("stability_across_lambda", group_stability(ratios, lambda_groups));
    return rep;
}

// Main lemmas ------------------------------------------------------------

std::vector<MainLemmaSample> default_main_samples() {
    std::vector<MainLemmaSample> out;
    const std::vector<double> lambdas{1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 0.2, 0.35, 0.5};
    int n = 0;
    for (double lambda : lambdas)
        for (int k = 1; k <= 6; ++k)
            for (double z : {1.5, 10.0, 100.0}) out.push_back({lambda, k, z, (n++ % 2) ? 0.1 : 0.0});
    return out;
}

MainLemmaReports check_main_lemmas(const std::vector<MainLemmaSample>& samples, const BumpSpec& bump,
                                   const BoundParams& params, double c2, double coupling) {
    params.validate();
    MainLemmaReports out;
    out.main_ub.lemma_id = "mainUB";
    out.main_ub.constant_name = "C";
    out.rho_squared.lemma_id = "rhosquared";
    out.rho_squared.constant_name = "C";
    out.main_lb.lemma_id = "mainLB";
    out.main_lb.constant_name = "C1";
    const double b2 = coupling * coupling;

    std::vector<double> r_ub, r_rho, r_lb;
    std::vector<int> decade;
    std::vector<double> lb_rhs_unit, lb_f;
    for (const auto& s : samples) {
        if (!(s.lambda > 0.0 && s.lambda < 1.0) || s.k < 1) throw DomainError("check_main_lemmas: need 0 < lambda < 1, k >= 1");
        decade.push_back(static_cast<int>(std::floor(std::log10(s.lambda))));
        const std::vector<std::pair<std::string, double>> pr{
            {"lambda", s.lambda}, {"k", double(s.k)}, {"z", s.z}, {"p", s.p}};

        // mainUB: 2π ∫ V̂ r/(λ + r² LB_k) dr  vs  ∫_λ^1 dρ/(ρ LB_k).
        {
            const double lhs = 2.0 * b2 * radial_integral(s.lambda, bump, [&](double r) {
                const double r2 = r * r;
                return 1.0 / (s.lambda + r2 * LB(s.k, s.lambda + r2, s.z));
            });
            const double integ = log_integral(s.lambda, [&](double rho) { return LB(s.k, rho, s.z); });
            LemmaSample smp{pr, lhs, integ, lhs / integ, 0.0, true, ""};
            out.main_ub.samples.push_back(smp);
            r_ub.push_back(smp.ratio);
        }
        // rhosquared: |∫ dρ/(ρ LB) - ∫ dρ/((ρ+ρ²) LB)| vs UB_k(ρ₀)/z.
        {
            const double rho0 = s.lambda + s.p * s.p;
            const double a = log_integral(rho0, [&](double rho) { return LB(s.k, rho, s.z); });
            const double b = log_integral(rho0, [&](double rho) { return (1.0 + rho) * LB(s.k, rho, s.z); });
            const double lhs = std::abs(a - b);
            const double unit = UB(s.k, rho0, s.z) / s.z;
            LemmaSample smp{pr, lhs, unit, lhs / unit, 0.0, true, ""};
            out.rho_squared.samples.push_back(smp);
            r_rho.push_back(smp.ratio);
        }
        // mainLB: π ∫ V̂ r/(λ + r² UB_{k-1}(·, z_{2k})) dr ≥ C₁ LB_k(λ, z_{2k}) - C₂ f_{2k}.
        {
            const auto [z2k, f2k] = z_f(params, 2 * s.k, 1);
            const double lhs = b2 * radial_integral(s.lambda, bump, [&](double r) {
                const double r2 = r * r;
                return 1.0 / (s.lambda + r2 * UB(s.k - 1, s.lambda + r2, z2k));
            });
            const double lbk = LB(s.k, s.lambda, z2k);
            LemmaSample smp{pr, lhs, lbk, (lhs + c2 * f2k) / lbk, 0.0, true, ""};
            smp.params.emplace_back("z2k", z2k);
            smp.params.emplace_back("f2k", f2k);
            out.main_lb.samples.push_back(smp);
            r_lb.push_back(smp.ratio);
            lb_rhs_unit.push_back(lbk);
            lb_f.push_back(f2k);
        }
    }

    out.main_ub.fitted_constant = finite_max(r_ub);
    for (auto& smp : out.main_ub.samples) {
        smp.rhs *= out.main_ub.fitted_constant;
        smp.margin = smp.rhs - smp.lhs;
        smp.pass = smp.margin >= -kRoundoff * smp.lhs;
    }
    out.main_ub.set_summary("stability_across_decades", group_stability(r_ub, decade));

    out.rho_squared.fitted_constant = finite_max(r_rho);
    for (auto& smp : out.rho_squared.samples) {
        smp.rhs *= out.rho_squared.fitted_constant;
        smp.margin = smp.rhs - smp.lhs;
        smp.pass = smp.margin >= -kRoundoff * smp.lhs;
    }
    out.rho_squared.set_summary("stability_across_decades", group_stability(r_rho, decade));

    // Largest C₁ compatible with every sample at the fixed C₂.
    double c1 = std::numeric_limits<double>::infinity();
    for (double r : r_lb) c1 = std::min(c1, r);
    out.main_lb.fitted_constant = c1;
    std::size_t vacuous = 0;
    for (std::size_t i = 0; i < out.main_lb.samples.size(); ++i) {
        auto& smp = out.main_lb.samples[i];
        smp.rhs = c1 * lb_rhs_unit[i] - c2 * lb_f[i];
        smp.margin = smp.lhs - smp.rhs;
        smp.pass = smp.margin >= -kRoundoff * (std::abs(smp.lhs) + c2 * lb_f[i]);
        if (smp.rhs <= 0.0) {
            smp.note = "vacuous";
            ++vacuous;
        }
    }
    // C₁ is a minimum over samples, so its spread is measured with inverted ratios.
    std::vector<double> inv;
    for (double r : r_lb) inv.push_back(1.0 / r);
    out.main_lb.set_summary("C2", c2);
    out.main_lb.set_summary("stability_across_decades", group_stability(inv, decade));
    out.main_lb.set_summary("vacuous_samples", static_cast<double>(vacuous));

    for (auto* r : {&out.main_ub, &out.rho_squared, &out.main_lb}) r->set_summary("coupling", coupling);
    return out;
}

} // namespace gffdrift
