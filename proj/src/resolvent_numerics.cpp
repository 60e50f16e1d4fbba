#include "gffdrift/resolvent_numerics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <Eigen/Dense>
// pchip.hpp in Boost 1.74 calls isnan unqualified
#include <boost/math/special_functions/fpclassify.hpp>
#include <boost/math/interpolators/pchip.hpp>

#include "gffdrift/errors.hpp"

namespace gffdrift {

namespace {

constexpr double kPi = std::numbers::pi;

// Partition of [0, kmax] for k-integrals at external momentum p: geometric
// cells from well below the smallest scale, plus a refinement toward the
// kink of A(k, p) at k = p.
std::vector<double> k_edges(double p, double lambda, double kmax, double per_decade) {
    const double sl = std::sqrt(lambda);
    const double scale = p > 0.0 ? std::min(sl, p) : sl;
    const double lo = 1e-3 * scale;
    std::vector<double> extra{sl};
    if (p > 0.0) {
        extra.push_back(p);
        for (int j = 1; j <= 12; ++j) {
            const double d = std::ldexp(p, -j);
            extra.push_back(p - d);
            extra.push_back(p + d);
        }
    }
    std::vector<double> keep;
    for (double e : extra)
        if (e > lo && e < kmax) keep.push_back(e);
    std::vector<double> edges = quad::geometric_edges(lo, kmax, per_decade, keep);
    edges.insert(edges.begin(), 0.0);
    return edges;
}

double interp_s(const RadialMultiplier& s, double rho) { return s(rho); }

} // namespace

quad::Result angular_kernel(double k, double p, const BumpSpec& bump, double rel_tol) {
    quad::Result r;
    if (k <= 0.0) return r;
    if (p <= 0.0) {
        r.value = kPi * bump.v_hat_radial(k);
        return r;
    }
    const double delta = k - p;
    const double kp = k * p;
    const double sig = bump.sigma();
    auto f = [&](double phi) {
        const double s2 = std::sin(0.5 * phi);
        const double d2 = delta * delta + 4.0 * kp * s2 * s2;
        if (d2 <= 0.0) return bump.v_hat_radial(0.0) * k / p;
        const double sn = std::sin(phi);
        return bump.v_hat_radial(std::sqrt(d2)) * k * k * sn * sn / d2;
    };
    std::vector<double> br;
    const double w = std::abs(delta) / std::sqrt(kp);
    for (double m : {1.0, 4.0, 16.0})
        if (m * w < kPi) br.push_back(m * w);
    const double wv = 1.0 / (sig * std::sqrt(kp));
    for (double m : {1.0, 3.0, 6.0})
        if (m * wv < kPi) br.push_back(m * wv);
    quad::Options opt;
    opt.rel_tol = rel_tol;
    opt.abs_tol = 1e-300;
    r = quad::integrate(f, 0.0, kPi, opt, br);
    r.value *= 2.0;
    r.abs_error *= 2.0;
    return r;
}

quad::Result angular_integral(double p_norm, double lambda, const RadialFunction& f, const BumpSpec& bump,
                              double rel_tol) {
    if (!(p_norm >= 0.0) || !(lambda > 0.0)) throw DomainError("angular_integral: need |p| >= 0 and lambda > 0");
    const double kmax = p_norm + bump.cutoff();
    const std::vector<double> edges = k_edges(p_norm, lambda, kmax, 3.0);
    auto inner = [&](double k) {
        quad::Result a = angular_kernel(k, p_norm, bump, 0.1 * rel_tol);
        const double rho = lambda + k * k;
        const double fv = f(rho);
        const double scale = k / (lambda + k * k * fv);
        a.value *= scale;
        a.abs_error *= scale;
        return a;
    };
    quad::Options opt;
    opt.rel_tol = rel_tol;
    opt.abs_tol = 1e-300;
    opt.max_intervals = 20000;
    quad::Result r = quad::integrate_nested(inner, 0.0, kmax, opt, std::span<const double>(edges).subspan(1));
    if (!r.converged || !std::isfinite(r.value))
        throw QuadratureFault("angular_integral: refinement did not converge near k = " + std::to_string(r.worst_a),
                              r.worst_a, r.worst_b);
    return r;
}

quad::Result angular_integral(double p_norm, double lambda, const std::function<double(double, double)>& f, double z,
                              const BumpSpec& bump, double rel_tol) {
    return angular_integral(p_norm, lambda, RadialFunction([&](double rho) { return f(rho, z); }), bump, rel_tol);
}

// RadialMultiplier -------------------------------------------------------

RadialMultiplier::RadialMultiplier(double lambda, const BumpSpec& bump, int per_decade) : lambda_(lambda) {
    if (!(lambda > 0.0)) throw DomainError("RadialMultiplier: lambda must be positive");
    if (per_decade < 4) throw ConfigError("RadialMultiplier: need at least 4 points per decade");
    const double rho_max = 10.0 * bump.cutoff() * bump.cutoff();
    if (!(rho_max > lambda)) throw DomainError("RadialMultiplier: lambda beyond the grid range");
    const double decades = std::log10(rho_max / lambda);
    const int n = std::max(4, static_cast<int>(std::ceil(decades * per_decade)) + 1);
    rho_.resize(n);
    log_rho_.resize(n);
    const double l0 = std::log(lambda), l1 = std::log(rho_max);
    for (int i = 0; i < n; ++i) {
        log_rho_[i] = l0 + (l1 - l0) * i / (n - 1);
        rho_[i] = std::exp(log_rho_[i]);
    }
    rho_.front() = lambda;
    rho_.back() = rho_max;
    set_values(std::vector<double>(n, 0.0));
}

void RadialMultiplier::set_values(std::vector<double> v) {
    if (v.size() != rho_.size()) throw ConfigError("RadialMultiplier: value count does not match the grid");
    values_ = std::move(v);
    const bool flat = std::all_of(values_.begin(), values_.end(), [&](double x) { return x == values_.front(); });
    if (flat) {
        const double c = values_.front();
        interp_ = std::make_shared<const std::function<double(double)>>([c](double) { return c; });
        return;
    }
    auto x = log_rho_;
    auto y = values_;
    boost::math::interpolators::pchip<std::vector<double>> p(std::move(x), std::move(y));
    interp_ = std::make_shared<const std::function<double(double)>>(std::move(p));
}

double RadialMultiplier::operator()(double rho) const {
    if (rho <= rho_.front()) return values_.front();
    if (rho >= rho_.back()) return values_.back();
    return (*interp_)(std::log(rho));
}

bool RadialMultiplier::nonnegative() const {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return x >= 0.0; });
}

double RadialMultiplier::max_increase(double rho_min) const {
    double worst = 0.0;
    for (std::size_t i = 1; i < values_.size(); ++i)
        if (rho_[i - 1] >= rho_min) worst = std::max(worst, values_[i] - values_[i - 1]);
    return worst;
}

void RadialMultiplier::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out.precision(17);
    out << "rho,s\n";
    for (std::size_t i = 0; i < rho_.size(); ++i) out << rho_[i] << ',' << values_[i] << '\n';
}

// Diagonal step ----------------------------------------------------------

DiagStepper::DiagStepper(double lambda, const BumpSpec& bump, double coupling, int per_decade)
    : lambda_(lambda), coupling_(coupling), per_decade_(per_decade), bump_(bump), grid_(lambda, bump, per_decade) {
    if (!(coupling >= 0.0)) throw ConfigError("DiagStepper: coupling must be nonnegative");
    const auto& rho = grid_.rho();
    rows_.resize(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) {
        const double p = std::sqrt(std::max(0.0, rho[i] - lambda));
        const double kmax = p + bump.cutoff();
        const auto edges = k_edges(p, lambda, kmax, 4.0);
        const quad::FixedRule rule = quad::composite_rule(edges, 10);
        Row& row = rows_[i];
        for (std::size_t n = 0; n < rule.nodes.size(); ++n) {
            const double k = rule.nodes[n];
            const double a = angular_kernel(k, p, bump, 1e-11).value;
            const double w = rule.weights[n] * k * a;
            if (!(w > 0.0)) continue;
            row.rho.push_back(lambda + k * k);
            row.k2.push_back(k * k);
            row.weight.push_back(w);
        }
    }
}

RadialMultiplier DiagStepper::zero() const { return grid_; }

RadialMultiplier DiagStepper::step(const RadialMultiplier& s) const {
    if (s.rho().size() != grid_.rho().size() || s.lambda() != lambda_)
        throw ConfigError("diag_step: multiplier grid does not match the stepper");
    const double c2 = coupling_ * coupling_;
    std::vector<double> out(rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const Row& row = rows_[i];
        double acc = 0.0;
        for (std::size_t n = 0; n < row.weight.size(); ++n)
            acc += row.weight[n] / (lambda_ + row.k2[n] * (1.0 + interp_s(s, row.rho[n])));
        out[i] = c2 * acc;
    }
    RadialMultiplier next = grid_;
    next.set_values(std::move(out));
    next.set_level(s.level() + 1);
    return next;
}

RadialMultiplier diag_step(const RadialMultiplier& s, const BumpSpec& bump, double coupling) {
    const int per_decade = static_cast<int>(
        std::lround((s.rho().size() - 1) / std::log10(s.rho().back() / s.rho().front())));
    DiagStepper st(s.lambda(), bump, coupling, per_decade);
    return st.step(s);
}

quad::Result diag_quadratic_form(const RadialMultiplier& s, const BumpSpec& bump) {
    const double lambda = s.lambda();
    const double rmax = 1.2 * bump.cutoff();
    auto f = [&](double r) {
        const double r2 = r * r;
        return bump.v_hat_radial(r) * r / (lambda + r2 * (1.0 + s(lambda + r2)));
    };
    std::vector<double> br;
    for (double r = 1e-3 * std::sqrt(lambda); r < rmax; r *= 3.0) br.push_back(r);
    quad::Options opt;
    opt.rel_tol = 1e-11;
    quad::Result r = quad::integrate_checked(f, 0.0, rmax, opt, br, "diag_quadratic_form");
    r.value *= kPi;
    r.abs_error *= kPi;
    return r;
}

double free_quadratic_form(double lambda, const BumpSpec& bump) {
    RadialMultiplier zero(lambda, bump, 4);
    return diag_quadratic_form(zero, bump).value;
}

ResolventIteration iterate_resolvent(double lambda, int k_levels, const BumpSpec& bump, double coupling,
                                     int per_decade) {
    if (!(lambda >= 1e-12 && lambda < 1.0)) throw DomainError("iterate_resolvent: lambda must lie in [1e-12, 1)");
    if (k_levels <= 0) k_levels = k_schedule(lambda) + 1;
    ResolventIteration it;
    it.levels_requested = k_levels;
    DiagStepper stepper(lambda, bump, coupling, per_decade);
    RadialMultiplier s = stepper.zero();
    auto record = [&] {
        const quad::Result q = diag_quadratic_form(s, bump);
        it.level_forms.push_back(q.value);
        it.quad_error = std::max(it.quad_error, q.abs_error);
    };
    record();
    it.levels_done = 1;
    for (int j = 2; j <= k_levels; ++j) {
        RadialMultiplier next = stepper.step(s);
        double diff = 0.0, scale = 1.0;
        for (std::size_t i = 0; i < next.values().size(); ++i) {
            diff = std::max(diff, std::abs(next.values()[i] - s.values()[i]));
            scale = std::max(scale, std::abs(next.values()[i]));
        }
        s = std::move(next);
        record();
        it.levels_done = j;
        if (diff < 1e-12 * scale) {
            it.early_stopped = true;
            break;
        }
    }
    it.quadratic_form = it.level_forms.back();
    it.d_diag = 2.0 * it.quadratic_form / (lambda * lambda);
    it.multiplier = std::move(s);
    return it;
}

// Two-level truncated solve ----------------------------------------------

double ChaosKernel2::energy(const BumpSpec& bump) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i) acc += weights[i] * bump.v_hat_radial(radii[i]) * g[i] * g[i] / radii[i];
    return kPi * acc;
}

TwoLevelSolution solve_truncated_two(double lambda, const BumpSpec& bump, int radial_resolution, double coupling,
                                     bool diagonal_only) {
    if (!(lambda > 0.0)) throw DomainError("solve_truncated_two: lambda must be positive");
    if (radial_resolution < 64) throw ConfigError("solve_truncated_two: need at least 64 radial nodes");
    constexpr int order = 8;
    const int panels = (radial_resolution + order - 1) / order;
    const double rmax = bump.cutoff();
    const double rlo = 0.05 * std::min(1.0, std::sqrt(lambda));
    const double per_decade = (panels - 1) / std::log10(rmax / rlo);
    std::vector<double> edges = quad::geometric_edges(rlo, rmax, per_decade);
    edges.insert(edges.begin(), 0.0);
    const quad::FixedRule rule = quad::composite_rule(edges, order);
    const std::size_t n = rule.nodes.size();
    const double b2 = coupling * coupling;

    std::vector<double> r = rule.nodes, w = rule.weights, vw(n), s2(n);
    for (std::size_t i = 0; i < n; ++i) vw[i] = bump.v_hat_radial(r[i]) * w[i];

    // s₂(r) = ∫ r' V̂(r') I₀(r, r') dr', I₀ = 2π / (a + √(a² - b²)).
    const double sl = std::sqrt(lambda);
    for (std::size_t i = 0; i < n; ++i) {
        const double ri = r[i];
        auto f = [&](double rp) {
            const double a_m_b = lambda + (ri - rp) * (ri - rp);
            const double a_p_b = lambda + (ri + rp) * (ri + rp);
            const double a = lambda + ri * ri + rp * rp;
            return rp * bump.v_hat_radial(rp) * 2.0 * kPi / (a + std::sqrt(a_m_b * a_p_b));
        };
        std::vector<double> br{ri, ri - sl, ri + sl, ri - 0.1 * sl, ri + 0.1 * sl};
        quad::Options opt;
        opt.rel_tol = 1e-12;
        s2[i] = b2 * quad::integrate_checked(f, 0.0, 1.2 * rmax, opt, br, "solve_truncated_two s2").value;
    }

    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = vw[i] / r[i] * (lambda + r[i] * r[i] * (1.0 + s2[i]));
        rhs(i) = vw[i];
    }
    if (!diagonal_only) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                const double a = lambda + r[i] * r[i] + r[j] * r[j];
                const double b = 2.0 * r[i] * r[j];
                const double root = std::sqrt((lambda + (r[i] - r[j]) * (r[i] - r[j])) *
                                              (lambda + (r[i] + r[j]) * (r[i] + r[j])));
                const double jv = -kPi * b / ((a + root) * (a + root));
                const double e = -b2 * vw[i] * r[i] * vw[j] * r[j] * jv;
                m(i, j) += e;
                if (j != i) m(j, i) += e;
            }
    }

    const Eigen::VectorXd d = m.diagonal().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd scaled = d.asDiagonal() * m * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled, Eigen::EigenvaluesOnly);
    const double emin = es.eigenvalues().minCoeff(), emax = es.eigenvalues().maxCoeff();
    const double cond = emin > 0.0 ? emax / emin : std::numeric_limits<double>::infinity();
    if (!(cond <= 1e12)) throw NumericFault("solve_truncated_two: resolution fault, condition estimate " + std::to_string(cond));

    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw NumericFault("solve_truncated_two: matrix not positive definite");
    const Eigen::VectorXd g = llt.solve(rhs);

    TwoLevelSolution out;
    out.value = kPi * rhs.dot(g);
    out.condition = cond;
    out.nodes = static_cast<int>(n);
    out.kernel.radii = r;
    out.kernel.weights = w;
    out.kernel.g.assign(g.data(), g.data() + n);
    return out;
}

} // namespace gffdrift
