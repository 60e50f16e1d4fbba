#include "gffdrift/bump_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gffdrift/errors.hpp"
#include "gffdrift/quadrature.hpp"

namespace gffdrift {

namespace {

constexpr double kLogCut = -18.0;

// Moments of the cubic spline through (x, y) with prescribed end slopes.
std::vector<double> clamped_moments(const std::vector<double>& x, const std::vector<double>& y, double d0, double dn) {
    const std::size_t n = x.size();
    std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), r(n, 0.0);
    const double h0 = x[1] - x[0];
    b[0] = 2.0 * h0;
    c[0] = h0;
    r[0] = 6.0 * ((y[1] - y[0]) / h0 - d0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hl = x[i] - x[i - 1], hr = x[i + 1] - x[i];
        a[i] = hl;
        b[i] = 2.0 * (hl + hr);
        c[i] = hr;
        r[i] = 6.0 * ((y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl);
    }
    const double hn = x[n - 1] - x[n - 2];
    a[n - 1] = hn;
    b[n - 1] = 2.0 * hn;
    r[n - 1] = 6.0 * (dn - (y[n - 1] - y[n - 2]) / hn);
    // Thomas algorithm.
    for (std::size_t i = 1; i < n; ++i) {
        const double m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        r[i] -= m * r[i - 1];
    }
    std::vector<double> M(n);
    M[n - 1] = r[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) M[i] = (r[i] - c[i] * M[i + 1]) / b[i];
    return M;
}

} // namespace

BumpSpec BumpSpec::gaussian(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("bump: sigma must be positive and finite");
    BumpSpec s;
    s.kind_ = BumpKind::Gaussian;
    s.sigma_ = sigma;
    s.cutoff_ = 6.0 / sigma;
    return s;
}

BumpSpec BumpSpec::tabulated(RadialTable table, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("bump: sigma must be positive and finite");
    const auto& r = table.radii;
    const auto& v = table.values;
    if (r.empty() || v.empty()) throw ConfigError("bump: tabulated kernel needs a non-empty table");
    if (r.size() != v.size()) throw ConfigError("bump: table radii and values differ in length");
    if (r.size() < 4) throw ConfigError("bump: table needs at least 4 radii");
    if (r[0] != 0.0) throw ConfigError("bump: first table radius must be 0");
    if (std::abs(v[0] - 1.0) > 1e-9) throw ConfigError("bump: table must satisfy U_hat(0) = 1");
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(v[i] > 0.0) || !std::isfinite(v[i])) throw ConfigError("bump: table values must be positive");
        if (i > 0 && !(r[i] > r[i - 1])) throw ConfigError("bump: table radii must increase strictly");
    }
    BumpSpec s;
    s.kind_ = BumpKind::TabulatedRadial;
    s.sigma_ = sigma;
    s.table_ = std::move(table);
    const auto& rr = s.table_.radii;
    s.log_values_.resize(rr.size());
    for (std::size_t i = 0; i < rr.size(); ++i) s.log_values_[i] = std::log(s.table_.values[i]);

    // Right-end slope from the quadratic through the last three samples.
    const std::size_t n = rr.size();
    const double x0 = rr[n - 3], x1 = rr[n - 2], x2 = rr[n - 1];
    const double y0 = s.log_values_[n - 3], y1 = s.log_values_[n - 2], y2 = s.log_values_[n - 1];
    s.tail_slope_ = y0 * (x2 - x1) / ((x0 - x1) * (x0 - x2)) + y1 * (x2 - x0) / ((x1 - x0) * (x1 - x2)) +
                    y2 * (2.0 * x2 - x0 - x1) / ((x2 - x0) * (x2 - x1));
    if (!(s.tail_slope_ < 0.0)) throw ConfigError("bump: tabulated U_hat must decay at the last radius");
    s.second_deriv_ = clamped_moments(s.table_.radii, s.log_values_, 0.0, s.tail_slope_);

    // Cutoff: first radius where log U_hat falls to the threshold.
    double lo = 0.0, hi = -1.0;
    for (std::size_t i = 1; i < n; ++i)
        if (s.log_values_[i] <= kLogCut) {
            lo = rr[i - 1];
            hi = rr[i];
            break;
        }
    if (hi < 0.0) {
        lo = rr[n - 1];
        hi = rr[n - 1] + (kLogCut - s.log_values_[n - 1]) / s.tail_slope_;
        for (std::size_t i = n - 1; i > 0; --i)
            if (s.log_values_[i] > kLogCut) {
                lo = rr[i];
                break;
            }
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (s.log_u_hat_table(mid) > kLogCut ? lo : hi) = mid;
    }
    s.cutoff_ = hi;
    return s;
}

double BumpSpec::log_u_hat_table(double r) const {
    const auto& x = table_.radii;
    const auto& y = log_values_;
    const std::size_t n = x.size();
    if (r >= x[n - 1]) return y[n - 1] + tail_slope_ * (r - x[n - 1]);
    const auto it = std::upper_bound(x.begin(), x.end(), r);
    const std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - x.begin())) - 1;
    const double h = x[i + 1] - x[i];
    const double A = x[i + 1] - r, B = r - x[i];
    const double Mi = second_deriv_[i], Mj = second_deriv_[i + 1];
    return Mi * A * A * A / (6.0 * h) + Mj * B * B * B / (6.0 * h) + (y[i] / h - Mi * h / 6.0) * A +
           (y[i + 1] / h - Mj * h / 6.0) * B;
}

double BumpSpec::u_hat_radial(double r) const {
    r = std::abs(r);
    if (kind_ == BumpKind::Gaussian) return std::exp(-0.5 * sigma_ * sigma_ * r * r);
    return std::exp(log_u_hat_table(r));
}

double BumpSpec::v_hat_radial(double r) const {
    const double u = u_hat_radial(r);
    return u * u;
}

double BumpSpec::v_real_radial(double r) const {
    r = std::abs(r);
    if (kind_ == BumpKind::Gaussian) {
        const double s2 = sigma_ * sigma_;
        return std::exp(-r * r / (4.0 * s2)) / (4.0 * std::numbers::pi * s2);
    }
    // Radial inverse transform: V(r) = (2π)^-1 ∫ V̂(k) J0(kr) k dk.
    auto integrand = [&](double k) { return v_hat_radial(k) * std::cyl_bessel_j(0.0, k * r) * k; };
    quad::Options opt;
    opt.rel_tol = 1e-12;
    opt.abs_tol = 1e-18;
    const double kmax = 1.5 * cutoff_;
    std::vector<double> breaks;
    for (int i = 1; i < 16; ++i) breaks.push_back(kmax * i / 16.0);
    const auto res = quad::integrate_checked(integrand, 0.0, kmax, opt, breaks, "v_real Hankel transform");
    return res.value / (2.0 * std::numbers::pi);
}

std::string BumpSpec::describe() const {
    std::ostringstream os;
    os << (kind_ == BumpKind::Gaussian ? "gaussian" : "tabulated-radial") << "(sigma=" << sigma_;
    if (kind_ == BumpKind::TabulatedRadial) os << ", n=" << table_.radii.size();
    os << ")";
    return os.str();
}

double u_hat(const BumpSpec& spec, const Vec2& p) { return spec.u_hat_radial(std::hypot(p[0], p[1])); }
double v_hat(const BumpSpec& spec, const Vec2& p) { return spec.v_hat_radial(std::hypot(p[0], p[1])); }
double v_real(const BumpSpec& spec, const Vec2& x) { return spec.v_real_radial(std::hypot(x[0], x[1])); }

void to_json(nlohmann::json& j, const BumpSpec& spec) {
    j = nlohmann::json{{"kind", spec.kind() == BumpKind::Gaussian ? "gaussian" : "tabulated-radial"},
                       {"sigma", spec.sigma()}};
    if (spec.kind() == BumpKind::TabulatedRadial)
        j["table"] = {{"radii", spec.table().radii}, {"values", spec.table().values}};
}

void from_json(const nlohmann::json& j, BumpSpec& spec) {
    try {
        const std::string kind = j.value("kind", std::string("gaussian"));
        const double sigma = j.value("sigma", 1.0);
        if (kind == "gaussian") {
            spec = BumpSpec::gaussian(sigma);
        } else if (kind == "tabulated-radial") {
            if (!j.contains("table")) throw ConfigError("bump: tabulated-radial kind requires a table");
            RadialTable t;
            t.radii = j.at("table").at("radii").get<std::vector<double>>();
            t.values = j.at("table").at("values").get<std::vector<double>>();
            spec = BumpSpec::tabulated(std::move(t), sigma);
        } else {
            throw ConfigError("bump: unknown kind '" + kind + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bump: malformed spec: ") + e.what());
    }
}

} // namespace gffdrift
