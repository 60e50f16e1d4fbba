#include "gffdrift/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "gffdrift/errors.hpp"
#include "gffdrift/sde_engine.hpp"

namespace gffdrift {

namespace {

// J_n(h) = ∫_0^h s^n e^{-λ s} ds for n = 0, 1, 2, stable for small λh.
double moment(int n, double lambda, double h) {
    const double x = lambda * h;
    if (x < 0.5) {
        double term = 1.0, sum = 0.0;
        for (int k = 0; k < 40; ++k) {
            if (k > 0) term *= -x / k;
            const double add = term / (n + k + 1);
            sum += add;
            if (std::abs(add) < 1e-18 * std::abs(sum)) break;
        }
        return std::pow(h, n + 1) * sum;
    }
    const double e = std::exp(-x);
    switch (n) {
    case 0: return -std::expm1(-x) / lambda;
    case 1: return (1.0 - e * (1.0 + x)) / (lambda * lambda);
    default: return (2.0 - e * (x * x + 2.0 * x + 2.0)) / (lambda * lambda * lambda);
    }
}

// ∫_a^b e^{-λt} q(t) dt for the quadratic through three nodes.
double quad_segment(double lambda, double a, double b, const double tn[3], const double yn[3]) {
    const double s0 = tn[0] - a, s1 = tn[1] - a, s2 = tn[2] - a;
    const double d01 = (yn[1] - yn[0]) / (s1 - s0);
    const double d12 = (yn[2] - yn[1]) / (s2 - s1);
    const double d2 = (d12 - d01) / (s2 - s0);
    // q(s) = y0 + d01 (s - s0) + d2 (s - s0)(s - s1)
    const double c2 = d2;
    const double c1 = d01 - d2 * (s0 + s1);
    const double c0 = yn[0] - d01 * s0 + d2 * s0 * s1;
    const double h = b - a;
    return std::exp(-lambda * a) * (c0 * moment(0, lambda, h) + c1 * moment(1, lambda, h) + c2 * moment(2, lambda, h));
}

} // namespace

void MsdCurve::validate() const {
    if (times.empty()) throw ConfigError("curve is empty");
    if (values.size() != times.size()) throw ConfigError("curve: values and times differ in length");
    if (!stderrs.empty() && stderrs.size() != times.size()) throw ConfigError("curve: stderrs and times differ in length");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]) || !std::isfinite(values[i])) throw ConfigError("curve: non-finite entry");
        if (i > 0 && !(times[i] > times[i - 1])) throw ConfigError("curve: times must increase strictly");
    }
}

MsdCurve msd_curve(const TrajectoryEnsemble& e) {
    MsdCurve c;
    c.times = e.times;
    for (std::size_t i = 0; i < e.times.size(); ++i) {
        c.values.push_back(e.msd(i));
        c.stderrs.push_back(e.msd_stderr(i));
    }
    c.provenance = e.provenance;
    return c;
}

MsdCurve f1_curve(const TrajectoryEnsemble& e, bool symmetrized) {
    MsdCurve c;
    c.times = e.times;
    for (std::size_t i = 0; i < e.times.size(); ++i) {
        c.values.push_back(symmetrized ? e.fsym_second_moment(i) : e.f1_second_moment(i));
        c.stderrs.push_back(symmetrized ? e.fsym_second_moment_stderr(i) : e.f1_second_moment_stderr(i));
    }
    c.provenance = e.provenance;
    return c;
}

MsdCurve read_curve_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read curve " + path);
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("curve file is empty: " + path);
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    auto col = [&](std::initializer_list<const char*> names) -> int {
        for (const char* n : names)
            for (std::size_t i = 0; i < header.size(); ++i)
                if (header[i] == n) return static_cast<int>(i);
        return -1;
    };
    const int ct = col({"t", "time"});
    const int cv = col({"msd", "value", "D", "f1_var"});
    const int cs = col({"msd_stderr", "stderr", "f1_var_stderr"});
    if (ct < 0 || cv < 0) throw ConfigError("curve CSV needs a time column and a value column: " + path);
    MsdCurve c;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (static_cast<int>(row.size()) <= std::max({ct, cv, cs})) throw ConfigError("curve CSV: short row in " + path);
        c.times.push_back(row[ct]);
        c.values.push_back(row[cv]);
        c.stderrs.push_back(cs >= 0 ? row[cs] : 0.0);
    }
    c.validate();
    return c;
}

void write_curve_csv(const std::string& path, const MsdCurve& c, const std::string& value_name) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path);
    os << "t," << value_name << ",stderr\n" << std::setprecision(17);
    for (std::size_t i = 0; i < c.size(); ++i)
        os << c.times[i] << ',' << c.values[i] << ',' << (c.stderrs.empty() ? 0.0 : c.stderrs[i]) << '\n';
}

MsdCurve diffusion_coefficient(const MsdCurve& curve) {
    curve.validate();
    MsdCurve d = curve;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (!(d.times[i] > 0.0)) throw ConfigError("diffusion_coefficient: t = 0 entry rejected");
        d.values[i] /= d.times[i];
        if (!d.stderrs.empty()) d.stderrs[i] /= d.times[i];
    }
    return d;
}

std::vector<double> laplace_weights(const std::vector<double>& t, double lambda, bool extrapolate_tail) {
    const std::size_t n = t.size();
    std::vector<double> w(n, 0.0);
    // [0, t_1]: M(s) = M_1 s / t_1.
    w[0] += moment(1, lambda, t[0]) / t[0];
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = t[i + 1] - t[i];
        const double e = std::exp(-lambda * t[i]);
        const double I0 = moment(0, lambda, h), I1 = moment(1, lambda, h);
        w[i] += e * (I0 - I1 / h);
        w[i + 1] += e * I1 / h;
    }
    if (extrapolate_tail) {
        const double T = t[n - 1];
        w[n - 1] += std::exp(-lambda * T) * (1.0 / lambda + 1.0 / (lambda * lambda * T));
    }
    return w;
}

LaplaceEstimate laplace_transform(const MsdCurve& curve, double lambda, const LaplaceOptions& opt) {
    curve.validate();
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("laplace_transform requires lambda > 0");
    if (!(curve.times[0] > 0.0)) throw ConfigError("laplace_transform: first time must be positive");
    const std::size_t n = curve.size();
    const double T = curve.times.back();
    if (lambda * T < opt.min_lambda_T && !opt.extrapolate_tail)
        throw StatisticsError("laplace_transform: lambda*T = " + std::to_string(lambda * T) + " < " +
                              std::to_string(opt.min_lambda_T) + " (truncation-dominated); enable tail extrapolation");
    LaplaceEstimate est;
    est.lambda = lambda;
    est.extrapolated = opt.extrapolate_tail;
    const auto w = laplace_weights(curve.times, lambda, opt.extrapolate_tail);
    for (std::size_t i = 0; i < n; ++i) {
        est.value += w[i] * curve.values[i];
        if (!curve.stderrs.empty()) est.stat_err_bound += std::abs(w[i]) * curve.stderrs[i];
    }

    // Interpolation error: per segment, the larger deviation between the
    // linear integral and the quadratic ones through either neighbour.
    std::vector<double> tt{0.0}, yy{0.0};
    tt.insert(tt.end(), curve.times.begin(), curve.times.end());
    yy.insert(yy.end(), curve.values.begin(), curve.values.end());
    double qerr = 0.0;
    if (tt.size() >= 3) {
        for (std::size_t i = 0; i + 1 < tt.size(); ++i) {
            const double a = tt[i], b = tt[i + 1], h = b - a;
            const double lin = std::exp(-lambda * a) * (yy[i] * moment(0, lambda, h) + (yy[i + 1] - yy[i]) / h * moment(1, lambda, h));
            double dev = 0.0;
            if (i >= 1) {
                const double tn[3] = {tt[i - 1], tt[i], tt[i + 1]}, yn[3] = {yy[i - 1], yy[i], yy[i + 1]};
                dev = std::max(dev, std::abs(quad_segment(lambda, a, b, tn, yn) - lin));
            }
            if (i + 2 < tt.size()) {
                const double tn[3] = {tt[i], tt[i + 1], tt[i + 2]}, yn[3] = {yy[i], yy[i + 1], yy[i + 2]};
                dev = std::max(dev, std::abs(quad_segment(lambda, a, b, tn, yn) - lin));
            }
            qerr += dev;
        }
    }
    est.quad_err = opt.safety * qerr + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(est.value);
    est.trunc_err = std::exp(-lambda * T) * std::abs(curve.values.back()) * (1.0 / lambda + T);
    return est;
}

LaplaceEstimate drift_part_transform(const MsdCurve& f1, double lambda, const LaplaceOptions& opt) {
    return laplace_transform(f1, lambda, opt);
}

SqrtLogFit sqrtlog_fit(const MsdCurve& d, FitWindow window) {
    d.validate();
    const double t_hi = window.t_hi > 0.0 ? window.t_hi : d.times.back();
    const double t_lo = window.t_lo > 0.0 ? window.t_lo : t_hi / 100.0;
    std::vector<double> xs, ys, ws;
    bool weighted = !d.stderrs.empty();
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double t = d.times[i];
        if (t < t_lo * (1 - 1e-12) || t > t_hi * (1 + 1e-12) || t <= 1.0) continue;
        if (!(d.values[i] > 0.0)) throw FitError("sqrtlog_fit: D(t) must be positive in the window");
        xs.push_back(std::log(std::log(t)));
        ys.push_back(std::log(d.values[i]));
        const double rel = d.stderrs.empty() ? 0.0 : d.stderrs[i] / d.values[i];
        if (!(rel > 0.0)) weighted = false;
        ws.push_back(rel > 0.0 ? 1.0 / (rel * rel) : 1.0);
    }
    if (xs.size() < 8) throw FitError("sqrtlog_fit: window holds fewer than 8 points");
    double tmin = INFINITY, tmax = 0.0;
    for (double x : xs) {
        tmin = std::min(tmin, std::exp(std::exp(x)));
        tmax = std::max(tmax, std::exp(std::exp(x)));
    }
    if (tmax / tmin < 10.0 * (1 - 1e-9)) throw FitError("sqrtlog_fit: window spans less than one decade");
    if (!weighted) std::fill(ws.begin(), ws.end(), 1.0);

    double S = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        S += ws[i];
        Sx += ws[i] * xs[i];
        Sy += ws[i] * ys[i];
        Sxx += ws[i] * xs[i] * xs[i];
        Sxy += ws[i] * xs[i] * ys[i];
    }
    const double det = S * Sxx - Sx * Sx;
    if (!(std::abs(det) > 1e-300)) throw FitError("sqrtlog_fit: degenerate window");
    const double slope = (S * Sxy - Sx * Sy) / det;
    const double icpt = (Sxx * Sy - Sx * Sxy) / det;
    double chi2 = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - icpt - slope * xs[i];
        chi2 += ws[i] * r * r;
    }
    const double dof = static_cast<double>(xs.size()) - 2.0;
    // Unweighted: residual variance; weighted: inflate only if the model misfits.
    const double scale = weighted ? std::max(1.0, chi2 / dof) : chi2 / dof;
    SqrtLogFit fit;
    fit.zeta = slope;
    fit.amplitude = std::exp(icpt);
    fit.zeta_ci = 1.96 * std::sqrt(scale * S / det);
    fit.amplitude_ci = 1.96 * fit.amplitude * std::sqrt(scale * Sxx / det);
    fit.chi2_per_dof = chi2 / dof;
    fit.n_points = xs.size();
    fit.weighted = weighted;
    return fit;
}

std::vector<double> isotonic_fit(const std::vector<double>& y, const std::vector<double>& w) {
    if (y.size() != w.size()) throw ConfigError("isotonic_fit: size mismatch");
    struct Block {
        double value, weight;
        std::size_t len;
    };
    std::vector<Block> st;
    for (std::size_t i = 0; i < y.size(); ++i) {
        st.push_back({y[i], w[i], 1});
        while (st.size() > 1 && st[st.size() - 2].value > st.back().value) {
            const Block b = st.back();
            st.pop_back();
            Block& a = st.back();
            const double wt = a.weight + b.weight;
            a.value = (a.value * a.weight + b.value * b.weight) / wt;
            a.weight = wt;
            a.len += b.len;
        }
    }
    std::vector<double> out;
    for (const auto& b : st) out.insert(out.end(), b.len, b.value);
    return out;
}

std::vector<double> loglog_slope_weights(const std::vector<double>& times, double t_lo, double t_hi) {
    std::vector<double> w(times.size(), 0.0);
    std::vector<std::size_t> idx;
    double ubar = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (times[i] >= t_lo && times[i] <= t_hi) {
            idx.push_back(i);
            ubar += std::log(times[i]);
        }
    if (idx.size() < 3) throw FitError("slope functional: fewer than 3 record times in window");
    ubar /= static_cast<double>(idx.size());
    double sxx = 0.0;
    for (auto i : idx) sxx += (std::log(times[i]) - ubar) * (std::log(times[i]) - ubar);
    for (auto i : idx) w[i] = (std::log(times[i]) - ubar) / sxx / times[i];
    return w;
}

void write_lambda_sweep_csv(const std::string& path, const std::vector<LambdaSweepRow>& rows) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path);
    os << "lambda,value,quad_err,trunc_err,lower_bound_ref\n" << std::setprecision(17);
    for (const auto& r : rows)
        os << r.lambda << ',' << r.estimate.value << ',' << r.estimate.quad_err << ',' << r.estimate.trunc_err << ','
           << r.lower_bound_ref << '\n';
}

} // namespace gffdrift
