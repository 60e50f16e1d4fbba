#pragma once

/// @file quadrature.hpp
/// @brief Globally adaptive Gauss-Kronrod quadrature (21-point Kronrod
///        extension of the 10-point Gauss rule) with breakpoints, plus a
///        nested two-dimensional driver for polar patches.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gffdrift/errors.hpp"

namespace gffdrift::quad {

struct Options {
    double rel_tol = 1e-10;
    double abs_tol = 0.0;
    int max_intervals = 4000;
};

struct Result {
    double value = 0.0;
    double abs_error = 0.0;
    long evaluations = 0;
    int intervals = 0;
    bool converged = true;
    /// Interval carrying the largest error contribution at termination.
    double worst_a = 0.0;
    double worst_b = 0.0;
};

namespace detail {

// Abscissae and weights of the 21-point Kronrod rule and the embedded
// 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> xgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> wgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525452722, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> wg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
    double a, b, value, error;
};

template <class F>
Segment gk21(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = static_cast<double>(f(center));
    double resk = fc * wgk[10];
    double resg = 0.0;
    double resabs = std::abs(resk);
    std::array<double, 10> f1{}, f2{};
    for (int j = 0; j < 10; ++j) {
        const double dx = half * xgk[j];
        f1[j] = static_cast<double>(f(center - dx));
        f2[j] = static_cast<double>(f(center + dx));
        const double s = f1[j] + f2[j];
        resk += wgk[j] * s;
        resabs += wgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
        if (j % 2 == 1) resg += wg[j / 2] * s;
    }
    const double mean = 0.5 * resk;
    double resasc = wgk[10] * std::abs(fc - mean);
    for (int j = 0; j < 10; ++j) resasc += wgk[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));

    const double ahalf = std::abs(half);
    resk *= half;
    resg *= half;
    resabs *= ahalf;
    resasc *= ahalf;
    double err = std::abs(resk - resg);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
    return {a, b, resk, err};
}

} // namespace detail

/// Adaptive integral of f over [a, b]. Breakpoints inside (a, b) seed the
/// initial partition; they should mark kinks, peaks and discontinuities.
/// Never throws; check Result::converged.
template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}, std::span<const double> breaks = {}) {
    Result res;
    if (a == b) return res;
    double sign = 1.0;
    if (b < a) {
        std::swap(a, b);
        sign = -1.0;
    }
    std::vector<double> nodes{a};
    for (double x : breaks)
        if (x > a && x < b) nodes.push_back(x);
    nodes.push_back(b);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

    auto cmp = [](const detail::Segment& x, const detail::Segment& y) { return x.error < y.error; };
    std::vector<detail::Segment> heap;
    heap.reserve(64);
    double total = 0.0, total_err = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        heap.push_back(detail::gk21(f, nodes[i], nodes[i + 1]));
        total += heap.back().value;
        total_err += heap.back().error;
        res.evaluations += 21;
    }
    std::make_heap(heap.begin(), heap.end(), cmp);

    auto tolerance = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };
    while (total_err > tolerance()) {
        if (static_cast<int>(heap.size()) >= opt.max_intervals) {
            res.converged = false;
            break;
        }
        std::pop_heap(heap.begin(), heap.end(), cmp);
        const detail::Segment worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // Interval cannot be split further in floating point.
            heap.push_back(worst);
            std::push_heap(heap.begin(), heap.end(), cmp);
            res.converged = false;
            break;
        }
        const detail::Segment left = detail::gk21(f, worst.a, mid);
        const detail::Segment right = detail::gk21(f, mid, worst.b);
        res.evaluations += 42;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push_back(left);
        std::push_heap(heap.begin(), heap.end(), cmp);
        heap.push_back(right);
        std::push_heap(heap.begin(), heap.end(), cmp);
    }
    // Re-sum to shed the drift of the running totals.
    total = 0.0;
    total_err = 0.0;
    for (const auto& s : heap) {
        total += s.value;
        total_err += s.error;
    }
    const auto worst = std::max_element(heap.begin(), heap.end(), cmp);
    res.value = sign * total;
    res.abs_error = total_err;
    res.intervals = static_cast<int>(heap.size());
    res.worst_a = worst->a;
    res.worst_b = worst->b;
    if (!res.converged && total_err <= tolerance()) res.converged = true;
    return res;
}

/// As integrate(), but raises QuadratureFault with the worst cell when the
/// refinement budget is exhausted before reaching the tolerance.
template <class F>
Result integrate_checked(F&& f, double a, double b, const Options& opt = {}, std::span<const double> breaks = {},
                         const char* context = "integral") {
    Result r = integrate(std::forward<F>(f), a, b, opt, breaks);
    if (!r.converged || !std::isfinite(r.value))
        throw QuadratureFault(std::string(context) + ": adaptive refinement did not converge (error " +
                                  std::to_string(r.abs_error) + " on value " + std::to_string(r.value) +
                                  ", worst cell [" + std::to_string(r.worst_a) + ", " + std::to_string(r.worst_b) + "])",
                              r.worst_a, r.worst_b);
    return r;
}

/// Nested 2d integral  ∫_a^b dx ∫ inner(x).  The inner callable returns a
/// Result for fixed x; its error is folded into the outer estimate.
template <class Inner>
Result integrate_nested(Inner&& inner, double a, double b, const Options& outer_opt,
                        std::span<const double> outer_breaks = {}) {
    double inner_err_abs_sum = 0.0;
    double inner_abs_sum = 0.0;
    long inner_evals = 0;
    bool inner_ok = true;
    double bad_x = 0.0;
    auto f = [&](double x) {
        const Result r = inner(x);
        inner_evals += r.evaluations;
        inner_err_abs_sum += r.abs_error;
        inner_abs_sum += std::abs(r.value);
        if (!r.converged && inner_ok) {
            inner_ok = false;
            bad_x = x;
        }
        return r.value;
    };
    Result out = integrate(f, a, b, outer_opt, outer_breaks);
    // Inner errors are relative in aggregate: scale the mean relative inner
    // error onto the outer magnitude.
    const double rel_inner = inner_abs_sum > 0.0 ? inner_err_abs_sum / inner_abs_sum : 0.0;
    out.abs_error += rel_inner * std::abs(out.value);
    out.evaluations += inner_evals;
    if (!inner_ok) {
        out.converged = false;
        out.worst_a = out.worst_b = bad_x;
    }
    return out;
}

/// Fixed composite Gauss-Legendre rule on a partition; used where the same
/// nodes are reused many times (resolvent iteration, Galerkin solves).
struct FixedRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Legendre nodes/weights on [-1, 1] of the given order (Newton on P_n).
FixedRule gauss_legendre(int order);

/// Composite rule: each consecutive pair of `edges` carries one copy of the
/// Gauss-Legendre rule of the given order.
FixedRule composite_rule(std::span<const double> edges, int order);

/// Geometric partition of [lo, hi] (lo > 0) with `per_decade` cells per
/// decade, merged with the extra edges (deduplicated, sorted).
std::vector<double> geometric_edges(double lo, double hi, double per_decade, std::span<const double> extra = {});

} // namespace gffdrift::quad
