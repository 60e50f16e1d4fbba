#include "gffdrift/quadrature.hpp"

#include <numbers>

namespace gffdrift::quad {

FixedRule gauss_legendre(int order) {
    if (order < 1) throw ConfigError("gauss_legendre: order must be >= 1");
    FixedRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const int m = (order + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (order == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute derivative at the converged root.
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= order; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = order * (x * p1 - p0) / (x * x - 1.0);
        if (order == 1) {
            x = 0.0;
            dp = 1.0;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[order - 1 - i] = x;
        rule.weights[i] = rule.weights[order - 1 - i] = (order == 1) ? 2.0 : w;
    }
    return rule;
}

FixedRule composite_rule(std::span<const double> edges, int order) {
    const FixedRule base = gauss_legendre(order);
    FixedRule out;
    if (edges.size() < 2) return out;
    out.nodes.reserve((edges.size() - 1) * order);
    out.weights.reserve((edges.size() - 1) * order);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double c = 0.5 * (edges[i] + edges[i + 1]);
        const double h = 0.5 * (edges[i + 1] - edges[i]);
        for (int j = 0; j < order; ++j) {
            out.nodes.push_back(c + h * base.nodes[j]);
            out.weights.push_back(h * base.weights[j]);
        }
    }
    return out;
}

std::vector<double> geometric_edges(double lo, double hi, double per_decade, std::span<const double> extra) {
    if (!(lo > 0.0) || !(hi > lo) || !(per_decade > 0.0)) throw ConfigError("geometric_edges: need 0 < lo < hi");
    const double decades = std::log10(hi / lo);
    const int cells = std::max(1, static_cast<int>(std::ceil(decades * per_decade)));
    std::vector<double> edges;
    edges.reserve(cells + 1 + extra.size());
    for (int i = 0; i <= cells; ++i) edges.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / cells));
    edges.back() = hi;
    for (double x : extra)
        if (x > lo && x < hi) edges.push_back(x);
    std::sort(edges.begin(), edges.end());
    // Drop edges closer than a relative 1e-9 to their predecessor.
    std::vector<double> clean{edges.front()};
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (edges[i] > clean.back() * (1.0 + 1e-9)) clean.push_back(edges[i]);
    if (clean.back() != hi) clean.back() = hi;
    return clean;
}

} // namespace gffdrift::quad
