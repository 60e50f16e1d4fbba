#pragma once

#include <array>
#include <string>
#include <vector>

#include "json.hpp"

namespace gffdrift {

using Vec2 = std::array<double, 2>;

enum class BumpKind { Gaussian, TabulatedRadial };

/// Radial samples of the mollifier transform Û at increasing radii; the
/// first radius must be 0 with Û(0) = 1.
struct RadialTable {
    std::vector<double> radii;
    std::vector<double> values;
};

/// Radially symmetric mollifier U and covariance kernel V = U*U.
///
/// Fourier convention: f̂(p) = ∫ f(x) exp(-i p.x) dx, inverse with (2π)^-2.
/// The tabulated kind interpolates log Û with a clamped cubic spline: zero
/// slope at the origin, and at the last radius the slope of the quadratic
/// through the last three samples, which also continues log Û linearly
/// beyond the table.
class BumpSpec {
public:
    static BumpSpec gaussian(double sigma = 1.0);
    static BumpSpec tabulated(RadialTable table, double sigma = 1.0);

    BumpKind kind() const { return kind_; }
    double sigma() const { return sigma_; }
    const RadialTable& table() const { return table_; }

    /// Û(r) and V̂(r) = Û(r)^2 at radius r = |p|.
    double u_hat_radial(double r) const;
    double v_hat_radial(double r) const;

    /// Radius beyond which Û < exp(-18), i.e. V̂ < 1e-15.6; 6/σ for the
    /// gaussian kind.
    double cutoff() const { return cutoff_; }

    /// V at radius |x|; closed form for gaussian, Hankel transform otherwise.
    double v_real_radial(double r) const;

    std::string describe() const;

private:
    BumpKind kind_ = BumpKind::Gaussian;
    double sigma_ = 1.0;
    RadialTable table_;
    std::vector<double> log_values_;
    std::vector<double> second_deriv_;  // spline moments of log Û
    double tail_slope_ = 0.0;
    double cutoff_ = 6.0;

    double log_u_hat_table(double r) const;
};

double u_hat(const BumpSpec& spec, const Vec2& p);
double v_hat(const BumpSpec& spec, const Vec2& p);
double v_real(const BumpSpec& spec, const Vec2& x);

void to_json(nlohmann::json& j, const BumpSpec& spec);
void from_json(const nlohmann::json& j, BumpSpec& spec);

} // namespace gffdrift
