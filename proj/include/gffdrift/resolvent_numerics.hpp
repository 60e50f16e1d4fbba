#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gffdrift/bound_functions.hpp"
#include "gffdrift/bump_kernel.hpp"
#include "gffdrift/lemma_report.hpp"
#include "gffdrift/quadrature.hpp"

namespace gffdrift {

/// Multiplier f(ρ) with ρ = λ + |k|², required ≥ 1.
using RadialFunction = std::function<double(double)>;

/// Coupling at which the angular constant (see angular_constant) equals π,
/// the normalization the bound recursion c_{2k} c_{2k-1} ≈ 2π is built on.
/// With V̂(0) = 1 the bare integral carries π/2.
inline constexpr double kDefaultCoupling = 1.4142135623730950488;

/// A(k, p) = ∫_0^{2π} V̂(|k - p|) k² sin²φ / |k - p|² dφ, with φ the angle
/// between k and p. Rewrites ∫ V̂(q) sin²θ F(|p+q|) dq as ∫ k A(k,|p|) F(k) dk.
quad::Result angular_kernel(double k, double p, const BumpSpec& bump, double rel_tol = 1e-11);

/// ∫ V̂(q) sin²θ / (λ + |p+q|² f(λ+|p+q|²)) dq, θ the angle between p and q.
/// Nested adaptive quadrature in k = p + q; throws QuadratureFault.
quad::Result angular_integral(double p_norm, double lambda, const RadialFunction& f, const BumpSpec& bump,
                              double rel_tol = 1e-10);
quad::Result angular_integral(double p_norm, double lambda, const std::function<double(double, double)>& f, double z,
                              const BumpSpec& bump, double rel_tol = 1e-10);

/// Diagonal surrogate s_j(ρ) of H_j on a log-spaced grid over [λ, ρ_max],
/// monotone cubic (PCHIP) in log ρ, constant extension outside.
class RadialMultiplier {
public:
    RadialMultiplier() = default;
    /// Zero multiplier (level 1). ρ_max defaults to 10 cutoff².
    RadialMultiplier(double lambda, const BumpSpec& bump, int per_decade = 48);

    double lambda() const { return lambda_; }
    int level() const { return level_; }
    void set_level(int j) { level_ = j; }
    const std::vector<double>& rho() const { return rho_; }
    const std::vector<double>& values() const { return values_; }
    void set_values(std::vector<double> v);

    double operator()(double rho) const;
    bool nonnegative() const;
    /// Largest increase between consecutive grid values beyond rho_min.
    double max_increase(double rho_min = 0.0) const;

    void write_csv(const std::string& path) const;

private:
    double lambda_ = 0.0;
    int level_ = 1;
    std::vector<double> rho_;
    std::vector<double> log_rho_;
    std::vector<double> values_;
    std::shared_ptr<const std::function<double(double)>> interp_;
};

/// Precomputed k-quadrature of the angular kernel at every grid radius of a
/// multiplier grid, so one diagonal step is a dense contraction.
class DiagStepper {
public:
    DiagStepper(double lambda, const BumpSpec& bump, double coupling = kDefaultCoupling, int per_decade = 48);

    RadialMultiplier zero() const;
    /// s' with s'(λ+|p|²) = coupling² ∫ V̂(q) sin²θ / (λ + |p+q|²(1 + s(λ+|p+q|²))) dq.
    RadialMultiplier step(const RadialMultiplier& s) const;
    double lambda() const { return lambda_; }
    double coupling() const { return coupling_; }

private:
    double lambda_;
    double coupling_;
    int per_decade_;
    BumpSpec bump_;
    RadialMultiplier grid_;
    struct Row {
        std::vector<double> rho;     // λ + k²
        std::vector<double> k2;      // k²
        std::vector<double> weight;  // w k A(k, p)
    };
    std::vector<Row> rows_;
};

/// Single diag_step built from scratch (the stepper is preferable in loops).
RadialMultiplier diag_step(const RadialMultiplier& s, const BumpSpec& bump, double coupling = kDefaultCoupling);

/// λ² D_diag / 2 = π ∫ V̂(r) r / (λ + r²(1 + s(λ+r²))) dr.
quad::Result diag_quadratic_form(const RadialMultiplier& s, const BumpSpec& bump);

struct ResolventIteration {
    RadialMultiplier multiplier;
    double d_diag = 0.0;
    double quadratic_form = 0.0;           // λ² D_diag / 2
    std::vector<double> level_forms;       // quadratic form at levels 1..levels_done
    int levels_requested = 0;
    int levels_done = 0;
    bool early_stopped = false;            // successive iterates agreed to 1e-12
    double quad_error = 0.0;
};

/// Levels j = 1..k_levels of the diagonal recursion from s_1 ≡ 0. Odd levels
/// bound the quadratic form from above, even levels from below. k_levels ≤ 0
/// selects k_schedule(λ) + 1.
ResolventIteration iterate_resolvent(double lambda, int k_levels, const BumpSpec& bump, double coupling = kDefaultCoupling,
                                     int per_decade = 48);

/// First-harmonic profile of ψ_1 = ψ^{(2)}_1: ψ̂_1(p) = p₂ h(|p|), h = g/r.
struct ChaosKernel2 {
    std::vector<double> radii;
    std::vector<double> weights;
    std::vector<double> g;

    double h(std::size_t i) const { return g[i] / radii[i]; }
    /// ‖ψ_1‖² = π ∫ V̂(r) g(r)² / r dr.
    double energy(const BumpSpec& bump) const;
};

struct TwoLevelSolution {
    double value = 0.0;      // ⟨φ, ψ^{(2)}⟩
    double condition = 0.0;  // after Jacobi scaling
    int nodes = 0;
    ChaosKernel2 kernel;
};

/// Exact n = 2 truncated solve in the m = 1 harmonic sector with spectral
/// parameter λ and coupling β (H_2 scales as β²). The diagonal-only variant
/// drops the off-diagonal kernel. Throws NumericFault when the scaled
/// condition number exceeds 1e12.
TwoLevelSolution solve_truncated_two(double lambda, const BumpSpec& bump, int radial_resolution = 128,
                                     double coupling = kDefaultCoupling, bool diagonal_only = false);

/// ⟨φ, (λ - Δ)^{-1} φ⟩ = π ∫ V̂(r) r / (λ + r²) dr.
double free_quadratic_form(double lambda, const BumpSpec& bump);

// Auxiliary lemma audits --------------------------------------------------

enum class FFamily { UB, LB, One };
std::string to_string(FFamily f);
/// f(ρ, z) for the family at index k.
double family_value(FFamily fam, int k, double rho, double z);
/// g = L / f.
double family_g(FFamily fam, int k, double rho, double z);

struct ReplacementSample {
    double lambda;
    double p;
    double z;
    int k;
    FFamily family;
};

/// (λ, |p|, z, k) grid crossed with the three families; ≥ 200 samples.
std::vector<ReplacementSample> default_replacement_samples();

/// The coefficient a with β² ∫ V̂(q) sin²θ dq/(λ+|p+q|²) ~ a log(1/(λ+|p|²))
/// as λ+|p|² → 0, namely β² (π/2) V̂(0).
double angular_constant(const BumpSpec& bump, double coupling = kDefaultCoupling);

/// Replacement comparison: lhs is coupling² times the angular integral, rhs
/// the main term π ∫ dρ/(ρ f). Sample ratio is |lhs - rhs| √z / g(λ+|p|², z).
LemmaCheckReport check_replacement(const std::vector<ReplacementSample>& samples, const BumpSpec& bump,
                                   double coupling = kDefaultCoupling);

struct OffdiagSample {
    double lambda;
    double q1;        // |q₁|, q₁ along the first axis
    double q2;        // |q₂|
    double q2_angle;  // direction of q₂
    double z;
    int k;
    FFamily family;   // UB or LB
};

std::vector<OffdiagSample> default_offdiag_samples();

/// |q₁| ∫ V̂(q₃) sin²θ / ((λ + |q₁+q₃|² f) |q₂+q₃|) dq₃ in polar coordinates
/// centred at q₃ = -q₂.
quad::Result offdiag_integral(const OffdiagSample& s, const BumpSpec& bump, double rel_tol = 1e-8);

LemmaCheckReport check_offdiag(const std::vector<OffdiagSample>& samples, const BumpSpec& bump,
                               double coupling = kDefaultCoupling);

struct MainLemmaSample {
    double lambda;
    int k;
    double z;
    double p;  // |p| for the ρ² comparison
};

std::vector<MainLemmaSample> default_main_samples();

struct MainLemmaReports {
    LemmaCheckReport main_ub;
    LemmaCheckReport rho_squared;
    LemmaCheckReport main_lb;
};

/// mainLB uses z_{2k}(1), f_{2k}(1) from `params` and a fixed C₂ (C₁ fitted).
MainLemmaReports check_main_lemmas(const std::vector<MainLemmaSample>& samples, const BumpSpec& bump,
                                   const BoundParams& params = {}, double c2 = 1.0, double coupling = kDefaultCoupling);

/// max/min of per-group maxima; groups keyed by a label per sample.
double group_stability(const std::vector<double>& ratios, const std::vector<int>& groups);

} // namespace gffdrift
