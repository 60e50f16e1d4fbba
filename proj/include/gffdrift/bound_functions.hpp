#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gffdrift/lemma_report.hpp"

namespace gffdrift {

// L(x,z) = z + log(1 + 1/x)
double L(double x, double z);

/// Partial exponential sum Σ_{j≤k} (½ log L)^j / j!. Requires L(x,z) ≥ 1.
double LB(int k, double x, double z);
double UB(int k, double x, double z);

/// σ_k: UB_{(k-2)/2} for even k, LB_{(k-1)/2} for odd k.
double sigma_k(int k, double x, double z);

enum class C3Policy { Literal, Floor, Skip };

std::string to_string(C3Policy p);
C3Policy c3_policy_from_string(const std::string& s);

struct BoundParams {
    double eps = 0.1;
    double K1 = 100.0;
    double K2 = 10.0;
    C3Policy c3_policy = C3Policy::Floor;
    double delta = 0.5;  // replacement for the vanishing k=1 odd factor under Floor

    void validate() const;
};

void to_json(nlohmann::json& j, const BoundParams& p);
void from_json(const nlohmann::json& j, BoundParams& p);

/// (z_k(n), f_k(n)) = (K1 (n+k)^{2+2ε}, K2 √z).
std::pair<double, double> z_f(const BoundParams& params, int k, int n);

struct CSequence {
    std::vector<double> c;  // c[i] is c_i; c[0] unused
    double eps = 0.0;
    C3Policy policy = C3Policy::Floor;
    double delta = 0.5;
    bool policy_applied = false;

    // Subsequence limits from tail-corrected partial products; converged when
    // the accelerated estimates at K and K/2 agree to the Cauchy tolerance.
    bool converged = false;
    double odd_limit = 0.0;
    double even_limit = 0.0;
    double cauchy_gap = 0.0;       // |est(K) - est(K/2)| / est(K), odd subsequence
    double raw_odd_gap = 0.0;      // |c_{2K+1} - c_{K+1 or so}| of the plain partial products
    double raw_tail_estimate = 0.0;  // relative distance of c_{2K+1} from the limit

    double at(int i) const { return c.at(static_cast<std::size_t>(i)); }
    int kmax() const { return static_cast<int>(c.size()) - 1; }
};

/// c_1 = 1, c_{2k} = (2π/c_{2k-1})(1 + k^{-1-ε}), c_{2k+1} = (2π/c_{2k})(1 - k^{-1-ε}).
CSequence c_sequence(double eps, int kmax, C3Policy policy, double delta = 0.5, double cauchy_tol = 1e-10);

/// c_3 times the closed product Π_{j=2..k} (1 - j^{-1-ε})/(1 + j^{-1-ε}),
/// evaluated independently of the recursion (log-sum in extended precision).
double c_odd_closed_form(double c3, double eps, int k);

/// Same closed form for every k = 1..kmax_k in one pass; element k-1 is c_{2k+1}.
std::vector<double> c_odd_closed_forms(double c3, double eps, int kmax_k);

/// k(λ) = floor(log L(λ,0) / 2), clamped at 0 where L(λ,0) < 1.
int k_schedule(double lambda);

/// Theorem bracket C∓ (log|log λ|)^{∓(3/2+ε)} √|log λ| / λ².
std::pair<double, double> envelope(double lambda, double eps, double c_minus, double c_plus);

/// Right side of the Stirling control e√k exp(k log(2k/(e log L(λ,0)))).
double stirling_bound(double lambda, int k);

struct IdentityPoint {
    int k;
    double x;
    double z;
};

struct IdentityInterval {
    int k;
    double a;
    double b;
    double z;
};

struct IdentitySamples {
    std::vector<IdentityPoint> points;
    std::vector<IdentityInterval> intervals;
};

/// Random samples in the lemma domain: k ≤ 8, x ∈ [1e-10, 10] log-uniform,
/// z ∈ [1, 1e3] log-uniform.
IdentitySamples random_identity_samples(std::size_t n_points, std::size_t n_intervals, std::uint64_t seed);

/// Derivative formulas by Richardson-extrapolated central differences,
/// sandwich chain, and both candidate forms of the integral identity.
LemmaCheckReport check_identities(const IdentitySamples& samples);

struct FittedConstants {
    double c_diag = 1.0;
    double c_off = 1.0;
    double c_rho = 1.0;
};

/// Conditions imposed on K1, K2 in the upper/lower bound induction, checked
/// for 1 ≤ k, n ≤ kmax with the supplied fitted lemma constants.
LemmaCheckReport validate_K1K2(const BoundParams& params, const FittedConstants& constants, int kmax = 64);

} // namespace gffdrift
