#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gffdrift/bump_kernel.hpp"

namespace gffdrift {

/// Default spectral normalization: with ĝ(p) = 2π/|p|² the sampled ξ has
/// increments E(ξ(x)-ξ(0))² ≈ 2 log|x| + const for 1 ≪ |x| ≪ L.
inline constexpr double kDefaultNorm = 6.283185307179586;

struct TorusGrid {
    double L = 128.0;
    int N = 256;

    double h() const { return L / N; }
    double nyquist() const;
    /// Throws ConfigError unless N ≥ 16 is a power of two, L > 0 and the
    /// Nyquist momentum exceeds the kernel cutoff.
    void validate(const BumpSpec& bump) const;
};

void to_json(nlohmann::json& j, const TorusGrid& g);
void from_json(const nlohmann::json& j, TorusGrid& g);

enum class Interpolation { Fast, Reference };

std::string to_string(Interpolation m);
Interpolation interpolation_from_string(const std::string& s);

/// One sampled environment. Spectral coefficients a_p of ξ are kept on the
/// half plane k2 ∈ [0, N/2] (FFTW r2c layout, row index k1 mod N); grid
/// samples are stored row-major with index i*N + j for x = (i h, j h).
class FieldRealization {
public:
    TorusGrid grid;
    BumpSpec bump;
    std::uint64_t seed = 0;
    double norm = 0.0;
    std::vector<std::complex<double>> xi_hat;
    std::vector<double> xi;      // empty when synthesized for drift only
    std::vector<double> omega1;
    std::vector<double> omega2;

    static FieldRealization zero(const TorusGrid& grid, const BumpSpec& bump = BumpSpec::gaussian());

    int half() const { return grid.N / 2 + 1; }
    /// Momentum of half-spectrum cell (i, j).
    Vec2 momentum(int i, int j) const;

    /// Drift ω(x); x is wrapped into the torus.
    Vec2 drift_at(const Vec2& x, Interpolation mode) const;
    /// Spectral evaluation of ξ at an arbitrary point.
    double xi_at(const Vec2& x) const;

    /// Rebuild the padded interpolation table after editing omega1/omega2.
    void rebuild_interpolation_table();

    /// max_p |p1 ω̂1 + p2 ω̂2| / (p_max · rms(ω)) after a forward FFT of the
    /// stored grid samples.
    double spectral_divergence_roundtrip() const;
    /// Same identity evaluated directly on the retained coefficients.
    double spectral_divergence_exact() const;

    double omega_rms() const;

    void save(const std::string& path) const;
    static FieldRealization load(const std::string& path);

private:
    std::vector<double> padded_;  // (N+3)^2 interleaved (ω1, ω2)
    Vec2 drift_fast(const Vec2& x) const;
    Vec2 drift_reference(const Vec2& x) const;
    friend class FieldSynthesizer;
};

/// Reusable synthesis workspace: FFTW plans, buffers and the per-mode
/// amplitude table for one (bump, grid, norm). Not shareable across threads;
/// create one per worker.
class FieldSynthesizer {
public:
    FieldSynthesizer(const BumpSpec& bump, const TorusGrid& grid, double norm);
    ~FieldSynthesizer();
    FieldSynthesizer(const FieldSynthesizer&) = delete;
    FieldSynthesizer& operator=(const FieldSynthesizer&) = delete;

    /// Fill `out` with the realization for `seed`; ξ samples only when asked.
    void synthesize(std::uint64_t seed, FieldRealization& out, bool with_xi = true);
    /// Recompute grid samples from out.xi_hat (used after loading).
    void samples_from_coefficients(FieldRealization& out, bool with_xi = true);

    /// Per-mode variance v_p = norm V̂(p) / (|p|² L²) on the half spectrum
    /// (zero for the zero mode and Nyquist rows/columns).
    const std::vector<double>& mode_variance() const { return variance_; }

private:
    BumpSpec bump_;
    TorusGrid grid_;
    double norm_;
    std::vector<double> variance_;
    std::vector<double> amplitude_;  // sqrt(v_p / 2)
    struct Plans;
    std::unique_ptr<Plans> plans_;
};

FieldRealization synthesize(const BumpSpec& bump, const TorusGrid& grid, std::uint64_t seed, double norm);

struct CovarianceRow {
    Vec2 separation;
    int k;  // component 1 or 2
    int l;
    double empirical;
    double stderr_;
    double analytic;
};

/// Analytic torus covariance E[ω_k(0) ω_l(x)] by direct sum over the
/// retained modes.
double analytic_torus_covariance(const BumpSpec& bump, const TorusGrid& grid, double norm, const Vec2& x, int k, int l);

/// Monte Carlo covariance over independent seeds. Each seed contributes the
/// spatial average over all grid base points (stationarity), so standard
/// errors are across seeds. Separations must be grid vectors.
std::vector<CovarianceRow> empirical_covariance(const BumpSpec& bump, const TorusGrid& grid, double norm,
                                                const std::vector<std::uint64_t>& seeds,
                                                const std::vector<Vec2>& separations);

void write_covariance_csv(const std::string& path, const std::vector<CovarianceRow>& rows);

/// ∫_{|p|>κ} e(p)/|p|² dp with e the trace of the drift spectral density,
/// i.e. (norm/2π) ∫_κ^∞ V̂(r)/r dr.
double peclet_integral(const BumpSpec& bump, double kappa, double norm);

} // namespace gffdrift
