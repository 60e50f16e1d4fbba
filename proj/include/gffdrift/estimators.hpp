#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace gffdrift {

class TrajectoryEnsemble;

struct MsdCurve {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> stderrs;  // may be all zero for exact curves
    nlohmann::json provenance;

    void validate() const;
    std::size_t size() const { return times.size(); }
};

MsdCurve msd_curve(const TrajectoryEnsemble& e);
/// E[F1(t)²]; `symmetrized` uses (F1² + F2²)/2, which has the same mean.
MsdCurve f1_curve(const TrajectoryEnsemble& e, bool symmetrized = false);

MsdCurve read_curve_csv(const std::string& path);
void write_curve_csv(const std::string& path, const MsdCurve& c, const std::string& value_name = "value");

/// D(t) = MSD(t)/t with the standard errors scaled alike.
MsdCurve diffusion_coefficient(const MsdCurve& curve);

struct LaplaceOptions {
    bool extrapolate_tail = false;
    double min_lambda_T = 20.0;
    double safety = 1.5;  // multiplier on the interpolation error estimate
};

struct LaplaceEstimate {
    double lambda = 0.0;
    double value = 0.0;
    double quad_err = 0.0;
    double trunc_err = 0.0;
    /// Σ|w_i| se_i: the statistical error if all samples were fully correlated.
    double stat_err_bound = 0.0;
    bool extrapolated = false;
};

/// Weights w_i with estimate = Σ w_i M(t_i): piecewise-linear M between
/// samples, linear extension through the origin below t_1, and (optionally)
/// the diffusive tail M(T) t/T beyond the horizon.
std::vector<double> laplace_weights(const std::vector<double>& times, double lambda, bool extrapolate_tail);

/// ∫_0^∞ e^{-λt} M(t) dt. Refuses (StatisticsError) when λT < 20 unless tail
/// extrapolation is enabled.
LaplaceEstimate laplace_transform(const MsdCurve& curve, double lambda, const LaplaceOptions& opt = {});
LaplaceEstimate drift_part_transform(const MsdCurve& f1_curve, double lambda, const LaplaceOptions& opt = {});

struct FitWindow {
    double t_lo = 0.0;
    double t_hi = 0.0;  // 0: curve horizon
};

struct SqrtLogFit {
    double amplitude = 0.0;
    double zeta = 0.0;
    double zeta_ci = 0.0;       // 95% half width
    double amplitude_ci = 0.0;  // 95% half width (delta method)
    double chi2_per_dof = 0.0;
    std::size_t n_points = 0;
    bool weighted = false;
};

/// Least squares of log D(t) on log log t over the window (default: the last
/// two decades). Needs ≥ 8 points spanning ≥ 1 decade with t > 1.
SqrtLogFit sqrtlog_fit(const MsdCurve& d_curve, FitWindow window = {});

/// Pool-adjacent-violators: nondecreasing weighted least-squares fit.
std::vector<double> isotonic_fit(const std::vector<double>& y, const std::vector<double>& w);

/// Weights c_i/t_i such that Σ_i (c_i/t_i) |X(t_i)|² is the least-squares
/// slope of MSD/t against log t over the window (zero outside).
std::vector<double> loglog_slope_weights(const std::vector<double>& times, double t_lo, double t_hi);

struct LambdaSweepRow {
    double lambda;
    LaplaceEstimate estimate;
    double lower_bound_ref;
};

void write_lambda_sweep_csv(const std::string& path, const std::vector<LambdaSweepRow>& rows);

} // namespace gffdrift
