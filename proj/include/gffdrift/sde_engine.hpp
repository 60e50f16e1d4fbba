#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gffdrift/gff_environment.hpp"

namespace gffdrift {

struct SimConfig {
    double dt = 0.01;
    double T = 10.0;
    long n_paths = 1000;
    std::uint64_t master_seed = 1;
    /// Empty means log-spaced defaults (see default_record_times).
    std::vector<double> record_times;
    int points_per_decade = 16;
    Interpolation interpolation = Interpolation::Fast;
    int workers = 0;  // 0: available parallelism
    bool quenched = false;

    /// Throws ConfigError; `sigma` is the kernel length scale.
    void validate(double sigma) const;
};

void to_json(nlohmann::json& j, const SimConfig& c);
void from_json(const nlohmann::json& j, SimConfig& c);

/// Log-spaced times in [10 dt, T], at most 64 per decade, snapped to
/// multiples of dt; T itself is always included.
std::vector<double> default_record_times(double dt, double T, int points_per_decade);

struct StepResult {
    Vec2 x;
    Vec2 drift_increment;  // ω(x) dt, the F increments
};

/// x' = x + ω(x) dt + √dt g. Throws IntegrationFault on a non-finite drift.
StepResult euler_maruyama_step(const Vec2& x, const FieldRealization& field, double dt, const Vec2& gauss,
                               Interpolation mode = Interpolation::Fast);

/// Quantities a per-path linear functional can be built from.
enum class PathQuantity { R2, F1Sq, FSym, X1Sq, X2Sq };

/// Σ_i w_i q(path, t_i) accumulated per path; mean and exact standard error
/// over paths follow from the sum and sum of squares.
struct PathFunctional {
    std::string name;
    PathQuantity quantity = PathQuantity::R2;
    std::vector<double> weights;  // one per record time
};

struct FunctionalStats {
    std::string name;
    double sum = 0.0;
    double sum_sq = 0.0;
    long n = 0;
    double mean() const { return n > 0 ? sum / n : 0.0; }
    double stderr_() const;
};

/// Per-record-time running sums. Index layout in `sums` is (time, field).
class TrajectoryEnsemble {
public:
    enum Field : int {
        R2, R2Sq, X1, X1Sq, X2, X2Sq, F1, F1Sq, F1Fourth, F2, F2Sq, FSymSq, B1Sq, B1F1, X1SqSq, X2SqSq, kFields
    };

    std::vector<double> times;
    std::vector<double> sums;  // times.size() * kFields
    std::vector<long> counts;
    std::vector<FunctionalStats> functionals;
    long n_paths = 0;
    long faults = 0;
    bool valid = true;
    std::vector<std::string> warnings;
    std::vector<std::string> fault_messages;
    nlohmann::json provenance;

    void init(const std::vector<double>& record_times, std::size_t n_functionals);
    double& at(std::size_t i, Field f) { return sums[i * kFields + f]; }
    double at(std::size_t i, Field f) const { return sums[i * kFields + f]; }
    void merge(const TrajectoryEnsemble& other);

    double mean(std::size_t i, Field f) const { return at(i, f) / counts[i]; }
    /// Standard error of mean(i, f) given the sum of squares field.
    double stderr_of(std::size_t i, Field f, Field f_sq) const;

    double msd(std::size_t i) const { return mean(i, R2); }
    double msd_stderr(std::size_t i) const { return stderr_of(i, R2, R2Sq); }
    double f1_second_moment(std::size_t i) const { return mean(i, F1Sq); }
    double f1_second_moment_stderr(std::size_t i) const { return stderr_of(i, F1Sq, F1Fourth); }
    /// (F1² + F2²)/2: same expectation as F1² by rotation invariance.
    double fsym_second_moment(std::size_t i) const { return 0.5 * (mean(i, F1Sq) + mean(i, F2Sq)); }
    double fsym_second_moment_stderr(std::size_t i) const;
    double f1_variance(std::size_t i) const;

    void write_csv(const std::string& path) const;
};

TrajectoryEnsemble simulate_ensemble(const SimConfig& config, const BumpSpec& bump, const TorusGrid& grid, double norm,
                                     const std::vector<PathFunctional>& functionals = {});

struct PilotResult {
    double msd_coarse = 0.0;
    double msd_fine = 0.0;
    double diff = 0.0;         // fine - coarse, paired
    double diff_stderr = 0.0;
    double msd_stderr = 0.0;   // SE of the coarse MSD(T)
    bool pass = false;         // |diff| < msd_stderr
    long n_paths = 0;
};

/// Coupled dt vs dt/2 run on the same fields and Brownian paths: each coarse
/// Gaussian increment is the normalized sum of two fine ones.
PilotResult step_size_pilot(const SimConfig& config, const BumpSpec& bump, const TorusGrid& grid, double norm,
                            long n_paths = 1000);

} // namespace gffdrift
