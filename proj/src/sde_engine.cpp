#include "gffdrift/sde_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <thread>

#include "gffdrift/errors.hpp"
#include "gffdrift/rng.hpp"

namespace gffdrift {

namespace {

constexpr long kBlock = 64;

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

std::vector<long> record_steps(const std::vector<double>& times, double dt) {
    std::vector<long> steps;
    for (double t : times) steps.push_back(std::max(1L, std::lround(t / dt)));
    return steps;
}

} // namespace

void SimConfig::validate(double sigma) const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("sim: dt must be positive");
    if (dt > 0.1 * sigma * sigma) throw ConfigError("sim: dt must not exceed 0.1 sigma^2");
    if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("sim: horizon T must be positive");
    if (T < dt) throw ConfigError("sim: horizon shorter than one step");
    if (n_paths < 1) throw ConfigError("sim: n_paths must be >= 1");
    if (points_per_decade < 1 || points_per_decade > 64) throw ConfigError("sim: points_per_decade must lie in [1, 64]");
    for (std::size_t i = 0; i < record_times.size(); ++i) {
        if (!(record_times[i] > 0.0) || record_times[i] > T * (1.0 + 1e-12))
            throw ConfigError("sim: record times must lie in (0, T]");
        if (i > 0 && !(record_times[i] > record_times[i - 1])) throw ConfigError("sim: record times must increase");
    }
    if (workers < 0) throw ConfigError("sim: workers must be >= 0");
}

void to_json(nlohmann::json& j, const SimConfig& c) {
    j = nlohmann::json{{"dt", c.dt},
                       {"T", c.T},
                       {"n_paths", c.n_paths},
                       {"master_seed", c.master_seed},
                       {"record_times", c.record_times},
                       {"points_per_decade", c.points_per_decade},
                       {"interpolation", to_string(c.interpolation)},
                       {"workers", c.workers},
                       {"quenched", c.quenched}};
}

void from_json(const nlohmann::json& j, SimConfig& c) {
    try {
        c.dt = j.value("dt", 0.01);
        c.T = j.value("T", 10.0);
        c.n_paths = j.value("n_paths", 1000L);
        c.master_seed = j.value("master_seed", std::uint64_t{1});
        c.record_times = j.value("record_times", std::vector<double>{});
        c.points_per_decade = j.value("points_per_decade", 16);
        c.interpolation = interpolation_from_string(j.value("interpolation", std::string("fast")));
        c.workers = j.value("workers", 0);
        c.quenched = j.value("quenched", false);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("sim: ") + e.what());
    }
}

std::vector<double> default_record_times(double dt, double T, int points_per_decade) {
    points_per_decade = std::clamp(points_per_decade, 1, 64);
    const double t0 = std::min(10.0 * dt, T);
    std::vector<long> steps;
    const double decades = std::log10(T / t0);
    const int n = static_cast<int>(std::ceil(decades * points_per_decade));
    for (int i = 0; i <= n; ++i) {
        const double t = (n == 0) ? T : t0 * std::pow(T / t0, static_cast<double>(i) / n);
        steps.push_back(std::max(1L, std::lround(t / dt)));
    }
    steps.push_back(std::lround(T / dt));
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    std::vector<double> out;
    for (long s : steps) out.push_back(s * dt);
    return out;
}

StepResult euler_maruyama_step(const Vec2& x, const FieldRealization& field, double dt, const Vec2& gauss, Interpolation mode) {
    const Vec2 w = field.drift_at(x, mode);
    if (!std::isfinite(w[0]) || !std::isfinite(w[1])) throw IntegrationFault("non-finite drift value");
    const double sq = std::sqrt(dt);
    const Vec2 inc{w[0] * dt, w[1] * dt};
    return {{x[0] + inc[0] + sq * gauss[0], x[1] + inc[1] + sq * gauss[1]}, inc};
}

double FunctionalStats::stderr_() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sum_sq - n * m * m) / (n - 1.0));
    return std::sqrt(var / n);
}

void TrajectoryEnsemble::init(const std::vector<double>& record_times, std::size_t n_functionals) {
    times = record_times;
    sums.assign(times.size() * kFields, 0.0);
    counts.assign(times.size(), 0);
    functionals.assign(n_functionals, FunctionalStats{});
}

void TrajectoryEnsemble::merge(const TrajectoryEnsemble& o) {
    for (std::size_t i = 0; i < sums.size(); ++i) sums[i] += o.sums[i];
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
    for (std::size_t i = 0; i < functionals.size(); ++i) {
        functionals[i].sum += o.functionals[i].sum;
        functionals[i].sum_sq += o.functionals[i].sum_sq;
        functionals[i].n += o.functionals[i].n;
    }
    n_paths += o.n_paths;
    faults += o.faults;
    fault_messages.insert(fault_messages.end(), o.fault_messages.begin(), o.fault_messages.end());
}

double TrajectoryEnsemble::stderr_of(std::size_t i, Field f, Field f_sq) const {
    const double n = static_cast<double>(counts[i]);
    if (n < 2) return 0.0;
    const double m = at(i, f) / n;
    const double var = std::max(0.0, (at(i, f_sq) - n * m * m) / (n - 1.0));
    return std::sqrt(var / n);
}

double TrajectoryEnsemble::fsym_second_moment_stderr(std::size_t i) const {
    const double n = static_cast<double>(counts[i]);
    if (n < 2) return 0.0;
    const double m = fsym_second_moment(i);
    const double var = std::max(0.0, (at(i, FSymSq) - n * m * m) / (n - 1.0));
    return std::sqrt(var / n);
}

double TrajectoryEnsemble::f1_variance(std::size_t i) const {
    const double n = static_cast<double>(counts[i]);
    const double m = at(i, F1) / n;
    return at(i, F1Sq) / n - m * m;
}

void TrajectoryEnsemble::write_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path);
    os << "t,msd,msd_stderr,mean_x,mean_y,f1_var,f1_var_stderr,n\n" << std::setprecision(17);
    for (std::size_t i = 0; i < times.size(); ++i)
        os << times[i] << ',' << msd(i) << ',' << msd_stderr(i) << ',' << mean(i, X1) << ',' << mean(i, X2) << ','
           << f1_variance(i) << ',' << f1_second_moment_stderr(i) << ',' << counts[i] << '\n';
}

namespace {

struct PathRecord {
    std::vector<double> r2, x1, x2, f1, f2, b1;
};

// One path: fresh or shared field, Brownian noise from its own stream.
bool run_path(long index, const SimConfig& cfg, const std::vector<long>& steps, const FieldRealization& field,
              PathRecord& rec, std::string& fault) {
    Engine eng = make_engine(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(index), Stream::Noise));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double sq = std::sqrt(cfg.dt);
    Vec2 x{0.0, 0.0};
    double f1 = 0.0, f2 = 0.0, b1 = 0.0;
    long step = 0;
    try {
        for (std::size_t r = 0; r < steps.size(); ++r) {
            for (; step < steps[r]; ++step) {
                const Vec2 g{gauss(eng), gauss(eng)};
                const StepResult s = euler_maruyama_step(x, field, cfg.dt, g, cfg.interpolation);
                x = s.x;
                f1 += s.drift_increment[0];
                f2 += s.drift_increment[1];
                b1 += sq * g[0];
            }
            if (!std::isfinite(x[0]) || !std::isfinite(x[1])) throw IntegrationFault("non-finite position");
            rec.r2[r] = x[0] * x[0] + x[1] * x[1];
            rec.x1[r] = x[0];
            rec.x2[r] = x[1];
            rec.f1[r] = f1;
            rec.f2[r] = f2;
            rec.b1[r] = b1;
        }
    } catch (const IntegrationFault& e) {
        fault = "path " + std::to_string(index) + ": " + e.what();
        return false;
    }
    return true;
}

double quantity(PathQuantity q, const PathRecord& rec, std::size_t r) {
    switch (q) {
    case PathQuantity::R2: return rec.r2[r];
    case PathQuantity::F1Sq: return rec.f1[r] * rec.f1[r];
    case PathQuantity::FSym: return 0.5 * (rec.f1[r] * rec.f1[r] + rec.f2[r] * rec.f2[r]);
    case PathQuantity::X1Sq: return rec.x1[r] * rec.x1[r];
    case PathQuantity::X2Sq: return rec.x2[r] * rec.x2[r];
    }
    return 0.0;
}

void accumulate(TrajectoryEnsemble& e, const PathRecord& rec, const std::vector<PathFunctional>& funcs) {
    using F = TrajectoryEnsemble;
    for (std::size_t r = 0; r < e.times.size(); ++r) {
        const double r2 = rec.r2[r], x1 = rec.x1[r], x2 = rec.x2[r], f1 = rec.f1[r], f2 = rec.f2[r], b1 = rec.b1[r];
        const double f1s = f1 * f1, f2s = f2 * f2, fs = 0.5 * (f1s + f2s);
        e.at(r, F::R2) += r2;
        e.at(r, F::R2Sq) += r2 * r2;
        e.at(r, F::X1) += x1;
        e.at(r, F::X1Sq) += x1 * x1;
        e.at(r, F::X2) += x2;
        e.at(r, F::X2Sq) += x2 * x2;
        e.at(r, F::F1) += f1;
        e.at(r, F::F1Sq) += f1s;
        e.at(r, F::F1Fourth) += f1s * f1s;
        e.at(r, F::F2) += f2;
        e.at(r, F::F2Sq) += f2s;
        e.at(r, F::FSymSq) += fs * fs;
        e.at(r, F::B1Sq) += b1 * b1;
        e.at(r, F::B1F1) += b1 * f1;
        e.at(r, F::X1SqSq) += x1 * x1 * x1 * x1;
        e.at(r, F::X2SqSq) += x2 * x2 * x2 * x2;
        e.counts[r] += 1;
    }
    for (std::size_t k = 0; k < funcs.size(); ++k) {
        double v = 0.0;
        for (std::size_t r = 0; r < e.times.size(); ++r) v += funcs[k].weights[r] * quantity(funcs[k].quantity, rec, r);
        e.functionals[k].sum += v;
        e.functionals[k].sum_sq += v * v;
        e.functionals[k].n += 1;
    }
}

} // namespace

TrajectoryEnsemble simulate_ensemble(const SimConfig& config, const BumpSpec& bump, const TorusGrid& grid, double norm,
                                     const std::vector<PathFunctional>& functionals) {
    config.validate(bump.sigma());
    grid.validate(bump);
    if (!(norm >= 0.0)) throw ConfigError("sim: norm must be >= 0");
    const std::vector<double> times =
        config.record_times.empty() ? default_record_times(config.dt, config.T, config.points_per_decade) : config.record_times;
    const std::vector<long> steps = record_steps(times, config.dt);
    std::vector<double> snapped;
    for (long s : steps) snapped.push_back(s * config.dt);
    for (const auto& f : functionals)
        if (f.weights.size() != snapped.size()) throw ConfigError("functional '" + f.name + "' has the wrong number of weights");

    const long n_blocks = (config.n_paths + kBlock - 1) / kBlock;
    std::vector<TrajectoryEnsemble> blocks(static_cast<std::size_t>(n_blocks));
    const bool zero = (norm == 0.0);

    std::optional<FieldRealization> shared;
    if (zero) {
        shared = FieldRealization::zero(grid, bump);
    } else if (config.quenched) {
        FieldSynthesizer syn(bump, grid, norm);
        shared.emplace();
        syn.synthesize(derive_seed(config.master_seed, 0, Stream::Field), *shared, false);
    }

    std::atomic<long> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        try {
            std::unique_ptr<FieldSynthesizer> syn;
            if (!shared) syn = std::make_unique<FieldSynthesizer>(bump, grid, norm);
            FieldRealization field;
            PathRecord rec;
            for (auto* v : {&rec.r2, &rec.x1, &rec.x2, &rec.f1, &rec.f2, &rec.b1}) v->assign(snapped.size(), 0.0);
            for (long b = next++; b < n_blocks; b = next++) {
                TrajectoryEnsemble& blk = blocks[static_cast<std::size_t>(b)];
                blk.init(snapped, functionals.size());
                const long lo = b * kBlock, hi = std::min(config.n_paths, lo + kBlock);
                for (long p = lo; p < hi; ++p) {
                    if (!shared) syn->synthesize(derive_seed(config.master_seed, static_cast<std::uint64_t>(p), Stream::Field), field, false);
                    std::string fault;
                    blk.n_paths += 1;
                    if (run_path(p, config, steps, shared ? *shared : field, rec, fault)) {
                        accumulate(blk, rec, functionals);
                    } else {
                        blk.faults += 1;
                        if (blk.fault_messages.size() < 8) blk.fault_messages.push_back(fault);
                    }
                }
            }
        } catch (...) {
            std::lock_guard<std::mutex> lk(error_mutex);
            if (!error) error = std::current_exception();
            next = n_blocks;
        }
    };
    const int nw = std::max(1, std::min<int>(resolve_workers(config.workers), static_cast<int>(n_blocks)));
    if (nw == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    TrajectoryEnsemble out;
    out.init(snapped, functionals.size());
    for (std::size_t k = 0; k < functionals.size(); ++k) out.functionals[k].name = functionals[k].name;
    for (const auto& b : blocks) out.merge(b);
    out.valid = out.faults * 1000 <= out.n_paths;
    if (!out.valid) out.warnings.push_back("integration fault rate above 0.1%: run invalid");
    if (out.counts.back() > 0) {
        const double reach = std::sqrt(out.msd(out.times.size() - 1));
        if (grid.L < 4.0 * reach)
            out.warnings.push_back("torus side L = " + std::to_string(grid.L) + " is below 4 sqrt(MSD(T)) = " +
                                   std::to_string(4.0 * reach) + "; infrared truncation may be visible");
    }
    nlohmann::json prov;
    prov["config"] = config;
    prov["bump"] = bump;
    prov["grid"] = grid;
    prov["norm"] = norm;
    prov["record_times"] = snapped;
    out.provenance = std::move(prov);
    return out;
}

PilotResult step_size_pilot(const SimConfig& config, const BumpSpec& bump, const TorusGrid& grid, double norm, long n_paths) {
    config.validate(bump.sigma());
    grid.validate(bump);
    const long coarse_steps = std::lround(config.T / config.dt);
    const double dt = config.dt, dtf = 0.5 * config.dt;
    std::unique_ptr<FieldSynthesizer> syn;
    if (norm > 0.0) syn = std::make_unique<FieldSynthesizer>(bump, grid, norm);
    FieldRealization field = norm > 0.0 ? FieldRealization{} : FieldRealization::zero(grid, bump);
    double sc = 0.0, scc = 0.0, sf = 0.0, sd = 0.0, sdd = 0.0;
    for (long p = 0; p < n_paths; ++p) {
        if (syn) syn->synthesize(derive_seed(config.master_seed, static_cast<std::uint64_t>(p), Stream::Field), field, false);
        Engine eng = make_engine(derive_seed(config.master_seed, static_cast<std::uint64_t>(p), Stream::Pilot));
        std::normal_distribution<double> gauss(0.0, 1.0);
        Vec2 xc{0.0, 0.0}, xf{0.0, 0.0};
        for (long s = 0; s < coarse_steps; ++s) {
            const Vec2 ga{gauss(eng), gauss(eng)}, gb{gauss(eng), gauss(eng)};
            xf = euler_maruyama_step(xf, field, dtf, ga, config.interpolation).x;
            xf = euler_maruyama_step(xf, field, dtf, gb, config.interpolation).x;
            const Vec2 g{(ga[0] + gb[0]) / std::sqrt(2.0), (ga[1] + gb[1]) / std::sqrt(2.0)};
            xc = euler_maruyama_step(xc, field, dt, g, config.interpolation).x;
        }
        const double rc = xc[0] * xc[0] + xc[1] * xc[1], rf = xf[0] * xf[0] + xf[1] * xf[1];
        sc += rc;
        scc += rc * rc;
        sf += rf;
        sd += rf - rc;
        sdd += (rf - rc) * (rf - rc);
    }
    PilotResult res;
    const double n = static_cast<double>(n_paths);
    res.n_paths = n_paths;
    res.msd_coarse = sc / n;
    res.msd_fine = sf / n;
    res.diff = sd / n;
    res.diff_stderr = n > 1 ? std::sqrt(std::max(0.0, (sdd - n * res.diff * res.diff) / (n - 1)) / n) : 0.0;
    res.msd_stderr = n > 1 ? std::sqrt(std::max(0.0, (scc - n * res.msd_coarse * res.msd_coarse) / (n - 1)) / n) : 0.0;
    res.pass = std::abs(res.diff) < res.msd_stderr;
    return res;
}

} // namespace gffdrift
