#include "gffdrift/runner.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "gffdrift/errors.hpp"
#include "gffdrift/estimators.hpp"
#include "gffdrift/io.hpp"
#include "gffdrift/resolvent_numerics.hpp"
#include "gffdrift/rng.hpp"

namespace fs = std::filesystem;

namespace gffdrift {

namespace {

constexpr double kPi = std::numbers::pi;

const std::vector<std::string> kCommands{"synth", "simulate", "estimate", "bounds", "iterate", "sandwich", "quadcheck", "report"};

std::string path_in(const RunConfig& cfg, const std::string& name) { return (fs::path(cfg.output_dir) / name).string(); }

std::vector<double> parse_lambda_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw ConfigError("--lambda: cannot parse '" + cell + "'");
        }
    }
    return out;
}

std::vector<double> default_lambdas(const std::string& command) {
    if (command == "sandwich") return {0.5, 0.2, 0.1};
    if (command == "iterate" || command == "report") return {1e-2, 1e-4, 1e-6, 1e-8, 1e-10};
    return {1.0, 0.5, 0.2};
}

SimConfig with_record_times(SimConfig sim) {
    if (sim.record_times.empty()) sim.record_times = default_record_times(sim.dt, sim.T, sim.points_per_decade);
    return sim;
}

// Commands ----------------------------------------------------------------

void cmd_synth(const RunConfig& cfg, RunManifest& man) {
    const nlohmann::json sec = cfg.section("synth");
    const FieldRealization field = synthesize(cfg.bump, cfg.grid, cfg.master_seed, cfg.norm);
    const std::string field_path = path_in(cfg, "field.bin");
    field.save(field_path);
    man.add_output(field_path, "gff-environment/synthesize");

    const double rms = field.omega_rms();
    nlohmann::json summary{{"seed", cfg.master_seed},
                           {"omega_rms", rms},
                           {"divergence_roundtrip", field.spectral_divergence_roundtrip()},
                           {"divergence_exact", field.spectral_divergence_exact()}};
    summary["divergence_over_rms"] = summary["divergence_roundtrip"].get<double>() / rms;

    const int n_seeds = sec.value("covariance_seeds", 200);
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < n_seeds; ++i) seeds.push_back(derive_seed(cfg.master_seed, 1000 + i, Stream::Field));
    std::vector<Vec2> seps;
    const double h = cfg.grid.h();
    for (const auto& s : sec.value("separations", std::vector<std::vector<int>>{{0, 0}, {1, 0}, {2, 0}, {0, 4}, {3, 3}})) {
        if (s.size() != 2) throw ConfigError("synth.separations: entries must be grid offsets [i, j]");
        seps.push_back({s[0] * h, s[1] * h});
    }
    const auto rows = empirical_covariance(cfg.bump, cfg.grid, cfg.norm, seeds, seps);
    const std::string cov_path = path_in(cfg, "covariance.csv");
    write_covariance_csv(cov_path, rows);
    man.add_output(cov_path, "gff-environment/empirical_covariance",
                   {{"empirical", "seed-averaged spatial mean of omega_k(x) omega_l(x+s)"},
                    {"analytic", "direct spectral sum over retained torus modes"}});
    double worst = 0.0;
    for (const auto& r : rows)
        if (r.stderr_ > 0.0) worst = std::max(worst, std::abs(r.empirical - r.analytic) / r.stderr_);
    summary["covariance_max_z"] = worst;

    nlohmann::json pec = nlohmann::json::array();
    for (double kappa : sec.value("peclet_kappas", std::vector<double>{0.5, 0.05, 0.005}))
        pec.push_back({{"kappa", kappa}, {"value", peclet_integral(cfg.bump, kappa, cfg.norm)},
                       {"log_over_2pi", cfg.norm / (2.0 * kPi) * std::log(1.0 / kappa)}});
    summary["peclet"] = pec;
    const std::string sp = path_in(cfg, "synth_summary.json");
    write_json(sp, summary);
    man.add_output(sp, "gff-environment");
}

TrajectoryEnsemble simulate_and_write(const RunConfig& cfg, RunManifest& man, const SimConfig& sim,
                                      const std::vector<PathFunctional>& functionals = {}) {
    TrajectoryEnsemble ens = simulate_ensemble(sim, cfg.bump, cfg.grid, cfg.norm, functionals);
    const std::string ep = path_in(cfg, "ensemble.csv");
    ens.write_csv(ep);
    man.add_output(ep, "sde-engine/simulate_ensemble",
                   {{"msd", "mean |X(t)|^2"}, {"f1_var", "variance of F1(t)"}, {"n", "paths at t"}});
    const MsdCurve msd = msd_curve(ens);
    const std::string mp = path_in(cfg, "msd.csv");
    write_curve_csv(mp, msd, "msd");
    man.add_output(mp, "estimators/msd_curve");
    const MsdCurve d = diffusion_coefficient(msd);
    const std::string dp = path_in(cfg, "d_of_t.csv");
    write_curve_csv(dp, d, "D");
    man.add_output(dp, "estimators/diffusion_coefficient", {{"D", "MSD(t)/t"}});
    const MsdCurve f1 = f1_curve(ens);
    const std::string fp = path_in(cfg, "f1.csv");
    write_curve_csv(fp, f1, "f1_sq");
    man.add_output(fp, "estimators/f1_curve", {{"f1_sq", "E[F1(t)^2]"}});
    man.set("ensemble", {{"n_paths", ens.n_paths}, {"faults", ens.faults}, {"valid", ens.valid},
                         {"warnings", ens.warnings}, {"provenance", ens.provenance}});
    for (const auto& w : ens.warnings) std::cerr << "warning: " << w << '\n';
    return ens;
}

void cmd_simulate(const RunConfig& cfg, RunManifest& man) {
    const TrajectoryEnsemble ens = simulate_and_write(cfg, man, cfg.sim);
    if (!ens.valid) throw IntegrationFault("simulate: integration fault rate above threshold; run invalid");
}

void cmd_estimate(const RunConfig& cfg, RunManifest& man) {
    const nlohmann::json sec = cfg.section("estimate");
    const std::string input = sec.value("input", path_in(cfg, "msd.csv"));
    man.add_input(input);
    const MsdCurve msd = read_curve_csv(input);
    const MsdCurve d = diffusion_coefficient(msd);
    const std::string dp = path_in(cfg, "d_of_t.csv");
    write_curve_csv(dp, d, "D");
    man.add_output(dp, "estimators/diffusion_coefficient");

    LaplaceOptions lo;
    lo.extrapolate_tail = sec.value("extrapolate_tail", false);
    std::vector<LambdaSweepRow> rows;
    for (double lambda : cfg.lambdas) rows.push_back({lambda, laplace_transform(msd, lambda, lo), 2.0 / (lambda * lambda)});
    const std::string lp = path_in(cfg, "laplace.csv");
    write_lambda_sweep_csv(lp, rows);
    man.add_output(lp, "estimators/laplace_transform",
                   {{"value", "int_0^inf e^{-lambda t} MSD(t) dt"}, {"lower_bound_ref", "Brownian value 2/lambda^2"}});

    nlohmann::json fit_json;
    try {
        FitWindow w;
        w.t_lo = sec.value("fit_t_lo", 0.0);
        w.t_hi = sec.value("fit_t_hi", 0.0);
        const SqrtLogFit f = sqrtlog_fit(d, w);
        fit_json = {{"amplitude", f.amplitude}, {"zeta", f.zeta}, {"zeta_ci", f.zeta_ci},
                    {"amplitude_ci", f.amplitude_ci}, {"chi2_per_dof", f.chi2_per_dof},
                    {"n_points", f.n_points}, {"weighted", f.weighted}};
    } catch (const FitError& e) {
        fit_json = {{"error", e.what()}};
    }
    std::vector<double> w(d.size(), 1.0);
    for (std::size_t i = 0; i < d.size(); ++i)
        if (!d.stderrs.empty() && d.stderrs[i] > 0.0) w[i] = 1.0 / (d.stderrs[i] * d.stderrs[i]);
    const std::vector<double> iso = isotonic_fit(d.values, w);
    fit_json["isotonic_rise"] = iso.back() - iso.front();
    const std::string fp = path_in(cfg, "fit.json");
    write_json(fp, fit_json);
    man.add_output(fp, "estimators/sqrtlog_fit");
}

void cmd_bounds(const RunConfig& cfg, RunManifest& man) {
    const nlohmann::json sec = cfg.section("bounds_run");
    const std::string tp = path_in(cfg, "bound_functions.csv");
    {
        CsvWriter csv(tp, {"x", "z", "k", "L", "LB", "UB"});
        for (double z : {1.0, 10.0, 100.0})
            for (int k = 0; k <= 6; ++k)
                for (int e = -40; e <= 4; ++e) {
                    const double x = std::pow(10.0, e / 4.0);
                    csv.row({x, z, double(k), L(x, z), LB(k, x, z), UB(k, x, z)});
                }
    }
    man.add_output(tp, "bound-functions/L,LB,UB");

    const auto samples = random_identity_samples(sec.value("n_points", 10000), sec.value("n_intervals", 500),
                                                 derive_seed(cfg.master_seed, 0, Stream::Pilot));
    const LemmaCheckReport ident = check_identities(samples);
    const std::string ip = path_in(cfg, "identity_report.json");
    write_json(ip, ident.to_json());
    man.add_output(ip, "bound-functions/check_identities");

    const int kmax = sec.value("c_kmax", 200000);
    nlohmann::json cs = nlohmann::json::array();
    const std::string cp = path_in(cfg, "c_sequence.csv");
    {
        CsvWriter csv(cp, {"i", "c"});
        const CSequence seq = c_sequence(cfg.bounds.eps, kmax, cfg.bounds.c3_policy, cfg.bounds.delta);
        for (int i = 1; i <= std::min(seq.kmax(), 1000); ++i) csv.row({double(i), seq.at(i)});
        cs.push_back({{"eps", seq.eps}, {"policy", to_string(seq.policy)}, {"converged", seq.converged},
                      {"odd_limit", seq.odd_limit}, {"even_limit", seq.even_limit}, {"cauchy_gap", seq.cauchy_gap},
                      {"raw_odd_gap", seq.raw_odd_gap}, {"policy_applied", seq.policy_applied}});
    }
    man.add_output(cp, "bound-functions/c_sequence");
    FittedConstants fc;
    if (sec.contains("fitted_constants")) {
        const auto& j = sec["fitted_constants"];
        fc.c_diag = j.value("c_diag", 1.0);
        fc.c_off = j.value("c_off", 1.0);
        fc.c_rho = j.value("c_rho", 1.0);
    }
    const LemmaCheckReport k12 = validate_K1K2(cfg.bounds, fc);
    const std::string kp = path_in(cfg, "bounds_summary.json");
    write_json(kp, {{"c_sequence", cs}, {"K1K2", k12.to_json()}, {"identity_failures", ident.failures()}});
    man.add_output(kp, "bound-functions/validate_K1K2");
    man.set("fitted_constants", {{"c_diag", fc.c_diag}, {"c_off", fc.c_off}, {"c_rho", fc.c_rho}});
}

void cmd_iterate(const RunConfig& cfg, RunManifest& man) {
    const nlohmann::json sec = cfg.section("iterate");
    const double coupling = sec.value("coupling", kDefaultCoupling);
    const int levels = sec.value("levels", 0);
    const int per_decade = sec.value("points_per_decade", 48);
    const std::string sp = path_in(cfg, "d_diag_sweep.csv");
    CsvWriter csv(sp, {"lambda", "k_levels", "D_diag", "ratio_to_sqrtlog", "converged"});
    for (std::size_t i = 0; i < cfg.lambdas.size(); ++i) {
        const double lambda = cfg.lambdas[i];
        const ResolventIteration it = iterate_resolvent(lambda, levels, cfg.bump, coupling, per_decade);
        const double sl = std::sqrt(std::abs(std::log(lambda)));
        csv.row({lambda, double(it.levels_done), it.d_diag, lambda * lambda * it.d_diag / sl, it.early_stopped ? 1.0 : 0.0});
        const ResolventIteration fx = iterate_resolvent(lambda, 400, cfg.bump, coupling, per_decade);
        csv.row({lambda, double(fx.levels_done), fx.d_diag, lambda * lambda * fx.d_diag / sl, fx.early_stopped ? 1.0 : 0.0});
        const std::string mp = path_in(cfg, "multiplier_" + std::to_string(i) + ".csv");
        fx.multiplier.write_csv(mp);
        man.add_output(mp, "resolvent-numerics/iterate_resolvent", {{"lambda", lambda}, {"levels", fx.levels_done}});
    }
    csv.close();
    man.add_output(sp, "resolvent-numerics/iterate_resolvent",
                   {{"D_diag", "(2/lambda^2) pi int Vhat r/(lambda + r^2(1+s)) dr"},
                    {"ratio_to_sqrtlog", "lambda^2 D_diag / sqrt|log lambda|"},
                    {"converged", "1 when successive iterates agreed to 1e-12"}});
    man.set("coupling", coupling);
}

void cmd_sandwich(const RunConfig& cfg, RunManifest& man) {
    const nlohmann::json sec = cfg.section("sandwich");
    const int resolution = sec.value("resolution", 128);
    const double beta = physical_coupling(cfg.norm);
    const double pre = resolvent_prefactor(cfg.norm);
    SimConfig sim = with_record_times(cfg.sim);
    std::vector<PathFunctional> fun;
    for (double lambda : cfg.lambdas)
        fun.push_back({"laplace_f1sq_" + std::to_string(lambda), PathQuantity::F1Sq, laplace_weights(sim.record_times, lambda, false)});
    const TrajectoryEnsemble ens = simulate_and_write(cfg, man, sim, fun);
    if (!ens.valid) throw IntegrationFault("sandwich: Monte Carlo run invalid");
    const MsdCurve f1 = f1_curve(ens);
    const std::string sp = path_in(cfg, "sandwich.csv");
    CsvWriter csv(sp, {"lambda", "lower_two_level", "lower_diag_only", "mc_value", "mc_stderr", "quad_err", "upper_free", "pass"});
    for (std::size_t i = 0; i < cfg.lambdas.size(); ++i) {
        const double lambda = cfg.lambdas[i];
        const double s = 0.5 * lambda * lambda;
        const double lower = pre * solve_truncated_two(2.0 * lambda, cfg.bump, resolution, beta).value;
        const double lower_d = pre * solve_truncated_two(2.0 * lambda, cfg.bump, resolution, beta, true).value;
        const double upper = pre * free_quadratic_form(2.0 * lambda, cfg.bump);
        const LaplaceEstimate le = drift_part_transform(f1, lambda);
        const double mc = s * ens.functionals[i].mean();
        const double se = s * ens.functionals[i].stderr_();
        const double qe = s * (le.quad_err + le.trunc_err);
        csv.row({lambda, lower, lower_d, mc, se, qe, upper, lower <= mc + 3.0 * se + qe ? 1.0 : 0.0});
    }
    csv.close();
    man.add_output(sp, "resolvent-numerics/solve_truncated_two + sde-engine",
                   {{"lower_two_level", "2c <phi, psi^(2)> at 2 lambda, coupling sqrt(norm)/pi"},
                    {"mc_value", "(lambda^2/2) Laplace(E F1^2)(lambda)"},
                    {"upper_free", "2c <phi,(2 lambda - Delta)^{-1} phi>"}});
}

void cmd_quadcheck(const RunConfig& cfg, RunManifest& man) {
    const nlohmann::json sec = cfg.section("quadcheck");
    const double coupling = sec.value("coupling", kDefaultCoupling);
    const LemmaCheckReport rep = check_replacement(default_replacement_samples(), cfg.bump, coupling);
    const LemmaCheckReport off = check_offdiag(default_offdiag_samples(), cfg.bump, coupling);
    const MainLemmaReports main = check_main_lemmas(default_main_samples(), cfg.bump, cfg.bounds, sec.value("C2", 1.0), coupling);
    nlohmann::json consts;
    for (const LemmaCheckReport* r : {&rep, &off, &main.main_ub, &main.rho_squared, &main.main_lb}) {
        const std::string p = path_in(cfg, "lemma_" + r->lemma_id + ".json");
        write_json(p, r->to_json());
        man.add_output(p, "resolvent-numerics/" + r->lemma_id);
        consts[r->lemma_id] = {{r->constant_name, r->fitted_constant}, {"pass", r->pass()}};
    }
    man.set("fitted_constants", consts);
}

void cmd_report(const RunConfig& cfg, RunManifest& man) {
    const nlohmann::json sec = cfg.section("report");
    const double coupling = sec.value("coupling", kDefaultCoupling);
    std::optional<MsdCurve> msd;
    if (sec.contains("msd_csv")) {
        const std::string p = sec["msd_csv"].get<std::string>();
        man.add_input(p);
        msd = read_curve_csv(p);
    }
    const std::string rp = path_in(cfg, "report.csv");
    CsvWriter csv(rp, {"lambda", "mc_D", "mc_D_quad_err", "D_diag_schedule", "D_diag_converged", "ratio_sqrtlog",
                       "envelope_lower_shape", "envelope_upper_shape"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (double lambda : cfg.lambdas) {
        double mc = nan, mc_err = nan;
        if (msd && lambda * msd->times.back() >= 20.0) {
            const LaplaceEstimate le = laplace_transform(*msd, lambda);
            mc = le.value;
            mc_err = le.quad_err + le.trunc_err;
        }
        const ResolventIteration sched = iterate_resolvent(lambda, 0, cfg.bump, coupling);
        const ResolventIteration fx = iterate_resolvent(lambda, 400, cfg.bump, coupling);
        const auto [lo, hi] = envelope(lambda, cfg.bounds.eps, 1.0, 1.0);
        csv.row({lambda, mc, mc_err, sched.d_diag, fx.d_diag,
                 lambda * lambda * fx.d_diag / std::sqrt(std::abs(std::log(lambda))), lo, hi});
    }
    csv.close();
    man.add_output(rp, "cli-runner/report",
                   {{"mc_D", "Laplace transform of the supplied MSD curve (lambda T >= 20 only)"},
                    {"D_diag_schedule", "iterate_resolvent at k_schedule(lambda)+1 levels"},
                    {"D_diag_converged", "iterate_resolvent at its fixed point"},
                    {"ratio_sqrtlog", "lambda^2 D_diag_converged / sqrt|log lambda|"},
                    {"envelope_lower_shape", "theorem bracket with unit constants"}});
}

} // namespace

double physical_coupling(double norm) { return std::sqrt(norm) / kPi; }
double resolvent_prefactor(double norm) { return norm / (2.0 * kPi * kPi); }

nlohmann::json RunConfig::section(const std::string& name) const {
    if (raw.contains(name)) {
        if (!raw[name].is_object()) throw ConfigError("config section '" + name + "' must be an object");
        return raw[name];
    }
    return nlohmann::json::object();
}

RunConfig load_run_config(const std::string& command, const nlohmann::json& j, const CliOverrides& ov) {
    if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
        throw ConfigError("unknown command '" + command + "'");
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig c;
    c.command = command;
    c.raw = j;
    try {
        if (j.contains("bump")) c.bump = j["bump"].get<BumpSpec>();
        if (j.contains("grid")) c.grid = j["grid"].get<TorusGrid>();
        c.norm = j.value("norm", kDefaultNorm);
        if (j.contains("sim")) c.sim = j["sim"].get<SimConfig>();
        if (j.contains("bounds")) c.bounds = j["bounds"].get<BoundParams>();
        c.lambdas = j.value("lambdas", default_lambdas(command));
        c.master_seed = j.value("master_seed", std::uint64_t{1});
        c.output_dir = j.value("output_dir", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (ov.seed) c.master_seed = *ov.seed;
    // An explicit sim seed wins unless --seed overrides both.
    if (ov.seed || !(j.contains("sim") && j["sim"].contains("master_seed"))) c.sim.master_seed = c.master_seed;
    if (ov.workers) c.sim.workers = *ov.workers;
    if (ov.lambdas) c.lambdas = *ov.lambdas;
    if (ov.out) c.output_dir = *ov.out;
    if (c.output_dir.empty()) {
        const char* root = std::getenv(kOutputRootEnv);
        c.output_dir = (fs::path(root ? root : "gffdrift-out") / command).string();
    }

    if (!(c.norm >= 0.0) || !std::isfinite(c.norm)) throw ConfigError("norm must be finite and >= 0");
    c.grid.validate(c.bump);
    c.sim.validate(c.bump.sigma());
    c.bounds.validate();
    for (double l : c.lambdas)
        if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("lambda values must be positive");
    if (command == "iterate" || command == "report")
        for (double l : c.lambdas)
            if (!(l >= 1e-12 && l < 1.0)) throw ConfigError("iterate: lambda must lie in [1e-12, 1)");
    if (command == "sandwich") {
        for (double l : c.lambdas)
            if (l * c.sim.T < 20.0)
                throw ConfigError("sandwich: lambda T = " + std::to_string(l * c.sim.T) + " < 20; raise sim.T");
        if (c.norm == 0.0) throw ConfigError("sandwich: needs a drift (norm > 0)");
    }
    if (command == "estimate" && !c.section("estimate").value("extrapolate_tail", false) &&
        c.section("estimate").contains("horizon")) {
        const double T = c.section("estimate")["horizon"].get<double>();
        for (double l : c.lambdas)
            if (l * T < 20.0) throw ConfigError("estimate: lambda T < 20 without tail extrapolation");
    }
    return c;
}

void run_command(const RunConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    nlohmann::json snapshot = cfg.raw;
    snapshot["command"] = cfg.command;
    snapshot["resolved"] = {{"bump", cfg.bump}, {"grid", cfg.grid}, {"norm", cfg.norm}, {"sim", cfg.sim},
                            {"bounds", cfg.bounds}, {"lambdas", cfg.lambdas}, {"master_seed", cfg.master_seed},
                            {"output_dir", cfg.output_dir}};
    RunManifest man(snapshot);
    if (cfg.command == "synth") cmd_synth(cfg, man);
    else if (cfg.command == "simulate") cmd_simulate(cfg, man);
    else if (cfg.command == "estimate") cmd_estimate(cfg, man);
    else if (cfg.command == "bounds") cmd_bounds(cfg, man);
    else if (cfg.command == "iterate") cmd_iterate(cfg, man);
    else if (cfg.command == "sandwich") cmd_sandwich(cfg, man);
    else if (cfg.command == "quadcheck") cmd_quadcheck(cfg, man);
    else if (cfg.command == "report") cmd_report(cfg, man);
    man.write(cfg.output_dir);
}

int run_cli(int argc, char** argv) {
    CLI::App app{"gffdrift: Brownian motion in a curl-of-GFF drift, resolvent bounds and lemma audits"};
    app.set_version_flag("--version", GFFDRIFT_VERSION);
    std::string command, config_path, out, lambda_list;
    std::uint64_t seed = 0;
    int workers = 0;
    app.add_option("command", command, "synth | simulate | estimate | bounds | iterate | sandwich | quadcheck | report")
        ->required();
    auto* o_config = app.add_option("--config", config_path, "JSON run configuration");
    auto* o_out = app.add_option("--out", out, std::string("output directory (default $") + kOutputRootEnv + "/<command>)");
    auto* o_seed = app.add_option("--seed", seed, "master seed");
    auto* o_workers = app.add_option("--workers", workers, "worker threads (0: all cores)");
    auto* o_lambda = app.add_option("--lambda", lambda_list, "comma-separated lambda list");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    RunConfig cfg;
    try {
        nlohmann::json j = *o_config ? read_json(config_path) : nlohmann::json::object();
        CliOverrides ov;
        if (*o_out) ov.out = out;
        if (*o_seed) ov.seed = seed;
        if (*o_workers) ov.workers = workers;
        if (*o_lambda) ov.lambdas = parse_lambda_list(lambda_list);
        cfg = load_run_config(command, j, ov);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    }

    auto fail = [&](const char* kind, const std::exception& e, int code) {
        std::cerr << kind << ": " << e.what() << '\n';
        try {
            fs::create_directories(cfg.output_dir);
            write_json(path_in(cfg, "error.json"), {{"command", cfg.command}, {"kind", kind}, {"message", e.what()}});
        } catch (...) {
        }
        return code;
    };
    try {
        run_command(cfg);
    } catch (const ConfigError& e) {
        return fail("configuration error", e, 2);
    } catch (const QuadratureFault& e) {
        return fail("quadrature fault", e, 1);
    } catch (const NumericFault& e) {
        return fail("numeric fault", e, 1);
    } catch (const std::exception& e) {
        return fail("runtime fault", e, 1);
    }
    return 0;
}

} // namespace gffdrift
