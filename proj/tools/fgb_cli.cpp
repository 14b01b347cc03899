#include "fgb/basis.hpp"
#include "fgb/inference.hpp"
#include "fgb/io.hpp"
#include "fgb/simbench.hpp"
#include "fgb/solver.hpp"
#include "fgb/tuning.hpp"
#include "fgb/weights.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>

using namespace fgb;
using io::Json;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Options {
    std::string command;
    std::string y, x, meta, out = "out";
    int K = 30;
    int q = 4;
    double lambda = -1.0;
    double alpha = -1.0;
    std::string tune_result;
    std::string grid = GridSpec{}.to_string();
    std::string weights = "estimated";
    int S1 = 20;
    int S2 = 50;
    double tol = 1e-6;
    std::uint64_t seed = 20210501;
    int threads = 1;
    bool intercept = false;
    bool unadjusted = false;
    // bands
    double level = 0.95;
    int draws = 100000;
    double window_lo = -1.0;
    double window_hi = -1.0;
    int window_coef = 1;
    // simulate / benchmark
    std::string scenario = "base";
    Index n = 0;
    int T = 0;
    int reps = 1;
    std::string methods = "proposed";
    bool no_bands = false;
};

Json options_json(const Options& o) {
    Json j;
    j["command"] = o.command;
    if (o.command == "simulate" || o.command == "benchmark") {
        j["scenario"] = o.scenario;
        j["n"] = o.n;
        j["T"] = o.T;
    } else {
        j["Y"] = o.y;
        j["X"] = o.x;
        j["meta"] = o.meta;
        j["intercept"] = o.intercept;
        j["weights"] = o.weights;
    }
    j["K"] = o.K;
    j["q"] = o.q;
    if (o.command == "fit" || o.command == "bands") {
        j["lambda"] = o.lambda;
        j["alpha"] = o.alpha;
        j["tune_result"] = o.tune_result;
    }
    if (o.command == "tune" || o.command == "benchmark") j["grid"] = o.grid;
    if (o.command == "tune") j["unadjusted"] = o.unadjusted;
    if (o.command == "bands" || o.command == "benchmark") {
        j["level"] = o.level;
        j["draws"] = o.draws;
    }
    if (o.command == "bands") {
        j["window"] = {o.window_lo, o.window_hi};
        j["window_coef"] = o.window_coef;
    }
    if (o.command == "benchmark") {
        j["reps"] = o.reps;
        j["methods"] = o.methods;
        j["bands"] = !o.no_bands;
    }
    j["S1"] = o.S1;
    j["S2"] = o.S2;
    j["tol"] = o.tol;
    j["seed"] = o.seed;
    j["threads"] = o.threads;
    j["out"] = o.out;
    return j;
}

void write_manifest(const Options& o, double seconds, const Json& extra) {
    Json j;
    j["tool"] = "fgb";
    j["version"] = kVersion;
    j["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                         std::to_string(EIGEN_MAJOR_VERSION) + "." +
                         std::to_string(EIGEN_MINOR_VERSION);
    j["config"] = options_json(o);
    j["seed"] = o.seed;
    j["wall_time_seconds"] = seconds;
    j["results"] = extra;
    io::write_json((std::filesystem::path(o.out) / "manifest.json").string(), j);
}

std::string out_path(const Options& o, const std::string& name) {
    return (std::filesystem::path(o.out) / name).string();
}

FunctionalDataset load(const Options& o) {
    require(!o.y.empty() && !o.x.empty() && !o.meta.empty(), ErrorKind::invalid_configuration,
            "--Y, --X and --meta are required");
    FunctionalDataset ds = io::load_dataset(o.y, o.x, o.meta);
    return o.intercept ? ds.with_intercept() : ds;
}

WeightModel weights_for(const Options& o, const FunctionalDataset& ds) {
    WeightModel wm = estimate_weights(ds);
    if (o.weights == "identity") return with_identity_weight(wm);
    require(o.weights == "estimated", ErrorKind::invalid_configuration,
            "--weights must be estimated or identity");
    return wm;
}

BridgeConfig solver_config(const Options& o) {
    BridgeConfig c;
    c.S1 = o.S1;
    c.S2 = o.S2;
    c.early_stop_tol = o.tol;
    c.ridge_cv_seed = o.seed;
    return c;
}

void resolve_lambda_alpha(Options& o) {
    if (!o.tune_result.empty()) {
        const Json j = io::read_json(o.tune_result);
        o.lambda = j.at("lambda").get<double>();
        o.alpha = j.at("alpha").get<double>();
    }
    require(o.lambda >= 0.0 && o.alpha > 0.0, ErrorKind::invalid_configuration,
            "fit needs --lambda and --alpha, or --tune-result");
}

void write_curves(const Options& o, const std::string& name, const Matrix& gamma,
                  const BasisSystem& basis) {
    const CoefficientCurves cc = coefficient_functions(gamma, basis);
    io::write_csv(out_path(o, name), io::numbered("t", basis.num_times()), cc.values);
}

void write_fit_outputs(const Options& o, const Matrix& gamma, const BasisSystem& basis,
                       const std::string& prefix) {
    io::write_csv(out_path(o, prefix + "gamma.csv"), io::numbered("b", basis.num_basis()), gamma);
    write_curves(o, prefix + "beta.csv", gamma, basis);
    const CoefficientCurves cc = coefficient_functions(gamma, basis);
    io::write_csv(out_path(o, prefix + "support.csv"), io::numbered("t", basis.num_times()),
                  (!cc.zero.array()).cast<double>().matrix());
}

Json cmd_fit(Options& o) {
    resolve_lambda_alpha(o);
    const FunctionalDataset ds = load(o);
    const BasisSystem basis = eval_basis(make_knots(o.K, o.q), ds.grid());
    const WeightModel wm = weights_for(o, ds);
    const BridgeProblem prob(ds.X(), ds.Y(), basis, wm.W);
    BridgeConfig cfg = solver_config(o);
    cfg.lambda = o.lambda;
    cfg.alpha = o.alpha;
    const BridgeFit fit = fit_group_bridge(prob, cfg);
    write_fit_outputs(o, fit.gamma, basis, "");
    const GlsResult gls = gls_estimate(prob);
    io::write_csv(out_path(o, "gls_gamma.csv"), io::numbered("b", basis.num_basis()), gls.gamma);
    write_curves(o, "gls_beta.csv", gls.gamma, basis);
    Matrix trace(static_cast<Index>(fit.objective_trace.size()), 2);
    for (std::size_t i = 0; i < fit.objective_trace.size(); ++i) {
        trace(static_cast<Index>(i), 0) = fit.objective_trace[i];
        trace(static_cast<Index>(i), 1) = fit.residual_norm_trace[i];
    }
    io::write_csv(out_path(o, "trace.csv"), {"objective", "weighted_residual_norm"}, trace);
    Json r;
    r["objective"] = fit.objective;
    r["converged_at"] = fit.converged_at;
    r["ridge_lambda"] = fit.ridge_lambda;
    r["df"] = degrees_of_freedom(fit.gamma);
    r["bandwidth"] = wm.bandwidth;
    r["sigma2"] = wm.sigma2;
    return r;
}

Json cmd_tune(Options& o) {
    const FunctionalDataset ds = load(o);
    const BasisSystem basis = eval_basis(make_knots(o.K, o.q), ds.grid());
    const WeightModel wm = weights_for(o, ds);
    const BridgeProblem prob(ds.X(), ds.Y(), basis, wm.W);
    TuningOptions opt;
    opt.solver = solver_config(o);
    opt.unadjusted = o.unadjusted;
    opt.threads = o.threads;
    const TuningGrid tg = grid_search(prob, GridSpec::parse(o.grid), opt);
    io::write_surface(out_path(o, "ebic_surface.csv"), tg);
    const GridCell& best = tg.best_cell();
    write_fit_outputs(o, best.gamma, basis, "");
    Json b;
    b["lambda"] = best.lambda;
    b["alpha"] = best.alpha;
    b["score"] = best.score;
    b["df"] = best.df;
    b["nu"] = tg.nu;
    b["ridge_lambda"] = tg.ridge_lambda;
    io::write_json(out_path(o, "best.json"), b);
    std::size_t failed = 0;
    for (const auto& c : tg.cells) failed += c.ok ? 0 : 1;
    b["failed_cells"] = failed;
    return b;
}

Json cmd_simulate(Options& o) {
    SimScenario scn = SimScenario::preset(o.scenario);
    if (o.n > 0) scn.n = o.n;
    if (o.T > 0) scn.T = o.T;
    scn.seed = o.seed;
    const SimData sim = generate(scn);
    io::save_dataset(sim.data, out_path(o, "Y.csv"), out_path(o, "X.csv"),
                     out_path(o, "meta.json"));
    io::write_csv(out_path(o, "beta_true.csv"), io::numbered("t", scn.T), sim.beta);
    Json r;
    r["n"] = scn.n;
    r["T"] = scn.T;
    r["c0"] = scn.c0;
    r["sigma_steps"] = scn.sigma_steps;
    return r;
}

Json cmd_bands(Options& o) {
    resolve_lambda_alpha(o);
    const FunctionalDataset ds = load(o);
    const BasisSystem basis = eval_basis(make_knots(o.K, o.q), ds.grid());
    const WeightModel wm = weights_for(o, ds);
    const BridgeProblem prob(ds.X(), ds.Y(), basis, wm.W);
    BridgeConfig cfg = solver_config(o);
    cfg.lambda = o.lambda;
    cfg.alpha = o.alpha;
    const BridgeFit fit = fit_group_bridge(prob, cfg);
    write_fit_outputs(o, fit.gamma, basis, "");

    ExpansionConfig ec;
    ec.lambda = o.lambda;
    ec.alpha = o.alpha;
    ec.seed = derive_seed(o.seed, 1);
    const Matrix cov = expand_covariance(prob, fit.gamma, fit.D, wm.sigma, ec);
    const CoefficientCurves cc = coefficient_functions(fit.gamma, basis);
    const Index T = ds.T();
    Matrix out(prob.p() * T, 7);
    Json crit = Json::array();
    for (Index j = 0; j < prob.p(); ++j) {
        const Matrix bcov = beta_covariance(cov, basis.values, j);
        const ConfidenceBand band = joint_band(cc.values.row(j).transpose(), bcov, o.level, o.draws,
                                               derive_seed(o.seed, 100 + j), o.threads);
        crit.push_back(band.critical);
        for (Index m = 0; m < T; ++m) {
            out.row(j * T + m) << static_cast<double>(j + 1), ds.grid()[m], band.estimate[m],
                band.sd[m], band.lower[m], band.upper[m], band.critical;
        }
    }
    io::write_csv(out_path(o, "bands.csv"),
                  {"coef", "t", "estimate", "sd", "lower", "upper", "critical"}, out);
    Json r;
    r["critical"] = crit;
    r["level"] = o.level;
    r["draws"] = o.draws;
    if (o.window_lo >= 0.0 && o.window_hi > o.window_lo) {
        const Index j = o.window_coef - 1;
        require(j >= 0 && j < prob.p(), ErrorKind::index_out_of_range,
                "--window-coef is out of range");
        Index first = 0;
        while (first < T && ds.grid()[first] < o.window_lo) ++first;
        Index last = first;
        while (last < T && ds.grid()[last] < o.window_hi) ++last;
        const double pv = suppression_test(cc.values.row(j).transpose(),
                                           beta_covariance(cov, basis.values, j), first, last,
                                           o.draws, derive_seed(o.seed, 999), o.threads);
        r["suppression_p_value"] = pv;
        Matrix pm(1, 4);
        pm << static_cast<double>(o.window_coef), o.window_lo, o.window_hi, pv;
        io::write_csv(out_path(o, "suppression.csv"), {"coef", "window_lo", "window_hi", "p_value"},
                      pm);
    }
    return r;
}

Json cmd_benchmark(Options& o) {
    StudyConfig cfg;
    cfg.scenario = SimScenario::preset(o.scenario);
    if (o.n > 0) cfg.scenario.n = o.n;
    if (o.T > 0) cfg.scenario.T = o.T;
    cfg.scenario.K = o.K;
    cfg.scenario.q = o.q;
    cfg.scenario.seed = o.seed;
    cfg.replications = o.reps;
    cfg.methods.clear();
    std::stringstream ss(o.methods);
    for (std::string m; std::getline(ss, m, ',');) cfg.methods.push_back(parse_method(m));
    cfg.grid = GridSpec::parse(o.grid);
    cfg.solver = solver_config(o);
    cfg.bands = !o.no_bands;
    cfg.level = o.level;
    cfg.band_draws = o.draws;
    cfg.threads = o.threads;
    const StudyResult res = run_study(cfg);
    io::write_study(o.out, res);
    Json r = Json::array();
    for (const auto& row : res.summary()) {
        r.push_back({{"method", to_string(row.method)}, {"metric", row.metric}, {"mean", row.mean}});
    }
    return r;
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"Functional group bridge regression"};
    app.require_subcommand(1);

    auto data_opts = [&](CLI::App* c) {
        c->add_option("--Y", o.y, "response CSV (n x T)")->required();
        c->add_option("--X", o.x, "covariate CSV (n x p)")->required();
        c->add_option("--meta", o.meta, "grid and phase starts JSON")->required();
        c->add_flag("--intercept", o.intercept, "prepend a column of ones to X");
        c->add_option("--weights", o.weights, "estimated | identity")
            ->check(CLI::IsMember({"estimated", "identity"}));
    };
    auto common_opts = [&](CLI::App* c) {
        c->add_option("--K", o.K, "number of B-splines");
        c->add_option("--q", o.q, "spline order");
        c->add_option("--S1", o.S1, "macro iterations");
        c->add_option("--S2", o.S2, "inner ADMM steps");
        c->add_option("--tol", o.tol, "early-stop tolerance");
        c->add_option("--seed", o.seed, "random seed");
        c->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
        c->add_option("--out", o.out, "output directory");
    };
    auto penalty_opts = [&](CLI::App* c) {
        c->add_option("--lambda", o.lambda, "penalty level");
        c->add_option("--alpha", o.alpha, "bridge exponent in (0, 1]");
        c->add_option("--tune-result", o.tune_result, "best.json written by tune");
    };

    CLI::App* fit = app.add_subcommand("fit", "fit at fixed (lambda, alpha)");
    data_opts(fit);
    common_opts(fit);
    penalty_opts(fit);

    CLI::App* tune = app.add_subcommand("tune", "adjusted EBIC grid search");
    data_opts(tune);
    common_opts(tune);
    tune->add_option("--grid", o.grid, "NL:LMIN:LMAX,NA:AMIN:AMAX");
    tune->add_flag("--unadjusted", o.unadjusted, "score with the unadjusted EBIC");

    CLI::App* sim = app.add_subcommand("simulate", "generate a simulation dataset");
    sim->add_option("--scenario", o.scenario, "base | case1 | case2 | case3");
    sim->add_option("--n", o.n, "number of subjects");
    sim->add_option("--T", o.T, "number of time points");
    sim->add_option("--seed", o.seed, "random seed");
    sim->add_option("--out", o.out, "output directory");

    CLI::App* bands = app.add_subcommand("bands", "joint confidence bands and suppression test");
    data_opts(bands);
    common_opts(bands);
    penalty_opts(bands);
    bands->add_option("--level", o.level, "band level");
    bands->add_option("--draws", o.draws, "max-t simulation draws");
    bands->add_option("--window-lo", o.window_lo, "suppression window start");
    bands->add_option("--window-hi", o.window_hi, "suppression window end");
    bands->add_option("--window-coef", o.window_coef, "1-based coefficient for the window test");

    CLI::App* bench = app.add_subcommand("benchmark", "simulation study");
    common_opts(bench);
    bench->add_option("--scenario", o.scenario, "base | case1 | case2 | case3");
    bench->add_option("--n", o.n, "number of subjects");
    bench->add_option("--T", o.T, "number of time points");
    bench->add_option("--reps", o.reps, "replications");
    bench->add_option("--methods", o.methods, "comma list of proposed,identity,alpha1,gls,two_step");
    bench->add_option("--grid", o.grid, "NL:LMIN:LMAX,NA:AMIN:AMAX");
    bench->add_option("--level", o.level, "band level");
    bench->add_option("--draws", o.draws, "max-t simulation draws");
    bench->add_flag("--no-bands", o.no_bands, "skip confidence bands");

    CLI11_PARSE(app, argc, argv);
    o.command = app.get_subcommands().front()->get_name();

    const auto start = std::chrono::steady_clock::now();
    try {
        io::ensure_directory(o.out);
        Json results;
        if (o.command == "fit") results = cmd_fit(o);
        else if (o.command == "tune") results = cmd_tune(o);
        else if (o.command == "simulate") results = cmd_simulate(o);
        else if (o.command == "bands") results = cmd_bands(o);
        else results = cmd_benchmark(o);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_manifest(o, secs, results);
        return 0;
    } catch (const std::exception& e) {
        Json err;
        err["command"] = o.command;
        if (const auto* fe = dynamic_cast<const Error*>(&e)) {
            err["error"] = to_string(fe->kind());
        } else {
            err["error"] = "internal";
        }
        err["message"] = e.what();
        std::cerr << err.dump() << '\n';
        try {
            io::write_json(out_path(o, "error.json"), err);
        } catch (...) {
        }
        return 1;
    }
}
