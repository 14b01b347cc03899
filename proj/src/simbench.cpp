#include "fgb/simbench.hpp"

#include "fgb/inference.hpp"
#include "fgb/weights.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace fgb {

double true_beta(int j, double t) {
    constexpr double pi = std::numbers::pi;
    switch (j) {
        case 1:
            return 0.0;
        case 2:
            return std::sin(pi * t);
        case 3:
            if (t >= 0.2 && t < 0.4) return std::sin(2.5 * pi * t - 0.5 * pi);
            if (t >= 0.4 && t < 0.6) return 1.0;
            if (t >= 0.6 && t < 0.8) return std::sin(2.5 * pi * t - pi);
            return 0.0;
        default:
            throw Error(ErrorKind::index_out_of_range, "coefficient index must be 1, 2 or 3");
    }
}

Matrix true_beta_curves(const Vector& grid, double c0) {
    Matrix out(3, grid.size());
    for (int j = 0; j < 3; ++j) {
        for (Index m = 0; m < grid.size(); ++m) out(j, m) = c0 * true_beta(j + 1, grid[m]);
    }
    return out;
}

void SimScenario::validate() const {
    require(n >= 2, ErrorKind::invalid_configuration, "scenario needs n >= 2");
    require(T >= 10, ErrorKind::invalid_configuration, "scenario needs T >= 10");
    require(K >= q && q >= 1, ErrorKind::invalid_configuration, "scenario needs K >= q >= 1");
    require(sigma_steps.size() == boundaries.size() + 1, ErrorKind::invalid_configuration,
            "need one sigma level per phase");
    require(std::is_sorted(sigma_steps.begin(), sigma_steps.end()),
            ErrorKind::invalid_configuration, "sigma levels must be non-decreasing");
    require(std::abs(ar_rho) < 1.0, ErrorKind::invalid_configuration, "AR coefficient must be in (-1, 1)");
    require(noise_sd >= 0.0, ErrorKind::invalid_configuration, "noise sd must be >= 0");
}

SimScenario SimScenario::preset(const std::string& label) {
    SimScenario s;
    s.label = label;
    if (label == "base") return s;
    if (label == "case1") {
        s.T = 1000;
        s.K = 40;
        return s;
    }
    if (label == "case2") {
        s.c0 = 5.0;
        return s;
    }
    if (label == "case3") {
        s.c0 = 0.2;
        return s;
    }
    throw Error(ErrorKind::invalid_configuration, "unknown scenario '" + label + "'");
}

SimData generate(const SimScenario& scn) {
    scn.validate();
    const Vector grid = uniform_grid(scn.T);
    auto phases = phases_from_boundaries(grid, scn.boundaries);
    Vector sigma(scn.T);
    for (std::size_t p = 0; p < phases.size(); ++p) {
        for (Index m = phases[p].begin; m < phases[p].end; ++m) sigma[m] = scn.sigma_steps[p];
    }

    std::mt19937_64 rng(scn.seed);
    std::normal_distribution<double> normal;
    Matrix X(scn.n, 3);
    for (Index i = 0; i < scn.n; ++i) {
        for (Index j = 0; j < 3; ++j) X(i, j) = normal(rng);
    }
    const double innov = std::sqrt(1.0 - scn.ar_rho * scn.ar_rho);
    Matrix theta(scn.n, scn.T);
    for (Index i = 0; i < scn.n; ++i) {
        double a = normal(rng);
        for (Index m = 0; m < scn.T; ++m) {
            if (m > 0) a = scn.ar_rho * a + innov * normal(rng);
            theta(i, m) = sigma[m] * a;
        }
    }
    Matrix eps(scn.n, scn.T);
    for (Index i = 0; i < scn.n; ++i) {
        for (Index m = 0; m < scn.T; ++m) eps(i, m) = scn.noise_sd * normal(rng);
    }
    Matrix beta = true_beta_curves(grid, scn.c0);
    Matrix Y = X * beta + theta + eps;
    return SimData{FunctionalDataset(std::move(Y), std::move(X), grid, std::move(phases)),
                   std::move(beta), std::move(theta)};
}

TwoStepFit two_step_fos(const FunctionalDataset& ds, const BasisSystem& basis) {
    const Matrix b = ols_pointwise(ds.X(), ds.Y());
    const Index K = basis.num_basis();
    const Index T = ds.T();
    require(basis.num_times() == T, ErrorKind::dimension_mismatch, "basis grid does not match data");
    const Matrix& B = basis.values;
    const Matrix bbt = B * B.transpose();
    Matrix Dd = Matrix::Zero(std::max<Index>(K - 2, 0), K);
    for (Index r = 0; r + 2 < K; ++r) {
        Dd(r, r) = 1.0;
        Dd(r, r + 1) = -2.0;
        Dd(r, r + 2) = 1.0;
    }
    const Matrix pen = Dd.transpose() * Dd;
    const double scale = bbt.trace() / static_cast<double>(K);

    TwoStepFit fit;
    fit.gamma = Matrix::Zero(ds.p(), K);
    for (Index j = 0; j < ds.p(); ++j) {
        const Vector bj = b.row(j).transpose();
        double best = std::numeric_limits<double>::infinity();
        double best_kappa = 0.0;
        Matrix best_hat;
        for (int e = 0; e <= 48; ++e) {
            const double kappa = scale * std::pow(10.0, -8.0 + 0.25 * e);
            const Eigen::LDLT<Matrix> ldlt(bbt + kappa * pen);
            const Matrix hat = B.transpose() * ldlt.solve(B);
            const double tr = hat.trace();
            const double denom = static_cast<double>(T) - tr;
            if (!(denom > 0.0)) continue;
            const double gcv = static_cast<double>(T) * (bj - hat * bj).squaredNorm() / (denom * denom);
            if (gcv < best) {
                best = gcv;
                best_kappa = kappa;
                best_hat = hat;
            }
        }
        require(std::isfinite(best), ErrorKind::degenerate_smoother,
                "no smoothing penalty gives a valid GCV score");
        const Eigen::LDLT<Matrix> ldlt(bbt + best_kappa * pen);
        fit.gamma.row(j) = ldlt.solve(B * bj).transpose();
        fit.penalty.push_back(best_kappa);
        fit.hat.push_back(std::move(best_hat));
    }
    return fit;
}

Matrix two_step_covariance(const TwoStepFit& fit, const FunctionalDataset& ds, const Matrix& sigma,
                           Index j) {
    require(j >= 0 && j < static_cast<Index>(fit.hat.size()), ErrorKind::index_out_of_range,
            "coefficient index out of range");
    const Matrix xtx_inv = (ds.X().transpose() * ds.X()).inverse();
    const Matrix& A = fit.hat[static_cast<std::size_t>(j)];
    Matrix cov = xtx_inv(j, j) * (A * sigma * A.transpose());
    return 0.5 * (cov + cov.transpose());
}

SplineOracle sparse_spline_oracle(const std::function<double(double)>& beta, int K, int q,
                                  std::optional<double> c_star, int r, int fine_points) {
    require(K >= q, ErrorKind::invalid_configuration, "need K >= q");
    require(fine_points >= 2 * K, ErrorKind::invalid_configuration, "fine grid is too coarse");
    const KnotVector knots = make_knots(K, q);
    const Vector fine = uniform_grid(fine_points);
    const BasisSystem bs = eval_basis(knots, fine);
    Vector y(fine.size());
    for (Index m = 0; m < fine.size(); ++m) y[m] = beta(fine[m]);

    SplineOracle out;
    out.gamma_star = (bs.values * bs.values.transpose()).ldlt().solve(bs.values * y);
    out.approx_error = (bs.values.transpose() * out.gamma_star - y).cwiseAbs().maxCoeff();
    out.c_star = c_star ? *c_star : out.approx_error * std::pow(static_cast<double>(K), r);
    const double thr = out.c_star * std::pow(static_cast<double>(K), -r);

    const auto& u = knots.knots();
    const double last = static_cast<double>(fine_points - 1);
    for (std::size_t s = 0; s + 1 < u.size(); ++s) {
        if (!(u[s] < u[s + 1])) continue;
        const auto lo = static_cast<Index>(std::ceil(u[s] * last - 1e-9));
        const auto hi = std::min(static_cast<Index>(std::floor(u[s + 1] * last + 1e-9)),
                                 static_cast<Index>(fine_points - 1));
        for (Index m = lo; m <= hi; ++m) {
            if (std::abs(y[m]) < thr) {
                out.a1.push_back(static_cast<int>(s));
                break;
            }
        }
    }

    out.gamma_tilde = out.gamma_star;
    for (Index k = 0; k < K; ++k) {
        if (std::abs(out.gamma_tilde[k]) < thr / q) out.gamma_tilde[k] = 0.0;
        const bool near = std::any_of(out.a1.begin(), out.a1.end(),
                                      [&](int s) { return s >= k && s <= k + q; });
        if (near) {
            out.gamma_tilde[k] = 0.0;
            out.zeroed.push_back(static_cast<int>(k));
        }
    }
    return out;
}

double l2_norm(const Vector& values, const Vector& grid) {
    require(values.size() == grid.size() && grid.size() >= 2, ErrorKind::dimension_mismatch,
            "curve and grid lengths differ");
    double s = 0.0;
    for (Index m = 0; m + 1 < grid.size(); ++m) {
        s += 0.5 * (grid[m + 1] - grid[m]) * (values[m] * values[m] + values[m + 1] * values[m + 1]);
    }
    return std::sqrt(s);
}

MetricsReport evaluate(const Vector& estimate, const Vector& truth, const Vector& grid,
                       double delta, const Vector* lower, const Vector* upper) {
    require(estimate.size() == truth.size() && truth.size() == grid.size(),
            ErrorKind::dimension_mismatch, "estimate, truth and grid must share one grid");
    require(delta >= 0.0, ErrorKind::invalid_configuration, "delta must be >= 0");
    MetricsReport rep;
    const Vector diff = estimate - truth;
    rep.rmse = l2_norm(diff, grid);
    rep.l_inf = diff.cwiseAbs().maxCoeff();

    Index zero_truth = 0, fp = 0, support = 0, tp = 0, declared = 0;
    for (Index m = 0; m < truth.size(); ++m) {
        const bool tz = std::abs(truth[m]) < kTruthZero;
        const bool nz = std::abs(estimate[m]) > delta;
        if (tz) {
            ++zero_truth;
            if (nz) ++fp;
        } else {
            ++support;
            if (nz) ++tp;
        }
        if (nz) ++declared;
    }
    rep.fpr = zero_truth ? static_cast<double>(fp) / static_cast<double>(zero_truth) : 0.0;
    rep.tpr = support ? static_cast<double>(tp) / static_cast<double>(support) : 0.0;
    rep.precision_defined = declared > 0;
    rep.precision = declared ? static_cast<double>(tp) / static_cast<double>(declared) : 0.0;
    rep.f1 = (rep.precision_defined && rep.tpr > 0.0 && rep.precision > 0.0)
                 ? 2.0 / (1.0 / rep.tpr + 1.0 / rep.precision)
                 : 0.0;

    if (lower && upper) {
        require(lower->size() == truth.size() && upper->size() == truth.size(),
                ErrorKind::dimension_mismatch, "band limits do not match the grid");
        Index inside = 0;
        for (Index m = 0; m < truth.size(); ++m) {
            if ((*lower)[m] <= truth[m] && truth[m] <= (*upper)[m]) ++inside;
        }
        rep.coverage = static_cast<double>(inside) / static_cast<double>(truth.size());
    }
    return rep;
}

std::vector<RocPoint> roc_curve(const Vector& estimate, const Vector& truth,
                                const std::vector<double>& deltas) {
    std::vector<RocPoint> out;
    const Vector grid = uniform_grid(static_cast<int>(truth.size()));
    for (double d : deltas) {
        const auto rep = evaluate(estimate, truth, grid, d);
        out.push_back({d, rep.fpr, rep.tpr});
    }
    return out;
}

double segment_fpr(const Vector& estimate, const Vector& truth, const Vector& grid, double lo,
                   double hi) {
    Index zero_truth = 0, fp = 0;
    for (Index m = 0; m < truth.size(); ++m) {
        if (grid[m] < lo - 1e-12 || grid[m] > hi + 1e-12) continue;
        if (std::abs(truth[m]) < kTruthZero) {
            ++zero_truth;
            if (estimate[m] != 0.0) ++fp;
        }
    }
    return zero_truth ? static_cast<double>(fp) / static_cast<double>(zero_truth) : 0.0;
}

const char* to_string(Method m) {
    switch (m) {
        case Method::proposed: return "proposed";
        case Method::identity: return "identity";
        case Method::alpha1: return "alpha1";
        case Method::gls: return "gls";
        case Method::two_step: return "two_step";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    for (Method m : {Method::proposed, Method::identity, Method::alpha1, Method::gls,
                     Method::two_step}) {
        if (name == to_string(m)) return m;
    }
    throw Error(ErrorKind::invalid_configuration, "unknown method '" + name + "'");
}

std::vector<double> StudyConfig::delta_grid() const {
    if (!deltas.empty()) return deltas;
    std::vector<double> out(21);
    for (int i = 0; i <= 20; ++i) out[i] = scenario.c0 * i / 20.0;
    return out;
}

ReplicationOutcome run_replication(const StudyConfig& config, int index) {
    ReplicationOutcome rep;
    rep.index = index;
    rep.seed = derive_seed(config.scenario.seed, static_cast<std::uint64_t>(index));
    SimScenario scn = config.scenario;
    scn.seed = rep.seed;
    const SimData sim = generate(scn);
    const FunctionalDataset& ds = sim.data;
    const BasisSystem basis = eval_basis(make_knots(scn.K, scn.q), ds.grid());
    const WeightModel wm = estimate_weights(ds);
    const Vector truth = sim.beta.row(2).transpose();
    const auto deltas = config.delta_grid();

    std::optional<BridgeProblem> weighted;
    for (Method method : config.methods) {
        MethodOutcome mo;
        mo.method = method;
        Matrix bcov;
        if (method == Method::two_step) {
            const TwoStepFit fit = two_step_fos(ds, basis);
            mo.gamma = fit.gamma;
            if (config.bands) bcov = two_step_covariance(fit, ds, wm.sigma, 2);
        } else if (method == Method::identity) {
            const BridgeProblem prob(ds.X(), ds.Y(), basis, Matrix::Identity(ds.T(), ds.T()));
            TuningOptions opt{config.solver, false, config.threads};
            const TuningGrid tg = grid_search(prob, config.grid, opt);
            mo.gamma = tg.best_cell().gamma;
            mo.lambda = tg.best_cell().lambda;
            mo.alpha = tg.best_cell().alpha;
        } else {
            if (!weighted) weighted.emplace(ds.X(), ds.Y(), basis, wm.W);
            if (method == Method::gls) {
                mo.gamma = weighted->gls();
            } else {
                GridSpec g = config.grid;
                if (method == Method::alpha1) {
                    g.num_alpha = 1;
                    g.alpha_min = g.alpha_max = 1.0;
                }
                TuningOptions opt{config.solver, false, config.threads};
                const TuningGrid tg = grid_search(*weighted, g, opt);
                mo.gamma = tg.best_cell().gamma;
                mo.lambda = tg.best_cell().lambda;
                mo.alpha = tg.best_cell().alpha;
            }
        }
        if (config.bands && method != Method::two_step) {
            const BridgeProblem* prob = &*weighted;
            std::optional<BridgeProblem> ident;
            if (method == Method::identity) {
                ident.emplace(ds.X(), ds.Y(), basis, Matrix::Identity(ds.T(), ds.T()));
                prob = &*ident;
            }
            const double alpha = method == Method::gls ? 1.0 : mo.alpha;
            const Matrix D = lasso_weights(*prob, mo.gamma, alpha);
            ExpansionConfig ec;
            ec.lambda = mo.lambda;
            ec.alpha = alpha;
            ec.seed = derive_seed(rep.seed, 101);
            const Matrix cov = expand_covariance(*prob, mo.gamma, D, wm.sigma, ec);
            bcov = beta_covariance(cov, basis.values, 2);
        }

        mo.beta3 = coefficient_functions(mo.gamma, basis).values.row(2).transpose();
        if (config.bands) {
            const ConfidenceBand band = joint_band(mo.beta3, bcov, config.level, config.band_draws,
                                                   derive_seed(rep.seed, 202), config.threads);
            mo.metrics = evaluate(mo.beta3, truth, ds.grid(), 0.0, &band.lower, &band.upper);
        } else {
            mo.metrics = evaluate(mo.beta3, truth, ds.grid(), 0.0);
        }
        mo.roc = roc_curve(mo.beta3, truth, deltas);
        mo.fpr_early = segment_fpr(mo.beta3, truth, ds.grid(), 0.0, 0.2);
        mo.fpr_late = segment_fpr(mo.beta3, truth, ds.grid(), 0.8, 1.0);
        mo.fpr_overall = mo.metrics.fpr;
        rep.methods.push_back(std::move(mo));
    }
    return rep;
}

StudyResult run_study(const StudyConfig& config) {
    require(config.replications >= 1, ErrorKind::invalid_configuration,
            "need at least one replication");
    require(!config.methods.empty(), ErrorKind::invalid_configuration, "no methods requested");
    StudyResult out;
    out.config = config;
    out.grid = uniform_grid(config.scenario.T);
    for (int r = 0; r < config.replications; ++r) {
        try {
            out.replications.push_back(run_replication(config, r));
        } catch (const Error& e) {
            std::ostringstream os;
            os << "replication " << r << " failed: " << to_string(e.kind()) << ": " << e.what();
            throw Error(ErrorKind::replication_failed, os.str());
        }
    }
    return out;
}

namespace {

double metric_value(const MethodOutcome& mo, const std::string& metric) {
    if (metric == "rmse") return mo.metrics.rmse;
    if (metric == "l_inf") return mo.metrics.l_inf;
    if (metric == "coverage") return mo.metrics.coverage;
    if (metric == "f1") return mo.metrics.f1;
    if (metric == "fpr") return mo.metrics.fpr;
    if (metric == "tpr") return mo.metrics.tpr;
    if (metric == "precision") {
        return mo.metrics.precision_defined ? mo.metrics.precision
                                            : std::numeric_limits<double>::quiet_NaN();
    }
    if (metric == "fpr_0_0.2") return mo.fpr_early;
    if (metric == "fpr_0.8_1") return mo.fpr_late;
    if (metric == "lambda") return mo.lambda;
    if (metric == "alpha") return mo.alpha;
    throw Error(ErrorKind::invalid_configuration, "unknown metric '" + metric + "'");
}

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{"rmse", "l_inf", "coverage", "f1",
                                                "fpr", "tpr", "precision", "fpr_0_0.2",
                                                "fpr_0.8_1", "lambda", "alpha"};
    return names;
}

}  // namespace

std::vector<SummaryRow> StudyResult::summary() const {
    std::vector<SummaryRow> rows;
    for (Method m : config.methods) {
        for (const auto& name : metric_names()) {
            std::vector<double> v;
            for (const auto& rep : replications) {
                for (const auto& mo : rep.methods) {
                    if (mo.method != m) continue;
                    const double x = metric_value(mo, name);
                    if (!std::isnan(x)) v.push_back(x);
                }
            }
            SummaryRow row;
            row.method = m;
            row.metric = name;
            if (v.empty()) {
                row.mean = std::numeric_limits<double>::quiet_NaN();
            } else {
                double s = 0.0;
                for (double x : v) s += x;
                row.mean = s / static_cast<double>(v.size());
                if (v.size() > 1) {
                    double ss = 0.0;
                    for (double x : v) ss += (x - row.mean) * (x - row.mean);
                    row.se = std::sqrt(ss / static_cast<double>(v.size() - 1) /
                                       static_cast<double>(v.size()));
                }
            }
            rows.push_back(row);
        }
    }
    return rows;
}

double StudyResult::mean_metric(Method m, const std::string& metric) const {
    for (const auto& row : summary()) {
        if (row.method == m && row.metric == metric) return row.mean;
    }
    throw Error(ErrorKind::invalid_configuration, "metric not available for this method");
}

std::vector<std::pair<Method, std::vector<RocPoint>>> StudyResult::mean_roc() const {
    std::vector<std::pair<Method, std::vector<RocPoint>>> out;
    const auto deltas = config.delta_grid();
    for (Method m : config.methods) {
        std::vector<RocPoint> acc(deltas.size());
        int count = 0;
        for (const auto& rep : replications) {
            for (const auto& mo : rep.methods) {
                if (mo.method != m) continue;
                ++count;
                for (std::size_t d = 0; d < deltas.size(); ++d) {
                    acc[d].fpr += mo.roc[d].fpr;
                    acc[d].tpr += mo.roc[d].tpr;
                }
            }
        }
        for (std::size_t d = 0; d < deltas.size(); ++d) {
            acc[d].delta = deltas[d];
            if (count) {
                acc[d].fpr /= count;
                acc[d].tpr /= count;
            }
        }
        out.emplace_back(m, std::move(acc));
    }
    return out;
}

}  // namespace fgb
