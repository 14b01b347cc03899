#include "fgb/tuning.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace fgb {

GlsResult gls_estimate(const BridgeProblem& prob) {
    GlsResult out;
    out.gamma = prob.gls();
    out.rss = prob.weighted_rss(out.gamma);
    out.sigma2 = out.rss / static_cast<double>(prob.n() * prob.T());
    return out;
}

double ebic_nu(Index n, Index p, Index K) {
    require(n >= 2 && p * K >= 2, ErrorKind::invalid_configuration, "need n >= 2 and pK >= 2");
    const double v = 1.0 - std::log(static_cast<double>(n)) /
                               (2.0 * std::log(static_cast<double>(p * K)));
    return std::max(v, 0.5);
}

Index degrees_of_freedom(const Matrix& gamma) {
    return static_cast<Index>((gamma.array() != 0.0).count());
}

namespace {

double df_term(Index df, Index n, Index p, Index K, double nu) {
    const double dn = static_cast<double>(n);
    return static_cast<double>(df) *
           (std::log(dn) + nu * std::log(static_cast<double>(p * K))) / dn;
}

}  // namespace

double adjusted_ebic(double rss, double rss_gls, Index df, Index n, Index T, Index p, Index K,
                     double nu) {
    if (!(rss_gls > 0.0)) {
        throw Error(ErrorKind::degenerate_gls,
                    "GLS residual sum of squares is zero; add jitter to the responses");
    }
    return static_cast<double>(T) * rss / rss_gls + df_term(df, n, p, K, nu);
}

double unadjusted_ebic(double rss, double sigma2, Index df, Index n, Index T, Index p, Index K,
                       double nu) {
    if (!(sigma2 > 0.0)) {
        throw Error(ErrorKind::degenerate_gls,
                    "GLS error variance is zero; add jitter to the responses");
    }
    return rss / (static_cast<double>(n) * sigma2) + static_cast<double>(T) * std::log(sigma2) +
           df_term(df, n, p, K, nu);
}

std::vector<double> GridSpec::lambdas() const {
    std::vector<double> out(static_cast<std::size_t>(num_lambda));
    for (int i = 0; i < num_lambda; ++i) {
        out[i] = num_lambda == 1
                     ? lambda_min
                     : std::exp(std::log(lambda_min) +
                                (std::log(lambda_max) - std::log(lambda_min)) * i / (num_lambda - 1));
    }
    if (num_lambda > 1) out.back() = lambda_max;
    return out;
}

std::vector<double> GridSpec::alphas() const {
    std::vector<double> out(static_cast<std::size_t>(num_alpha));
    for (int i = 0; i < num_alpha; ++i) {
        out[i] = num_alpha == 1 ? alpha_min
                                : alpha_min + (alpha_max - alpha_min) * i / (num_alpha - 1);
    }
    return out;
}

void GridSpec::validate() const {
    require(num_lambda >= 1 && num_alpha >= 1, ErrorKind::invalid_configuration,
            "grid needs at least one lambda and one alpha");
    require(lambda_min > 0.0 && lambda_max >= lambda_min, ErrorKind::invalid_configuration,
            "lambda range must satisfy 0 < min <= max");
    require(alpha_min > 0.0 && alpha_max <= 1.0 && alpha_max >= alpha_min,
            ErrorKind::invalid_configuration, "alpha range must lie in (0, 1]");
}

std::string GridSpec::to_string() const {
    std::ostringstream os;
    os.precision(17);
    os << num_lambda << ':' << lambda_min << ':' << lambda_max << ',' << num_alpha << ':'
       << alpha_min << ':' << alpha_max;
    return os.str();
}

GridSpec GridSpec::parse(const std::string& text) {
    GridSpec g;
    char c1, c2, c3, c4, c5;
    std::istringstream is(text);
    if (!(is >> g.num_lambda >> c1 >> g.lambda_min >> c2 >> g.lambda_max >> c3 >> g.num_alpha >>
          c4 >> g.alpha_min >> c5 >> g.alpha_max) ||
        c1 != ':' || c2 != ':' || c3 != ',' || c4 != ':' || c5 != ':' || !(is >> std::ws).eof()) {
        throw Error(ErrorKind::invalid_configuration,
                    "grid must look like NL:LMIN:LMAX,NA:AMIN:AMAX, got '" + text + "'");
    }
    g.validate();
    return g;
}

Matrix TuningGrid::scores() const {
    Matrix s(static_cast<Index>(lambdas.size()), static_cast<Index>(alphas.size()));
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            s(static_cast<Index>(i), static_cast<Index>(a)) = at(i, a).score;
        }
    }
    return s;
}

std::size_t select_best(const std::vector<GridCell>& cells) {
    std::size_t best = cells.size();
    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (!cells[c].ok || !std::isfinite(cells[c].score)) continue;
        if (best == cells.size()) {
            best = c;
            continue;
        }
        const GridCell& a = cells[c];
        const GridCell& b = cells[best];
        if (a.score < b.score ||
            (a.score == b.score &&
             (a.lambda > b.lambda || (a.lambda == b.lambda && a.alpha < b.alpha)))) {
            best = c;
        }
    }
    if (best == cells.size()) throw Error(ErrorKind::all_fits_failed, "every grid fit failed");
    return best;
}

TuningGrid grid_search(const BridgeProblem& prob, const GridSpec& grid,
                       const TuningOptions& options) {
    grid.validate();
    options.solver.validate();
    TuningGrid out;
    out.lambdas = grid.lambdas();
    out.alphas = grid.alphas();
    out.nu = ebic_nu(prob.n(), prob.p(), prob.K());
    out.gls = gls_estimate(prob);
    out.ridge_lambda = options.solver.ridge_lambda
                           ? *options.solver.ridge_lambda
                           : select_ridge_lambda_cv(prob, 5, 20, options.solver.ridge_cv_seed);
    const Matrix start = ridge_warm_start(prob, out.ridge_lambda);

    const std::size_t na = out.alphas.size();
    out.cells.resize(out.lambdas.size() * na);
    for (std::size_t i = 0; i < out.lambdas.size(); ++i) {
        for (std::size_t a = 0; a < na; ++a) {
            out.cells[i * na + a].lambda = out.lambdas[i];
            out.cells[i * na + a].alpha = out.alphas[a];
        }
    }

    auto fit_cell = [&](GridCell& cell) {
        BridgeConfig cfg = options.solver;
        cfg.lambda = cell.lambda;
        cfg.alpha = cell.alpha;
        cfg.ridge_lambda = out.ridge_lambda;
        try {
            BridgeFit fit = fit_group_bridge(prob, cfg, &start);
            cell.gamma = std::move(fit.gamma);
            cell.rss = prob.weighted_rss(cell.gamma);
            cell.df = degrees_of_freedom(cell.gamma);
            cell.score = options.unadjusted
                             ? unadjusted_ebic(cell.rss, out.gls.sigma2, cell.df, prob.n(),
                                               prob.T(), prob.p(), prob.K(), out.nu)
                             : adjusted_ebic(cell.rss, out.gls.rss, cell.df, prob.n(), prob.T(),
                                             prob.p(), prob.K(), out.nu);
            cell.ok = std::isfinite(cell.score);
            if (!cell.ok) cell.diagnostic = "non-finite score";
        } catch (const Error& e) {
            cell.ok = false;
            cell.score = std::numeric_limits<double>::infinity();
            cell.diagnostic = std::string(to_string(e.kind())) + ": " + e.what();
        }
        if (!cell.ok) cell.score = std::numeric_limits<double>::infinity();
    };

    const int nt = std::max(1, std::min<int>(options.threads, static_cast<int>(out.cells.size())));
    if (nt == 1) {
        for (auto& cell : out.cells) fit_cell(cell);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < nt; ++w) {
            pool.emplace_back([&] {
                for (std::size_t c = next++; c < out.cells.size(); c = next++) fit_cell(out.cells[c]);
            });
        }
        for (auto& t : pool) t.join();
    }
    out.best = select_best(out.cells);
    return out;
}

}  // namespace fgb
