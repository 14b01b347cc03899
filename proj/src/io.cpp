#include "fgb/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fgb::io {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\"");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\"");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error(ErrorKind::io, "cannot write " + path);
    return os;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::invalid_input, path + ": missing header row");
    t.header = split(line);
    const std::size_t cols = t.header.size();
    std::vector<std::vector<double>> rows;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (cells.size() != cols) {
            std::ostringstream os;
            os << path << ": row " << row << " has " << cells.size() << " cells, expected " << cols;
            throw Error(ErrorKind::invalid_input, os.str());
        }
        std::vector<double> vals(cols);
        for (std::size_t c = 0; c < cols; ++c) {
            const std::string& s = cells[c];
            double v = 0.0;
            const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
                std::ostringstream os;
                os << path << ": row " << row << ", column " << (c + 1) << " ('" << t.header[c]
                   << "') is not numeric: '" << s << "'";
                throw Error(ErrorKind::invalid_input, os.str());
            }
            vals[c] = v;
        }
        rows.push_back(std::move(vals));
    }
    t.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            t.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
        }
    }
    return t;
}

void write_csv(const std::string& path, const std::vector<std::string>& header, const Matrix& m) {
    require(static_cast<Index>(header.size()) == m.cols(), ErrorKind::dimension_mismatch,
            "header length does not match the matrix for " + path);
    auto os = open_out(path);
    for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
    os << '\n';
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) os << (c ? "," : "") << format_double(m(r, c));
        os << '\n';
    }
}

Json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::invalid_input, path + ": " + e.what());
    }
}

void write_json(const std::string& path, const Json& j) {
    auto os = open_out(path);
    os << j.dump(2) << '\n';
}

Meta read_meta(const std::string& path) {
    const Json j = read_json(path);
    Meta meta;
    try {
        const auto grid = j.at("grid").get<std::vector<double>>();
        meta.grid = Eigen::Map<const Vector>(grid.data(), static_cast<Index>(grid.size()));
        if (j.contains("phase_starts")) {
            meta.phase_starts = j.at("phase_starts").get<std::vector<double>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::invalid_input, path + ": " + e.what());
    }
    return meta;
}

void write_meta(const std::string& path, const Meta& meta) {
    Json j;
    j["grid"] = std::vector<double>(meta.grid.data(), meta.grid.data() + meta.grid.size());
    j["phase_starts"] = meta.phase_starts;
    write_json(path, j);
}

FunctionalDataset load_dataset(const std::string& path_y, const std::string& path_x,
                               const std::string& path_meta) {
    const CsvTable y = read_csv(path_y);
    const CsvTable x = read_csv(path_x);
    const Meta meta = read_meta(path_meta);
    if (meta.grid.size() != y.values.cols()) {
        std::ostringstream os;
        os << path_meta << ": grid has " << meta.grid.size() << " points but " << path_y << " has "
           << y.values.cols() << " columns";
        throw Error(ErrorKind::dimension_mismatch, os.str());
    }
    for (Index m = 0; m < meta.grid.size(); ++m) {
        if (!(meta.grid[m] >= 0.0 && meta.grid[m] <= 1.0) ||
            (m > 0 && !(meta.grid[m] > meta.grid[m - 1]))) {
            std::ostringstream os;
            os << path_meta << ": grid entry " << m << " breaks strict increase within [0, 1]";
            throw Error(ErrorKind::invalid_input, os.str());
        }
    }
    if (x.values.rows() != y.values.rows()) {
        std::ostringstream os;
        os << path_x << " has " << x.values.rows() << " rows but " << path_y << " has "
           << y.values.rows();
        throw Error(ErrorKind::dimension_mismatch, os.str());
    }
    auto phases = phases_from_starts(meta.grid, meta.phase_starts);
    return FunctionalDataset(y.values, x.values, meta.grid, std::move(phases));
}

void save_dataset(const FunctionalDataset& ds, const std::string& path_y,
                  const std::string& path_x, const std::string& path_meta) {
    write_csv(path_y, numbered("t", ds.T()), ds.Y());
    write_csv(path_x, numbered("x", ds.p()), ds.X());
    Meta meta;
    meta.grid = ds.grid();
    for (std::size_t p = 1; p < ds.phases().size(); ++p) {
        meta.phase_starts.push_back(ds.grid()[ds.phases()[p].begin]);
    }
    write_meta(path_meta, meta);
}

std::vector<std::string> numbered(const std::string& prefix, Index count) {
    std::vector<std::string> out;
    for (Index i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i + 1));
    return out;
}

void write_surface(const std::string& path, const TuningGrid& grid) {
    auto os = open_out(path);
    os << "lambda,alpha,score,df,ok\n";
    for (const auto& c : grid.cells) {
        os << format_double(c.lambda) << ',' << format_double(c.alpha) << ','
           << format_double(c.score) << ',' << c.df << ',' << (c.ok ? 1 : 0) << '\n';
    }
}

void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create directory " + dir + ": " + ec.message());
}

void write_study(const std::string& dir, const StudyResult& result) {
    ensure_directory(dir);
    const std::filesystem::path d(dir);
    {
        auto os = open_out((d / "results.csv").string());
        os << "method,metric,mean,se\n";
        for (const auto& row : result.summary()) {
            os << to_string(row.method) << ',' << row.metric << ',' << format_double(row.mean) << ','
               << (std::isnan(row.se) ? std::string() : format_double(row.se)) << '\n';
        }
    }
    {
        auto os = open_out((d / "replications.csv").string());
        os << "replication,seed,method,lambda,alpha,rmse,l_inf,coverage,fpr,tpr,precision,f1,"
              "fpr_0_0.2,fpr_0.8_1\n";
        for (const auto& rep : result.replications) {
            for (const auto& mo : rep.methods) {
                const auto& m = mo.metrics;
                os << rep.index << ',' << rep.seed << ',' << to_string(mo.method) << ','
                   << format_double(mo.lambda) << ',' << format_double(mo.alpha) << ','
                   << format_double(m.rmse) << ',' << format_double(m.l_inf) << ','
                   << format_double(m.coverage) << ',' << format_double(m.fpr) << ','
                   << format_double(m.tpr) << ','
                   << (m.precision_defined ? format_double(m.precision) : std::string("nan"))
                   << ',' << format_double(m.f1) << ',' << format_double(mo.fpr_early) << ','
                   << format_double(mo.fpr_late) << '\n';
            }
        }
    }
    {
        auto os = open_out((d / "roc.csv").string());
        os << "method,delta,fpr,tpr\n";
        for (const auto& [method, pts] : result.mean_roc()) {
            for (const auto& p : pts) {
                os << to_string(method) << ',' << format_double(p.delta) << ','
                   << format_double(p.fpr) << ',' << format_double(p.tpr) << '\n';
            }
        }
    }
    {
        auto os = open_out((d / "support_masks.csv").string());
        os << "replication,method,delta";
        for (Index m = 0; m < result.grid.size(); ++m) os << ",t" << (m + 1);
        os << '\n';
        const auto deltas = result.config.delta_grid();
        for (const auto& rep : result.replications) {
            for (const auto& mo : rep.methods) {
                for (double delta : deltas) {
                    os << rep.index << ',' << to_string(mo.method) << ',' << format_double(delta);
                    for (Index m = 0; m < mo.beta3.size(); ++m) {
                        os << ',' << (std::abs(mo.beta3[m]) > delta ? 1 : 0);
                    }
                    os << '\n';
                }
            }
        }
    }
    const auto& cfg = result.config;
    const auto& s = cfg.scenario;
    Json j;
    j["scenario"] = {{"label", s.label},       {"n", s.n},
                     {"T", s.T},               {"K", s.K},
                     {"q", s.q},               {"master_seed", s.seed},
                     {"c0", s.c0},             {"boundaries", s.boundaries},
                     {"sigma_steps", s.sigma_steps}, {"ar_rho", s.ar_rho},
                     {"noise_sd", s.noise_sd}};
    j["replications"] = cfg.replications;
    std::vector<std::string> methods;
    for (Method m : cfg.methods) methods.emplace_back(to_string(m));
    j["methods"] = methods;
    j["grid"] = cfg.grid.to_string();
    j["S1"] = cfg.solver.S1;
    j["S2"] = cfg.solver.S2;
    j["band_level"] = cfg.level;
    j["band_draws"] = cfg.band_draws;
    j["deltas"] = cfg.delta_grid();
    std::vector<std::uint64_t> seeds;
    for (const auto& rep : result.replications) seeds.push_back(rep.seed);
    j["replication_seeds"] = seeds;
    write_json((d / "study.json").string(), j);
}

}  // namespace fgb::io
