#pragma once

#include "fgb/common.hpp"
#include "fgb/model_data.hpp"
#include "fgb/simbench.hpp"
#include "fgb/tuning.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace fgb::io {

using Json = nlohmann::ordered_json;

/// Shortest round-trip form with 17 significant digits.
std::string format_double(double v);

struct CsvTable {
    std::vector<std::string> header;
    Matrix values;
};

/// Numeric CSV with one header row. Errors name the file, row and column.
CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header, const Matrix& m);

struct Meta {
    Vector grid;
    std::vector<double> phase_starts;  // start time of every phase after the first
};

Meta read_meta(const std::string& path);
void write_meta(const std::string& path, const Meta& meta);

FunctionalDataset load_dataset(const std::string& path_y, const std::string& path_x,
                               const std::string& path_meta);
void save_dataset(const FunctionalDataset& ds, const std::string& path_y,
                  const std::string& path_x, const std::string& path_meta);

Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);

std::vector<std::string> numbered(const std::string& prefix, Index count);

/// lambda, alpha, score, df, ok
void write_surface(const std::string& path, const TuningGrid& grid);

/// results.csv, replications.csv, roc.csv, support_masks.csv and study.json in `dir`.
void write_study(const std::string& dir, const StudyResult& result);

void ensure_directory(const std::string& dir);

}  // namespace fgb::io
