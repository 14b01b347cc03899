#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fgb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Index = Eigen::Index;

enum class ErrorKind {
    invalid_configuration,
    invalid_input,
    index_out_of_range,
    dimension_mismatch,
    rank_deficient,
    bandwidth,
    degenerate_smoother,
    degenerate_noise,
    divergence,
    degenerate_support,
    not_psd,
    empty_window,
    degenerate_gls,
    all_fits_failed,
    replication_failed,
    io,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) throw Error(kind, what);
}

std::string shape(const Matrix& m);

/// Stateless 64-bit mixer used to derive child seeds.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace fgb
