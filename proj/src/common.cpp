#include "fgb/common.hpp"

#include <sstream>

namespace fgb {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_configuration: return "invalid_configuration";
        case ErrorKind::invalid_input: return "invalid_input";
        case ErrorKind::index_out_of_range: return "index_out_of_range";
        case ErrorKind::dimension_mismatch: return "dimension_mismatch";
        case ErrorKind::rank_deficient: return "rank_deficient";
        case ErrorKind::bandwidth: return "bandwidth";
        case ErrorKind::degenerate_smoother: return "degenerate_smoother";
        case ErrorKind::degenerate_noise: return "degenerate_noise";
        case ErrorKind::divergence: return "divergence";
        case ErrorKind::degenerate_support: return "degenerate_support";
        case ErrorKind::not_psd: return "not_psd";
        case ErrorKind::empty_window: return "empty_window";
        case ErrorKind::degenerate_gls: return "degenerate_gls";
        case ErrorKind::all_fits_failed: return "all_fits_failed";
        case ErrorKind::replication_failed: return "replication_failed";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

std::string shape(const Matrix& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ (index * 0xd1b54a32d192ed03ULL));
}

}  // namespace fgb
