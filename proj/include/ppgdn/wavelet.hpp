#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ppgdn::wavelet {

using Signal = std::vector<double>;

/// Boundary handling for the filter cascade. Symmetric is half-sample
/// reflection (x[-1] = x[0]); periodic wraps the signal, padding odd
/// lengths by repeating the last sample so the transform stays orthogonal.
enum class Boundary { symmetric, periodic };

std::string boundary_name(Boundary b);
Boundary boundary_from_name(const std::string& name);

/// Orthonormal Daubechies analysis/synthesis filter pair of order 1..10.
/// All four filters have length 2*order. lo_dec sums to sqrt(2) and has
/// unit energy; hi_dec[k] = (-1)^k * lo_dec[2*order-1-k]; the rec filters
/// are the time-reversed dec filters.
struct FilterBank {
    int order = 0;
    std::vector<double> lo_dec;
    std::vector<double> hi_dec;
    std::vector<double> lo_rec;
    std::vector<double> hi_rec;

    std::size_t length() const { return lo_dec.size(); }
    std::string name() const { return "db" + std::to_string(order); }
};

FilterBank daubechies_filters(int order);

/// Output length of one analysis step on a length-n input.
std::size_t dwt_output_len(std::size_t n, std::size_t filter_len, Boundary b);

struct DwtResult {
    std::vector<double> approx;
    std::vector<double> detail;
};

DwtResult dwt_step(const Signal& signal, const FilterBank& bank, Boundary boundary);

std::vector<double> idwt_step(const std::vector<double>& approx,
                              const std::vector<double>& detail,
                              const FilterBank& bank, Boundary boundary,
                              std::size_t target_len);

/// Multi-level decomposition. details are stored coarsest first
/// (cD_L, ..., cD_1). level_input_len[k] is the length of the signal fed
/// into step k+1, so level_input_len[0] == original_len and
/// approx.size() == dwt_output_len(level_input_len[level-1]).
struct CoefficientSet {
    std::vector<double> approx;
    std::vector<std::vector<double>> details;
    int level = 0;
    std::size_t original_len = 0;
    FilterBank bank;
    Boundary boundary = Boundary::symmetric;
    std::vector<std::size_t> level_input_len;
    /// Set when the requested level exceeds max_level() for this signal.
    bool exceeded_recommended_level = false;

    void validate() const;
};

CoefficientSet wavedec(const Signal& signal, const FilterBank& bank, int level,
                       Boundary boundary);

Signal waverec(const CoefficientSet& coeffs);

/// Columns s_1..s_{L+1}: column i (i <= L) is the reconstruction from the
/// level-i detail band alone (finest band first), column L+1 from the
/// approximation alone. Columns sum to the analyzed signal.
struct SubsignalMatrix {
    std::vector<Signal> columns;
    std::size_t signal_len = 0;
    int level = 0;
    int wavelet_order = 0;
    Boundary boundary = Boundary::symmetric;
};

SubsignalMatrix subsignal_matrix(const Signal& signal, const FilterBank& bank,
                                 int level, Boundary boundary);

/// Conservative decomposition-depth bound floor(log2(n / (2*order - 1))).
/// Deeper levels are allowed by wavedec as long as every intermediate stays
/// non-empty; they just flag exceeded_recommended_level.
int max_level(std::size_t n, int order);

}  // namespace ppgdn::wavelet
