#include "ppgdn/wavelet.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>

namespace ppgdn::wavelet {

namespace {

// Minimum-phase Daubechies scaling filters db1..db10, sum = sqrt(2).
// Generated by spectral factorization of the maximally flat half-band
// polynomial at 60-digit precision and verified against the defining
// equations (orthonormal even translates, p vanishing moments) and the
// db1/db2 closed forms before rounding to double.
const std::array<std::vector<double>, 10> kScalingFilters = {{
    {0.70710678118654752, 0.70710678118654752},
    {0.48296291314453414, 0.83651630373780791, 0.22414386804201338,
     -0.12940952255126038},
    {0.33267055295008262, 0.80689150931109258, 0.45987750211849157,
     -0.13501102001025459, -0.085441273882026662, 0.035226291885709537},
    {0.2303778133088965, 0.71484657055291565, 0.63088076792985891,
     -0.027983769416859854, -0.18703481171909308, 0.030841381835560764,
     0.0328830116668852, -0.010597401785069032},
    {0.16010239797419291, 0.60382926979718967, 0.72430852843777293,
     0.13842814590132073, -0.24229488706638203, -0.032244869584638375,
     0.077571493840045714, -0.0062414902127982743, -0.012580751999081999,
     0.0033357252854737713},
    {0.11154074335010946, 0.49462389039845309, 0.75113390802109535,
     0.31525035170919763, -0.22626469396543982, -0.12976686756726194,
     0.097501605587323049, 0.027522865530305729, -0.03158203931748603,
     0.00055384220116149614, 0.0047772575109455106, -0.0010773010853084796},
    {0.077852054085009179, 0.39653931948191731, 0.72913209084623512,
     0.46978228740519312, -0.14390600392856498, -0.22403618499387498,
     0.071309219266830265, 0.080612609151083072, -0.038029936935014414,
     -0.016574541630666881, 0.012550998556099841, 0.00042957797292136652,
     -0.0018016407040474909, 0.00035371379997452025},
    {0.05441584224310401, 0.31287159091429997, 0.67563073629728981,
     0.58535468365420671, -0.015829105256349306, -0.28401554296154693,
     0.00047248457391328277, 0.12874742662047846, -0.017369301001807546,
     -0.044088253930794752, 0.013981027917398282, 0.0087460940474057767,
     -0.0048703529934515743, -0.00039174037337694705, 0.00067544940645056937,
     -0.00011747678412476953},
    {0.038077947363878347, 0.24383467461259035, 0.60482312369011111,
     0.65728807805130054, 0.13319738582500758, -0.29327378327917491,
     -0.096840783222976461, 0.14854074933810638, 0.030725681479333379,
     -0.067632829061329974, 0.00025094711483145196, 0.022361662123679097,
     -0.0047232047577513973, -0.0042815036824634298, 0.0018476468830562265,
     0.00023038576352319597, -0.00025196318894271014, 3.9347320316271599e-5},
    {0.026670057900555554, 0.18817680007769149, 0.52720118893172559,
     0.68845903945360357, 0.28117234366057746, -0.24984642432731538,
     -0.19594627437737704, 0.12736934033579326, 0.093057364603572351,
     -0.071394147166397087, -0.029457536821875813, 0.033212674059341002,
     0.0036065535669561697, -0.010733175483330575, 0.0013953517470529012,
     0.0019924052951850561, -0.00068585669495971163, -0.00011646685512928545,
     9.3588670320069591e-5, -1.3264202894521245e-5},
}};

// Half-sample symmetric reflection of an arbitrary index into [0, n).
std::size_t fold_symmetric(std::int64_t i, std::size_t n) {
    const auto N = static_cast<std::int64_t>(n);
    while (i < 0 || i >= N) {
        if (i < 0) i = -i - 1;
        if (i >= N) i = 2 * N - 1 - i;
    }
    return static_cast<std::size_t>(i);
}

std::size_t wrap_periodic(std::int64_t i, std::size_t n) {
    const auto N = static_cast<std::int64_t>(n);
    return static_cast<std::size_t>(((i % N) + N) % N);
}

}  // namespace

std::string boundary_name(Boundary b) {
    return b == Boundary::symmetric ? "symmetric" : "periodic";
}

Boundary boundary_from_name(const std::string& name) {
    if (name == "symmetric") return Boundary::symmetric;
    if (name == "periodic") return Boundary::periodic;
    throw std::invalid_argument("unknown boundary mode: " + name);
}

FilterBank daubechies_filters(int order) {
    if (order < 1 || order > 10)
        throw std::invalid_argument("wavelet order must be in 1..10, got " +
                                    std::to_string(order));
    const auto& scaling = kScalingFilters[static_cast<std::size_t>(order - 1)];
    FilterBank bank;
    bank.order = order;
    bank.lo_dec.assign(scaling.rbegin(), scaling.rend());
    const std::size_t f = bank.lo_dec.size();
    bank.hi_dec.resize(f);
    for (std::size_t k = 0; k < f; ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        bank.hi_dec[k] = sign * bank.lo_dec[f - 1 - k];
    }
    bank.lo_rec.assign(bank.lo_dec.rbegin(), bank.lo_dec.rend());
    bank.hi_rec.assign(bank.hi_dec.rbegin(), bank.hi_dec.rend());
    return bank;
}

std::size_t dwt_output_len(std::size_t n, std::size_t filter_len, Boundary b) {
    if (b == Boundary::periodic) return (n + 1) / 2;
    return (n + filter_len - 1) / 2;
}

DwtResult dwt_step(const Signal& signal, const FilterBank& bank,
                   Boundary boundary) {
    if (signal.empty())
        throw std::invalid_argument("dwt_step: empty signal");
    const std::size_t f = bank.length();

    if (boundary == Boundary::periodic) {
        // Odd lengths are first padded to even by repeating the last sample.
        const Signal* x = &signal;
        Signal padded;
        if (signal.size() % 2 != 0) {
            padded = signal;
            padded.push_back(signal.back());
            x = &padded;
        }
        const std::size_t n = x->size();
        const std::size_t out_len = n / 2;
        DwtResult r;
        r.approx.resize(out_len);
        r.detail.resize(out_len);
        for (std::size_t o = 0; o < out_len; ++o) {
            double lo = 0.0, hi = 0.0;
            for (std::size_t j = 0; j < f; ++j) {
                const std::int64_t raw = static_cast<std::int64_t>(2 * o + 1) -
                                         static_cast<std::int64_t>(j);
                const double v = (*x)[wrap_periodic(raw, n)];
                lo += bank.lo_dec[j] * v;
                hi += bank.hi_dec[j] * v;
            }
            r.approx[o] = lo;
            r.detail[o] = hi;
        }
        return r;
    }

    const std::size_t n = signal.size();
    const std::size_t out_len = dwt_output_len(n, f, boundary);
    DwtResult r;
    r.approx.resize(out_len);
    r.detail.resize(out_len);
    for (std::size_t o = 0; o < out_len; ++o) {
        double lo = 0.0, hi = 0.0;
        for (std::size_t j = 0; j < f; ++j) {
            const std::int64_t raw = static_cast<std::int64_t>(2 * o + 1) -
                                     static_cast<std::int64_t>(j);
            const double v = signal[fold_symmetric(raw, n)];
            lo += bank.lo_dec[j] * v;
            hi += bank.hi_dec[j] * v;
        }
        r.approx[o] = lo;
        r.detail[o] = hi;
    }
    return r;
}

std::vector<double> idwt_step(const std::vector<double>& approx,
                              const std::vector<double>& detail,
                              const FilterBank& bank, Boundary boundary,
                              std::size_t target_len) {
    if (approx.size() != detail.size())
        throw std::invalid_argument(
            "idwt_step: approx and detail lengths differ");
    if (approx.empty())
        throw std::invalid_argument("idwt_step: empty coefficient arrays");
    const std::size_t c = approx.size();
    const std::size_t f = bank.length();

    if (boundary == Boundary::periodic) {
        const std::size_t n2 = 2 * c;
        if (target_len != n2 && target_len + 1 != n2)
            throw std::invalid_argument(
                "idwt_step: target length inconsistent with coefficient count");
        // Adjoint of the orthogonal periodized analysis: scatter each
        // coefficient back through the decomposition filters.
        std::vector<double> rec(n2, 0.0);
        for (std::size_t o = 0; o < c; ++o) {
            for (std::size_t j = 0; j < f; ++j) {
                const std::int64_t raw = static_cast<std::int64_t>(2 * o + 1) -
                                         static_cast<std::int64_t>(j);
                rec[wrap_periodic(raw, n2)] +=
                    approx[o] * bank.lo_dec[j] + detail[o] * bank.hi_dec[j];
            }
        }
        rec.resize(target_len);
        return rec;
    }

    // Full length is 2c - f + 2; analyzing a signal of length 2c - f + 1
    // produces the same coefficient count, so one shorter is also valid.
    const std::int64_t full_out =
        2 * static_cast<std::int64_t>(c) - static_cast<std::int64_t>(f) + 2;
    if (full_out < 1 ||
        (static_cast<std::int64_t>(target_len) != full_out &&
         static_cast<std::int64_t>(target_len) != full_out - 1))
        throw std::invalid_argument(
            "idwt_step: target length inconsistent with coefficient count");

    // Zero-upsample, convolve with the reconstruction pair, and keep the
    // central part of the full convolution.
    std::vector<double> out(target_len, 0.0);
    for (std::size_t m = 0; m < target_len; ++m) {
        const std::size_t k = m + f - 2;  // index into the full convolution
        double acc = 0.0;
        // u[2i] = coeff[i]; full[k] = sum_i u[2i] * rec[k - 2i]
        for (std::size_t i = (k >= f - 1) ? (k - (f - 1) + 1) / 2 : 0;
             i < c && 2 * i <= k; ++i) {
            const std::size_t j = k - 2 * i;
            if (j >= f) continue;
            acc += approx[i] * bank.lo_rec[j] + detail[i] * bank.hi_rec[j];
        }
        out[m] = acc;
    }
    return out;
}

void CoefficientSet::validate() const {
    if (level < 1) throw std::invalid_argument("coefficient set: level < 1");
    if (original_len == 0)
        throw std::invalid_argument("coefficient set: empty original signal");
    if (bank.order < 1 || bank.length() != 2 * static_cast<std::size_t>(bank.order))
        throw std::invalid_argument("coefficient set: malformed filter bank");
    const auto l = static_cast<std::size_t>(level);
    if (details.size() != l)
        throw std::invalid_argument(
            "coefficient set: detail band count does not match level");
    if (level_input_len.size() != l || level_input_len[0] != original_len)
        throw std::invalid_argument(
            "coefficient set: per-level length record is inconsistent");
    for (std::size_t k = 0; k < l; ++k) {
        const std::size_t expect =
            dwt_output_len(level_input_len[k], bank.length(), boundary);
        if (expect == 0)
            throw std::invalid_argument(
                "coefficient set: decomposition chain collapses to empty");
        if (k + 1 < l && level_input_len[k + 1] != expect)
            throw std::invalid_argument(
                "coefficient set: per-level length record is inconsistent");
        // details are stored coarsest first; band from step k+1 sits at the end
        if (details[l - 1 - k].size() != expect)
            throw std::invalid_argument(
                "coefficient set: detail band length mismatch at level " +
                std::to_string(k + 1));
        if (k + 1 == l && approx.size() != expect)
            throw std::invalid_argument(
                "coefficient set: approximation length mismatch");
    }
}

CoefficientSet wavedec(const Signal& signal, const FilterBank& bank, int level,
                       Boundary boundary) {
    if (signal.empty()) throw std::invalid_argument("wavedec: empty signal");
    if (level < 1)
        throw std::invalid_argument("wavedec: level must be at least 1");
    CoefficientSet out;
    out.level = level;
    out.original_len = signal.size();
    out.bank = bank;
    out.boundary = boundary;
    out.exceeded_recommended_level =
        level > max_level(signal.size(), bank.order);

    Signal current = signal;
    std::vector<std::vector<double>> finest_first;
    finest_first.reserve(static_cast<std::size_t>(level));
    for (int k = 0; k < level; ++k) {
        out.level_input_len.push_back(current.size());
        DwtResult r = dwt_step(current, bank, boundary);
        if (r.approx.empty())
            throw std::invalid_argument(
                "wavedec: level " + std::to_string(k + 1) +
                " produced an empty band");
        finest_first.push_back(std::move(r.detail));
        current = std::move(r.approx);
    }
    out.approx = std::move(current);
    out.details.assign(std::make_move_iterator(finest_first.rbegin()),
                       std::make_move_iterator(finest_first.rend()));
    return out;
}

Signal waverec(const CoefficientSet& coeffs) {
    coeffs.validate();
    Signal current = coeffs.approx;
    const auto l = static_cast<std::size_t>(coeffs.level);
    for (std::size_t step = 0; step < l; ++step) {
        const auto& detail = coeffs.details[step];  // coarsest first
        const std::size_t target = coeffs.level_input_len[l - 1 - step];
        current = idwt_step(current, detail, coeffs.bank, coeffs.boundary,
                            target);
    }
    return current;
}

SubsignalMatrix subsignal_matrix(const Signal& signal, const FilterBank& bank,
                                 int level, Boundary boundary) {
    CoefficientSet coeffs = wavedec(signal, bank, level, boundary);
    SubsignalMatrix out;
    out.signal_len = signal.size();
    out.level = level;
    out.wavelet_order = bank.order;
    out.boundary = boundary;
    out.columns.reserve(static_cast<std::size_t>(level) + 1);

    const auto l = static_cast<std::size_t>(level);
    // One column per detail band, finest band first.
    for (std::size_t band = 1; band <= l; ++band) {
        CoefficientSet only = coeffs;
        std::fill(only.approx.begin(), only.approx.end(), 0.0);
        for (std::size_t i = 0; i < l; ++i) {
            if (i != l - band)
                std::fill(only.details[i].begin(), only.details[i].end(), 0.0);
        }
        out.columns.push_back(waverec(only));
    }
    // Final column: approximation band alone.
    CoefficientSet approx_only = coeffs;
    for (auto& d : approx_only.details) std::fill(d.begin(), d.end(), 0.0);
    out.columns.push_back(waverec(approx_only));
    return out;
}

int max_level(std::size_t n, int order) {
    if (order < 1 || order > 10)
        throw std::invalid_argument("wavelet order must be in 1..10, got " +
                                    std::to_string(order));
    const std::size_t filter_len = 2 * static_cast<std::size_t>(order);
    if (n < filter_len) return 0;
    int level = 0;
    std::size_t threshold = filter_len - 1;
    while (n >= 2 * threshold) {
        ++level;
        threshold *= 2;
    }
    return level;
}

}  // namespace ppgdn::wavelet
