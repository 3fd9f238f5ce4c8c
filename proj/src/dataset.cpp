#include "ppgdn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace ppgdn::dataset {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

bool parse_double(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    const char* begin = cell.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + cell.size();
}

// Distinct, well-mixed per-index seed stream derived from the base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

Record load_record(const std::filesystem::path& path, const std::string& channel,
                   double sample_rate) {
    if (!(sample_rate > 0.0))
        throw std::invalid_argument("sample_rate must be positive");
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line))
        throw ParseError(path.string() + ": empty file");
    const auto header = split_csv_row(line);
    if (header.empty()) throw ParseError(path.string() + ": empty header row");

    const auto it = std::find(header.begin(), header.end(), channel);
    if (it == header.end()) {
        std::string available;
        for (const auto& name : header) {
            if (!available.empty()) available += ", ";
            available += name;
        }
        throw ParseError(path.string() + ": no column named '" + channel +
                         "' (available: " + available + ")");
    }
    const auto column = static_cast<std::size_t>(it - header.begin());

    Record rec;
    rec.sample_rate = sample_rate;
    rec.channel = channel;
    rec.subject_id = path.stem().string();

    std::size_t row = 1;  // header occupies row 1
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_row(line);
        if (column >= cells.size())
            throw ParseError(path.string() + ": row " + std::to_string(row) +
                             " has no value for column '" + channel + "'");
        double value = 0.0;
        if (!parse_double(cells[column], value))
            throw ParseError(path.string() + ": row " + std::to_string(row) +
                             ": non-numeric value '" + cells[column] + "'");
        rec.samples.push_back(value);
    }
    if (rec.samples.empty())
        throw ParseError(path.string() + ": no data rows");
    return rec;
}

std::vector<Signal> window(const Record& record, double window_seconds) {
    const auto len_signed = std::llround(window_seconds * record.sample_rate);
    if (len_signed <= 0)
        throw std::invalid_argument("window length must be positive");
    const auto len = static_cast<std::size_t>(len_signed);
    std::vector<Signal> out;
    if (record.samples.size() < len) return out;
    const std::size_t count = record.samples.size() / len;
    out.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        const auto begin = record.samples.begin() +
                           static_cast<std::ptrdiff_t>(w * len);
        out.emplace_back(begin, begin + static_cast<std::ptrdiff_t>(len));
    }
    return out;
}

NormalizeResult normalize(const Signal& x) {
    if (x.empty()) throw std::invalid_argument("normalize: empty signal");
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    if (!(*mx > *mn))
        throw std::invalid_argument(
            "normalize: constant signal has no dynamic range");
    NormalizeResult r;
    r.min = *mn;
    r.max = *mx;
    const double range = *mx - *mn;
    r.scaled.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        r.scaled[i] = (x[i] - r.min) / range;
    return r;
}

Signal synth_pulse(const PulseConfig& config, std::uint64_t seed) {
    if (!(config.bpm > 0.0))
        throw std::invalid_argument("synth_pulse: bpm must be positive");
    if (config.beats < 1)
        throw std::invalid_argument("synth_pulse: need at least one beat");
    if (!(config.sample_rate > 0.0))
        throw std::invalid_argument("synth_pulse: sample_rate must be positive");

    const double period = 60.0 / config.bpm * config.sample_rate;  // samples
    const auto n = static_cast<std::size_t>(
        std::llround(config.beats * period));
    if (n < 2)
        throw std::invalid_argument("synth_pulse: output would be degenerate");

    // Guard beats on both sides make the interior insensitive to the edges,
    // so the zero-jitter waveform is exactly periodic.
    const int guard = 2;
    const int first = -guard;
    const int last = config.beats + guard;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    std::vector<double> amp, peak_pos;
    double start = first * period;
    for (int b = first; b < last; ++b) {
        const double u = unit(rng);
        const double v = unit(rng);
        amp.push_back(1.0 + config.amp_jitter * u);
        const double beat_period = period * (1.0 + config.period_jitter * v);
        peak_pos.push_back(start + 0.3 * beat_period);
        start += beat_period;
    }

    const double sigma_s = config.systolic_width * period;
    const double sigma_d = config.dicrotic_width * period;
    const double delay = config.dicrotic_delay * period;

    Signal raw(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k);
        double v = 0.0;
        for (std::size_t b = 0; b < amp.size(); ++b) {
            const double ds = t - peak_pos[b];
            const double dd = ds - delay;
            v += amp[b] * (std::exp(-ds * ds / (2.0 * sigma_s * sigma_s)) +
                           config.dicrotic_amp *
                               std::exp(-dd * dd / (2.0 * sigma_d * sigma_d)));
        }
        raw[k] = v;
    }
    return normalize(raw).scaled;
}

std::vector<SourceWindow> to_source_windows(const std::vector<Signal>& windows,
                                            const std::string& record_id) {
    std::vector<SourceWindow> out;
    out.reserve(windows.size());
    std::size_t offset = 0;
    for (const auto& w : windows) {
        out.push_back({w, record_id, offset});
        offset += w.size();
    }
    return out;
}

CorpusSplit make_corpus(const std::vector<SourceWindow>& clean_windows,
                        const std::vector<noise::NoiseSpec>& noise_specs,
                        const SplitCounts& split, std::uint64_t seed) {
    const std::size_t total = split.train + split.val + split.test;
    if (total > clean_windows.size())
        throw std::invalid_argument(
            "make_corpus: split asks for " + std::to_string(total) +
            " windows but only " + std::to_string(clean_windows.size()) +
            " are available");
    if (noise_specs.empty())
        throw std::invalid_argument("make_corpus: need at least one noise spec");
    if (total == 0)
        throw std::invalid_argument("make_corpus: empty split requested");
    const std::size_t window_len = clean_windows.front().samples.size();
    for (const auto& w : clean_windows)
        if (w.samples.size() != window_len)
            throw std::invalid_argument(
                "make_corpus: windows have inconsistent lengths");

    std::vector<std::size_t> order(clean_windows.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    CorpusSplit corpus;
    corpus.train.window_len = window_len;
    corpus.val.window_len = window_len;
    corpus.test.window_len = window_len;

    for (std::size_t pos = 0; pos < total; ++pos) {
        const auto& src = clean_windows[order[pos]];
        auto norm = normalize(src.samples);

        noise::NoiseSpec spec = noise_specs[pos % noise_specs.size()];
        spec.seed = derive_seed(seed, pos);

        WindowPair pair;
        pair.clean = std::move(norm.scaled);
        pair.norm_min = norm.min;
        pair.norm_max = norm.max;
        pair.noisy = noise::corrupt(pair.clean, spec);
        pair.record_id = src.record_id;
        pair.offset = src.offset;
        pair.noise_kind = spec.kind;
        pair.noise_seed = spec.seed;

        WindowedDataset& target = pos < split.train ? corpus.train
                                  : pos < split.train + split.val ? corpus.val
                                                                  : corpus.test;
        target.pairs.push_back(std::move(pair));
    }
    return corpus;
}

}  // namespace ppgdn::dataset
