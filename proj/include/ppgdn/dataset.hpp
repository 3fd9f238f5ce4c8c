#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppgdn/noise.hpp"

namespace ppgdn::dataset {

using Signal = std::vector<double>;

/// Raised for malformed input tables (missing columns, non-numeric cells,
/// empty files). The message carries the 1-based file row where applicable.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Record {
    Signal samples;
    double sample_rate = 0.0;
    std::string subject_id;
    std::string channel;
};

/// Reads a comma-separated numeric table with a header row and returns the
/// named column as a record. The record id defaults to the file stem.
Record load_record(const std::filesystem::path& path, const std::string& channel,
                   double sample_rate);

/// Cuts the record into non-overlapping windows of
/// round(window_seconds * sample_rate) samples; the trailing remainder is
/// dropped. A record shorter than one window yields an empty list.
std::vector<Signal> window(const Record& record, double window_seconds = 8.0);

struct NormalizeResult {
    Signal scaled;  ///< (x - min) / (max - min), attains 0 and 1
    double min = 0.0;
    double max = 0.0;
};

/// Min-max normalization onto [0,1]. Throws std::invalid_argument for a
/// constant signal (max == min).
NormalizeResult normalize(const Signal& x);

/// Synthetic quasi-periodic pulse waveform: each beat is a large systolic
/// bump followed by a smaller dicrotic bump, with optional per-beat
/// amplitude and period jitter. Widths and the dicrotic delay are fractions
/// of the beat period.
struct PulseConfig {
    int beats = 10;
    double bpm = 75.0;
    double sample_rate = 125.0;
    double amp_jitter = 0.05;     ///< relative peak-height jitter, 0 disables
    double period_jitter = 0.02;  ///< relative beat-length jitter, 0 disables
    double dicrotic_amp = 0.35;   ///< dicrotic height relative to systolic
    double systolic_width = 0.10;
    double dicrotic_width = 0.16;
    double dicrotic_delay = 0.42;
};

/// Deterministic per seed; output has round(beats * 60 / bpm * sample_rate)
/// samples and is min-max normalized to [0,1]. With zero jitter the signal
/// is exactly periodic in the beat period.
Signal synth_pulse(const PulseConfig& config, std::uint64_t seed);

/// A clean window plus where it came from.
struct SourceWindow {
    Signal samples;
    std::string record_id;
    std::size_t offset = 0;  ///< window start within the source record
};

/// Tags consecutive windows from one record with their sample offsets.
std::vector<SourceWindow> to_source_windows(const std::vector<Signal>& windows,
                                            const std::string& record_id);

/// One training example: a normalized clean window and its corrupted copy.
struct WindowPair {
    Signal clean;  ///< min-max normalized, attains 0 and 1
    Signal noisy;
    double norm_min = 0.0;  ///< de-normalization metadata of the clean window
    double norm_max = 1.0;
    std::string record_id;
    std::size_t offset = 0;
    noise::NoiseKind noise_kind = noise::NoiseKind::gaussian;
    std::uint64_t noise_seed = 0;
};

struct WindowedDataset {
    std::vector<WindowPair> pairs;
    std::size_t window_len = 0;
};

struct SplitCounts {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
};

struct CorpusSplit {
    WindowedDataset train;
    WindowedDataset val;
    WindowedDataset test;
};

/// Shuffles the windows deterministically, takes train/val/test counts in
/// order (disjoint by construction), normalizes each clean window, and
/// corrupts it with the noise specs cycled over the shuffled sequence.
/// Each window's corruption seed is derived from `seed` and its position,
/// overriding the seed stored in the spec. Throws std::invalid_argument
/// when the counts exceed the available windows, when window lengths
/// disagree, or when a window is constant.
CorpusSplit make_corpus(const std::vector<SourceWindow>& clean_windows,
                        const std::vector<noise::NoiseSpec>& noise_specs,
                        const SplitCounts& split, std::uint64_t seed);

}  // namespace ppgdn::dataset
