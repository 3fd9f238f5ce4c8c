// ppgdn — command line front end for the wavelet-gating PPG denoiser.
//
// Subcommands: prepare, train, denoise, eval, sweep. Every artifact-producing
// run writes exactly one manifest.json alongside its outputs; the manifest is
// written last, so its presence marks a completed run. Exit codes: 0 success,
// 2 usage error, 3 data error, 4 numeric failure.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ppgdn/dataset.hpp"
#include "ppgdn/denoiser.hpp"
#include "ppgdn/metrics.hpp"
#include "ppgdn/network.hpp"
#include "ppgdn/noise.hpp"
#include "ppgdn/wavelet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ppgdn;

namespace {

constexpr const char* kToolName = "ppgdn";
constexpr const char* kToolVersion = "1.0.0";
constexpr const char* kOutRootEnv = "PPGDN_OUT_ROOT";

/// Bad flag values or combinations beyond what the parser catches. Exit 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Missing/malformed/mismatched inputs and refused overwrites. Exit 3.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Diverged training or other non-finite arithmetic. Exit 4.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// small helpers

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

bool parse_double_strict(const std::string& text, double& out) {
    const char* begin = text.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    if (end == begin) return false;
    while (*end != '\0') {
        if (!std::isspace(static_cast<unsigned char>(*end))) return false;
        ++end;
    }
    return true;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string iso_utc_now() {
    const std::time_t t =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

struct Fingerprint {
    std::uintmax_t bytes = 0;
    std::string fnv1a64;
};

/// FNV-1a (64-bit) over the raw file bytes; used to record in the manifest
/// exactly which inputs a run consumed.
Fingerprint fingerprint_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open input file: " + path.string());
    std::uint64_t h = 14695981039346656037ULL;
    char buf[1 << 16];
    std::uintmax_t total = 0;
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        total += static_cast<std::uintmax_t>(got);
        if (got < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016" PRIx64, h);
    return {total, hex};
}

/// Applies the output-root environment variable to relative --out paths.
fs::path resolve_out(const std::string& flag) {
    fs::path p(flag);
    if (p.is_relative()) {
        if (const char* root = std::getenv(kOutRootEnv); root && *root != '\0')
            return fs::path(root) / p;
    }
    return p;
}

/// Refuses to reuse a non-empty output directory unless forced.
void ensure_out_dir(const fs::path& dir, bool force) {
    std::error_code ec;
    if (fs::exists(dir, ec)) {
        if (!fs::is_directory(dir, ec))
            throw DataError("output path exists and is not a directory: " +
                            dir.string());
        if (!fs::is_empty(dir, ec) && !force)
            throw DataError("output directory is not empty: " + dir.string() +
                            " (pass --force to overwrite)");
    }
    fs::create_directories(dir, ec);
    if (ec)
        throw DataError("cannot create output directory " + dir.string() +
                        ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
    if (!out) throw DataError("write failed: " + path.string());
}

struct Manifest {
    std::string command;
    json config = json::object();
    json inputs = json::array();
    std::vector<std::string> outputs;
    std::vector<std::string> warnings;
    json results = json::object();

    void add_input(const fs::path& path) {
        const Fingerprint fp = fingerprint_file(path);
        inputs.push_back({{"path", path.string()},
                          {"bytes", fp.bytes},
                          {"fnv1a64", fp.fnv1a64}});
    }

    void write(const fs::path& out_dir) const {
        json j{{"tool", kToolName},
               {"version", kToolVersion},
               {"command", command},
               {"created_utc", iso_utc_now()},
               {"config", config},
               {"inputs", inputs},
               {"outputs", outputs},
               {"warnings", warnings}};
        if (!results.empty()) j["results"] = results;
        write_text(out_dir / "manifest.json", j.dump(2) + "\n");
    }
};

// ---------------------------------------------------------------------------
// noise spec strings: kind[:key=value[,key=value...]]

noise::NoiseSpec parse_noise_spec(const std::string& text) {
    const std::size_t colon = text.find(':');
    const std::string kind_str = trim(text.substr(0, colon));
    noise::NoiseSpec spec;
    try {
        spec.kind = noise::kind_from_name(kind_str);
    } catch (const std::invalid_argument&) {
        throw UsageError("unknown noise kind '" + kind_str +
                         "' (expected gaussian, poisson, uniform or "
                         "salt_pepper)");
    }
    if (colon != std::string::npos) {
        std::stringstream ss(text.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            const std::size_t eq = item.find('=');
            if (eq == std::string::npos)
                throw UsageError("noise parameter '" + item +
                                 "' is not key=value");
            const std::string key = trim(item.substr(0, eq));
            const std::string val_str = trim(item.substr(eq + 1));
            double val = 0.0;
            if (!parse_double_strict(val_str, val))
                throw UsageError("noise parameter '" + key +
                                 "' has a non-numeric value '" + val_str + "'");
            if (key == "var" && spec.kind == noise::NoiseKind::gaussian)
                spec.variance = val;
            else if (key == "rate" && spec.kind == noise::NoiseKind::poisson)
                spec.rate = val;
            else if (key == "raw" && spec.kind == noise::NoiseKind::poisson)
                spec.poisson_center = (val == 0.0);
            else if (key == "low" && spec.kind == noise::NoiseKind::uniform)
                spec.low = val;
            else if (key == "high" && spec.kind == noise::NoiseKind::uniform)
                spec.high = val;
            else if ((key == "p" || key == "density") &&
                     spec.kind == noise::NoiseKind::salt_pepper)
                spec.density = val;
            else
                throw UsageError("noise parameter '" + key +
                                 "' does not apply to kind '" + kind_str + "'");
        }
    }
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("invalid noise spec '") + text +
                         "': " + e.what());
    }
    return spec;
}

json noise_spec_to_json(const noise::NoiseSpec& spec) {
    json j{{"kind", noise::kind_name(spec.kind)}};
    switch (spec.kind) {
        case noise::NoiseKind::gaussian: j["var"] = spec.variance; break;
        case noise::NoiseKind::poisson:
            j["rate"] = spec.rate;
            j["centered"] = spec.poisson_center;
            break;
        case noise::NoiseKind::uniform:
            j["low"] = spec.low;
            j["high"] = spec.high;
            break;
        case noise::NoiseKind::salt_pepper: j["density"] = spec.density; break;
    }
    return j;
}

dataset::SplitCounts parse_split(const std::string& text) {
    std::stringstream ss(text);
    std::string part;
    std::vector<std::size_t> counts;
    while (std::getline(ss, part, '/')) {
        double v = 0.0;
        if (!parse_double_strict(trim(part), v) || v < 0 ||
            v != std::floor(v))
            throw UsageError("split '" + text +
                             "' must be three non-negative integers "
                             "train/val/test");
        counts.push_back(static_cast<std::size_t>(v));
    }
    if (counts.size() != 3)
        throw UsageError("split '" + text + "' must have the form a/b/c");
    return {counts[0], counts[1], counts[2]};
}

int parse_wavelet_name(const std::string& name) {
    if (name.size() > 2 && name.compare(0, 2, "db") == 0) {
        try {
            const int order = std::stoi(name.substr(2));
            if (order >= 1 && order <= 10 &&
                name == "db" + std::to_string(order))
                return order;
        } catch (...) {
        }
    }
    throw UsageError("unknown wavelet '" + name +
                     "' (valid names: db1, db2, ..., db10)");
}

// ---------------------------------------------------------------------------
// dataset directory format: train.json / val.json / test.json

json split_to_json(const dataset::WindowedDataset& ds) {
    json pairs = json::array();
    for (const auto& p : ds.pairs) {
        pairs.push_back({{"record_id", p.record_id},
                         {"offset", p.offset},
                         {"noise_kind", noise::kind_name(p.noise_kind)},
                         {"noise_seed", p.noise_seed},
                         {"norm_min", p.norm_min},
                         {"norm_max", p.norm_max},
                         {"clean", p.clean},
                         {"noisy", p.noisy}});
    }
    return json{{"format", "ppgdn-dataset"},
                {"version", 1},
                {"window_len", ds.window_len},
                {"pairs", std::move(pairs)}};
}

void save_split(const fs::path& path, const dataset::WindowedDataset& ds) {
    write_text(path, split_to_json(ds).dump() + "\n");
}

dataset::WindowedDataset load_split(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset split: " + path.string());
    dataset::WindowedDataset ds;
    try {
        const json j = json::parse(in);
        if (j.at("format") != "ppgdn-dataset" || j.at("version") != 1)
            throw DataError("not a ppgdn dataset file: " + path.string());
        ds.window_len = j.at("window_len").get<std::size_t>();
        for (const auto& pj : j.at("pairs")) {
            dataset::WindowPair p;
            p.record_id = pj.at("record_id").get<std::string>();
            p.offset = pj.at("offset").get<std::size_t>();
            p.noise_kind =
                noise::kind_from_name(pj.at("noise_kind").get<std::string>());
            p.noise_seed = pj.at("noise_seed").get<std::uint64_t>();
            p.norm_min = pj.at("norm_min").get<double>();
            p.norm_max = pj.at("norm_max").get<double>();
            p.clean = pj.at("clean").get<std::vector<double>>();
            p.noisy = pj.at("noisy").get<std::vector<double>>();
            if (p.clean.size() != ds.window_len ||
                p.noisy.size() != ds.window_len)
                throw DataError("window length mismatch in " + path.string());
            ds.pairs.push_back(std::move(p));
        }
    } catch (const json::exception& e) {
        throw DataError("malformed dataset file " + path.string() + ": " +
                        e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError("malformed dataset file " + path.string() + ": " +
                        e.what());
    }
    if (ds.pairs.empty())
        throw DataError("dataset split has no windows: " + path.string());
    return ds;
}

// ---------------------------------------------------------------------------
// signal files: one sample per line, or a single-column CSV with a header

std::vector<double> load_signal(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open signal file: " + path.string());
    std::vector<double> samples;
    std::string line;
    std::size_t row = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++row;
        const std::string cell = trim(line);
        if (cell.empty()) continue;
        double v = 0.0;
        if (parse_double_strict(cell, v)) {
            samples.push_back(v);
        } else if (first_content && cell.find(',') == std::string::npos) {
            // single-column header
        } else {
            throw DataError("signal file " + path.string() + " row " +
                            std::to_string(row) +
                            ": expected one numeric sample, got '" + cell +
                            "'");
        }
        first_content = false;
    }
    if (samples.empty())
        throw DataError("signal file has no samples: " + path.string());
    return samples;
}

void save_signal(const fs::path& path, const std::vector<double>& x,
                 const std::string& header) {
    std::string out = header + "\n";
    for (const double v : x) out += format_double(v) + "\n";
    write_text(path, out);
}

// ---------------------------------------------------------------------------
// prepare

struct PrepareArgs {
    bool synthetic = false;
    int windows = 640;
    dataset::PulseConfig pulse;
    std::string input_dir;
    std::string channel = "PLETH";
    double sample_rate = 125.0;
    double window_seconds = 8.0;
    std::vector<std::string> noise_flags;
    std::string split = "512/64/64";
    std::uint64_t seed = 0;
    std::string out = "dataset";
    bool force = false;
};

int cmd_prepare(const PrepareArgs& args) {
    if (args.synthetic == !args.input_dir.empty())
        throw UsageError(
            "choose exactly one input mode: --synthetic or --input DIR");
    if (args.noise_flags.empty())
        throw UsageError("at least one --noise spec is required");

    std::vector<noise::NoiseSpec> specs;
    for (const auto& flag : args.noise_flags)
        specs.push_back(parse_noise_spec(flag));
    const dataset::SplitCounts split = parse_split(args.split);

    Manifest manifest;
    manifest.command = "prepare";

    std::vector<dataset::SourceWindow> source;
    if (args.synthetic) {
        if (args.windows < 1)
            throw UsageError("--windows must be at least 1");
        std::mt19937_64 seed_gen(args.seed ^ 0x53594E5448ULL);
        for (int w = 0; w < args.windows; ++w) {
            dataset::SourceWindow sw;
            sw.samples = dataset::synth_pulse(args.pulse, seed_gen());
            char id[32];
            std::snprintf(id, sizeof(id), "synth-%04d", w);
            sw.record_id = id;
            sw.offset = 0;
            source.push_back(std::move(sw));
        }
    } else {
        const fs::path dir(args.input_dir);
        std::error_code ec;
        if (!fs::is_directory(dir, ec))
            throw DataError("input directory not found: " + dir.string());
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_regular_file() && entry.path().extension() == ".csv")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw DataError("no .csv files in input directory: " +
                            dir.string());
        for (const auto& file : files) {
            manifest.add_input(file);
            const auto record = dataset::load_record(file, args.channel,
                                                     args.sample_rate);
            const auto windows =
                dataset::window(record, args.window_seconds);
            for (auto& sw :
                 dataset::to_source_windows(windows, record.subject_id))
                source.push_back(std::move(sw));
        }
        if (source.empty())
            throw DataError("input records are shorter than one window");
    }

    dataset::CorpusSplit corpus;
    try {
        corpus = dataset::make_corpus(source, specs, split, args.seed);
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("cannot build corpus: ") + e.what());
    }

    const fs::path out_dir = resolve_out(args.out);
    ensure_out_dir(out_dir, args.force);
    save_split(out_dir / "train.json", corpus.train);
    save_split(out_dir / "val.json", corpus.val);
    save_split(out_dir / "test.json", corpus.test);

    json noise_json = json::array();
    for (const auto& s : specs) noise_json.push_back(noise_spec_to_json(s));
    manifest.config = {
        {"synthetic", args.synthetic},
        {"noise", noise_json},
        {"split",
         {{"train", split.train}, {"val", split.val}, {"test", split.test}}},
        {"seed", args.seed},
        {"window_len", corpus.train.window_len},
        {"out", out_dir.string()}};
    if (args.synthetic) {
        manifest.config["windows"] = args.windows;
        manifest.config["pulse"] = {{"beats", args.pulse.beats},
                                    {"bpm", args.pulse.bpm},
                                    {"sample_rate", args.pulse.sample_rate},
                                    {"amp_jitter", args.pulse.amp_jitter},
                                    {"period_jitter", args.pulse.period_jitter}};
    } else {
        manifest.config["input"] = args.input_dir;
        manifest.config["channel"] = args.channel;
        manifest.config["sample_rate"] = args.sample_rate;
        manifest.config["window_seconds"] = args.window_seconds;
    }
    manifest.outputs = {"train.json", "val.json", "test.json"};
    manifest.results = {{"train_windows", corpus.train.pairs.size()},
                        {"val_windows", corpus.val.pairs.size()},
                        {"test_windows", corpus.test.pairs.size()}};
    manifest.write(out_dir);
    std::cout << "wrote " << corpus.train.pairs.size() << "/"
              << corpus.val.pairs.size() << "/" << corpus.test.pairs.size()
              << " train/val/test windows to " << out_dir.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string data;
    std::string wavelet = "db4";
    int level = 5;
    std::string boundary = "symmetric";
    double lr = 0.001;
    int batch = 100;
    int val_batch = 100;
    int epochs = 500;
    int patience = 20;
    std::uint64_t seed = 0;
    std::string out = "model";
    bool force = false;
};

denoiser::TrainConfig to_train_config(const TrainArgs& args) {
    denoiser::TrainConfig cfg;
    cfg.wavelet_order = parse_wavelet_name(args.wavelet);
    cfg.level = args.level;
    cfg.boundary = wavelet::boundary_from_name(args.boundary);
    cfg.learning_rate = args.lr;
    cfg.batch_size = args.batch;
    cfg.val_batch_size = args.val_batch;
    cfg.max_epochs = args.epochs;
    cfg.patience = args.patience;
    cfg.seed = args.seed;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return cfg;
}

json train_config_json(const denoiser::TrainConfig& cfg) {
    return {{"wavelet", "db" + std::to_string(cfg.wavelet_order)},
            {"level", cfg.level},
            {"boundary", wavelet::boundary_name(cfg.boundary)},
            {"learning_rate", cfg.learning_rate},
            {"batch_size", cfg.batch_size},
            {"val_batch_size", cfg.val_batch_size},
            {"max_epochs", cfg.max_epochs},
            {"patience", cfg.patience},
            {"seed", cfg.seed}};
}

json train_report_json(const denoiser::TrainReport& report) {
    return {{"stopped_epoch", report.stopped_epoch},
            {"best_epoch", report.best_epoch},
            {"best_val_mse", report.best_val_mse},
            {"final_train_mse", report.train_mse.back()},
            {"wall_seconds", report.wall_seconds}};
}

std::string epochs_csv(const denoiser::TrainReport& report) {
    std::string csv = "epoch,train_mse,val_mse\n";
    for (std::size_t e = 0; e < report.train_mse.size(); ++e)
        csv += std::to_string(e + 1) + "," + format_double(report.train_mse[e]) +
               "," + format_double(report.val_mse[e]) + "\n";
    return csv;
}

/// Records a manifest warning when the requested depth exceeds the
/// recommended maximum for this window length (the run still proceeds).
void warn_if_over_max_level(std::size_t window_len,
                            const denoiser::TrainConfig& cfg,
                            std::vector<std::string>& warnings) {
    const int max_lvl = wavelet::max_level(window_len, cfg.wavelet_order);
    if (cfg.level > max_lvl)
        warnings.push_back(
            "decomposition level " + std::to_string(cfg.level) +
            " exceeds the recommended maximum " + std::to_string(max_lvl) +
            " for " + std::to_string(window_len) + "-sample windows with db" +
            std::to_string(cfg.wavelet_order) +
            "; coarse bands stop shrinking");
}

int cmd_train(const TrainArgs& args) {
    const denoiser::TrainConfig cfg = to_train_config(args);

    const fs::path data_dir(args.data);
    Manifest manifest;
    manifest.command = "train";
    manifest.add_input(data_dir / "train.json");
    manifest.add_input(data_dir / "val.json");
    const auto train_set = load_split(data_dir / "train.json");
    const auto val_set = load_split(data_dir / "val.json");
    warn_if_over_max_level(train_set.window_len, cfg, manifest.warnings);

    const fs::path out_dir = resolve_out(args.out);
    ensure_out_dir(out_dir, args.force);

    std::pair<network::NetworkParams, denoiser::TrainReport> trained;
    try {
        trained = denoiser::train(train_set, val_set, cfg);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    } catch (const std::runtime_error& e) {
        throw NumericError(e.what());
    }

    network::Checkpoint ckpt;
    ckpt.params = std::move(trained.first);
    ckpt.wavelet_order = cfg.wavelet_order;
    ckpt.level = cfg.level;
    ckpt.boundary = wavelet::boundary_name(cfg.boundary);
    ckpt.norm_min = 0.0;  // the model consumes min-max normalized windows
    ckpt.norm_max = 1.0;
    network::save_checkpoint(ckpt, (out_dir / "checkpoint.json").string());
    write_text(out_dir / "metrics.csv", epochs_csv(trained.second));

    manifest.config = train_config_json(cfg);
    manifest.config["data"] = args.data;
    manifest.config["out"] = out_dir.string();
    manifest.outputs = {"checkpoint.json", "metrics.csv"};
    manifest.results = train_report_json(trained.second);
    manifest.write(out_dir);
    std::cout << "trained " << trained.second.stopped_epoch
              << " epochs (best validation MSE "
              << format_double(trained.second.best_val_mse) << " at epoch "
              << trained.second.best_epoch << "); model in "
              << out_dir.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// denoise

struct DenoiseArgs {
    std::string checkpoint;
    std::string input;
    std::string out = "denoised";
    bool force = false;
};

network::Checkpoint load_checkpoint_or_die(const std::string& path) {
    try {
        return network::load_checkpoint(path);
    } catch (const std::exception& e) {
        throw DataError(std::string("cannot load checkpoint: ") + e.what());
    }
}

int cmd_denoise(const DenoiseArgs& args) {
    Manifest manifest;
    manifest.command = "denoise";
    manifest.add_input(args.checkpoint);
    manifest.add_input(args.input);
    const auto ckpt = load_checkpoint_or_die(args.checkpoint);
    const auto raw = load_signal(args.input);

    dataset::NormalizeResult norm;
    try {
        norm = dataset::normalize(raw);
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("cannot normalize input signal: ") +
                        e.what());
    }
    denoiser::DenoiseResult result;
    try {
        result = denoiser::denoise(ckpt, norm.scaled);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
    std::vector<double> rescaled(result.denoised.size());
    for (std::size_t i = 0; i < rescaled.size(); ++i)
        rescaled[i] = result.denoised[i] * (norm.max - norm.min) + norm.min;

    const fs::path out_dir = resolve_out(args.out);
    ensure_out_dir(out_dir, args.force);
    save_signal(out_dir / "denoised.csv", rescaled, "sample");
    std::string weights_csv = "index,weight\n";
    for (std::size_t i = 0; i < result.weights.size(); ++i)
        weights_csv += std::to_string(i + 1) + "," +
                       format_double(result.weights[i]) + "\n";
    write_text(out_dir / "weights.csv", weights_csv);

    manifest.config = {{"checkpoint", args.checkpoint},
                       {"input", args.input},
                       {"out", out_dir.string()}};
    manifest.outputs = {"denoised.csv", "weights.csv"};
    manifest.results = {{"samples", rescaled.size()},
                        {"weights", result.weights.size()},
                        {"input_min", norm.min},
                        {"input_max", norm.max}};
    manifest.write(out_dir);
    std::cout << "denoised " << rescaled.size() << " samples with "
              << result.weights.size() << " band weights; output in "
              << out_dir.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
    std::string checkpoint;
    std::string data;
    std::string out = "evaluation";
    bool force = false;
};

metrics::EvalSummary evaluate_checkpoint(const network::Checkpoint& ckpt,
                                         const dataset::WindowedDataset& test) {
    try {
        return metrics::evaluate(test, [&](const std::vector<double>& noisy) {
            return denoiser::denoise(ckpt, noisy).denoised;
        });
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
}

std::string summary_csv(const metrics::EvalSummary& s) {
    std::string csv = "scope,source,windows,mse,psnr,reduction_percent\n";
    const auto row = [&csv](const std::string& scope, const std::string& source,
                            std::size_t count, double mse, double psnr,
                            const std::string& reduction) {
        csv += scope + "," + source + "," + std::to_string(count) + "," +
               format_double(mse) + "," + format_double(psnr) + "," +
               reduction + "\n";
    };
    row("all", "noisy", s.window_count, s.mse_noisy, s.psnr_noisy, "");
    row("all", "denoised", s.window_count, s.mse_denoised, s.psnr_denoised,
        format_double(s.reduction_percent));
    for (const auto& k : s.by_kind) {
        const std::string scope = noise::kind_name(k.kind);
        row(scope, "noisy", k.count, k.mse_noisy, k.psnr_noisy, "");
        row(scope, "denoised", k.count, k.mse_denoised, k.psnr_denoised,
            format_double(k.reduction_percent));
    }
    return csv;
}

json summary_json(const metrics::EvalSummary& s) {
    json by_kind = json::array();
    for (const auto& k : s.by_kind)
        by_kind.push_back({{"kind", noise::kind_name(k.kind)},
                           {"windows", k.count},
                           {"mse_noisy", k.mse_noisy},
                           {"mse_denoised", k.mse_denoised},
                           {"psnr_noisy", k.psnr_noisy},
                           {"psnr_denoised", k.psnr_denoised},
                           {"reduction_percent", k.reduction_percent}});
    return {{"windows", s.window_count},
            {"mse_noisy", s.mse_noisy},
            {"mse_denoised", s.mse_denoised},
            {"psnr_noisy", s.psnr_noisy},
            {"psnr_denoised", s.psnr_denoised},
            {"reduction_percent", s.reduction_percent},
            {"by_kind", std::move(by_kind)}};
}

int cmd_eval(const EvalArgs& args) {
    Manifest manifest;
    manifest.command = "eval";
    manifest.add_input(args.checkpoint);
    const fs::path data_dir(args.data);
    manifest.add_input(data_dir / "test.json");
    const auto ckpt = load_checkpoint_or_die(args.checkpoint);
    const auto test_set = load_split(data_dir / "test.json");

    const auto summary = evaluate_checkpoint(ckpt, test_set);
    summary.validate();

    const fs::path out_dir = resolve_out(args.out);
    ensure_out_dir(out_dir, args.force);
    write_text(out_dir / "summary.csv", summary_csv(summary));
    write_text(out_dir / "summary.json", summary_json(summary).dump(2) + "\n");

    manifest.config = {{"checkpoint", args.checkpoint},
                       {"data", args.data},
                       {"out", out_dir.string()}};
    manifest.outputs = {"summary.csv", "summary.json"};
    manifest.results = summary_json(summary);
    manifest.write(out_dir);
    std::cout << "evaluated " << summary.window_count
              << " test windows: MSE " << format_double(summary.mse_noisy)
              << " noisy -> " << format_double(summary.mse_denoised)
              << " denoised (" << format_double(summary.reduction_percent)
              << "% reduction); tables in " << out_dir.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
    std::string axis;
    std::string data;
    std::string wavelet = "db4";
    int level = 5;
    std::string boundary = "symmetric";
    double lr = 0.001;
    int batch = 100;
    int val_batch = 100;
    int epochs = 500;
    int patience = 20;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string out = "sweep";
    bool force = false;
};

struct SweepPoint {
    std::string label;
    denoiser::TrainConfig config;
    metrics::EvalSummary summary;
    denoiser::TrainReport report;
};

int cmd_sweep(const SweepArgs& args) {
    if (args.jobs < 1) throw UsageError("--jobs must be at least 1");

    TrainArgs base;
    base.wavelet = args.wavelet;
    base.level = args.level;
    base.boundary = args.boundary;
    base.lr = args.lr;
    base.batch = args.batch;
    base.val_batch = args.val_batch;
    base.epochs = args.epochs;
    base.patience = args.patience;
    base.seed = args.seed;
    const denoiser::TrainConfig base_cfg = to_train_config(base);

    std::vector<SweepPoint> points;
    if (args.axis == "level") {
        for (int level = 1; level <= 8; ++level) {
            SweepPoint p;
            p.label = std::to_string(level);
            p.config = base_cfg;
            p.config.level = level;
            points.push_back(std::move(p));
        }
    } else if (args.axis == "wavelet") {
        for (int order = 1; order <= 10; ++order) {
            SweepPoint p;
            p.label = "db" + std::to_string(order);
            p.config = base_cfg;
            p.config.wavelet_order = order;
            points.push_back(std::move(p));
        }
    } else {
        throw UsageError("--axis must be 'level' or 'wavelet'");
    }

    const fs::path data_dir(args.data);
    Manifest manifest;
    manifest.command = "sweep";
    manifest.add_input(data_dir / "train.json");
    manifest.add_input(data_dir / "val.json");
    manifest.add_input(data_dir / "test.json");
    const auto train_set = load_split(data_dir / "train.json");
    const auto val_set = load_split(data_dir / "val.json");
    const auto test_set = load_split(data_dir / "test.json");
    for (const auto& p : points)
        warn_if_over_max_level(train_set.window_len, p.config,
                               manifest.warnings);

    const fs::path out_dir = resolve_out(args.out);
    ensure_out_dir(out_dir, args.force);

    // Every configuration trains independently (shared seed, private state),
    // so worker threads just pull the next unclaimed configuration; results
    // land in pre-assigned slots and the output order never depends on --jobs.
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> failures(points.size());
    const auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= points.size()) return;
            try {
                auto trained =
                    denoiser::train(train_set, val_set, points[i].config);
                network::Checkpoint ckpt;
                ckpt.params = std::move(trained.first);
                ckpt.wavelet_order = points[i].config.wavelet_order;
                ckpt.level = points[i].config.level;
                ckpt.boundary =
                    wavelet::boundary_name(points[i].config.boundary);
                points[i].summary = evaluate_checkpoint(ckpt, test_set);
                points[i].summary.validate();
                points[i].report = std::move(trained.second);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    const std::size_t thread_count = std::min<std::size_t>(
        static_cast<std::size_t>(args.jobs), points.size());
    if (thread_count <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < thread_count; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!failures[i]) continue;
        try {
            std::rethrow_exception(failures[i]);
        } catch (const std::invalid_argument& e) {
            throw DataError("configuration " + points[i].label + ": " +
                            e.what());
        } catch (const std::runtime_error& e) {
            throw NumericError("configuration " + points[i].label + ": " +
                               e.what());
        }
    }

    std::string csv =
        "axis,value,noise_kind,windows,mse_noisy,mse_denoised,"
        "reduction_percent\n";
    json results = json::array();
    for (const auto& p : points) {
        for (const auto& k : p.summary.by_kind)
            csv += args.axis + "," + p.label + "," +
                   noise::kind_name(k.kind) + "," + std::to_string(k.count) +
                   "," + format_double(k.mse_noisy) + "," +
                   format_double(k.mse_denoised) + "," +
                   format_double(k.reduction_percent) + "\n";
        results.push_back({{"value", p.label},
                           {"config", train_config_json(p.config)},
                           {"report", train_report_json(p.report)},
                           {"summary", summary_json(p.summary)}});
    }
    write_text(out_dir / "sweep.csv", csv);

    manifest.config = train_config_json(base_cfg);
    manifest.config["axis"] = args.axis;
    manifest.config["data"] = args.data;
    manifest.config["jobs"] = args.jobs;
    manifest.config["out"] = out_dir.string();
    manifest.outputs = {"sweep.csv"};
    manifest.results = std::move(results);
    manifest.write(out_dir);
    std::cout << "swept " << points.size() << " " << args.axis
              << " values over " << test_set.pairs.size()
              << " test windows; table in " << out_dir.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

void add_train_flags(CLI::App* cmd, TrainArgs& args) {
    cmd->add_option("--data", args.data, "dataset directory from 'prepare'")
        ->required();
    cmd->add_option("--wavelet", args.wavelet,
                    "mother wavelet, db1..db10 (default db4)");
    cmd->add_option("--level", args.level,
                    "decomposition depth (default 5)");
    cmd->add_option("--boundary", args.boundary,
                    "signal extension at the edges (default symmetric)")
        ->check(CLI::IsMember({"symmetric", "periodic"}));
    cmd->add_option("--lr", args.lr, "Adam learning rate (default 0.001)");
    cmd->add_option("--batch", args.batch, "mini-batch size (default 100)");
    cmd->add_option("--val-batch", args.val_batch,
                    "validation batch size (default 100)");
    cmd->add_option("--epochs", args.epochs,
                    "maximum training epochs (default 500)");
    cmd->add_option("--patience", args.patience,
                    "early-stopping patience in epochs (default 20)");
    cmd->add_option("--seed", args.seed, "RNG seed (default 0)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Wavelet-gating denoiser for quasi-periodic physiological signals"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    PrepareArgs prepare_args;
    auto* prepare = app.add_subcommand(
        "prepare", "Build a windowed train/val/test corpus with paired noise");
    prepare->add_flag("--synthetic", prepare_args.synthetic,
                      "generate synthetic pulse windows");
    prepare->add_option("--windows", prepare_args.windows,
                        "number of synthetic windows (default 640)");
    prepare->add_option("--beats", prepare_args.pulse.beats,
                        "beats per synthetic window (default 10)");
    prepare->add_option("--bpm", prepare_args.pulse.bpm,
                        "synthetic heart rate (default 75)");
    prepare->add_option("--rate", prepare_args.pulse.sample_rate,
                        "synthetic sample rate in Hz (default 125)");
    prepare->add_option("--amp-jitter", prepare_args.pulse.amp_jitter,
                        "relative beat-amplitude jitter (default 0.05)");
    prepare->add_option("--period-jitter", prepare_args.pulse.period_jitter,
                        "relative beat-period jitter (default 0.02)");
    prepare->add_option("--input", prepare_args.input_dir,
                        "directory of CSV records to window instead");
    prepare->add_option("--channel", prepare_args.channel,
                        "CSV column to read (default PLETH)");
    prepare->add_option("--sample-rate", prepare_args.sample_rate,
                        "sample rate of the CSV records (default 125)");
    prepare->add_option("--window-seconds", prepare_args.window_seconds,
                        "window length in seconds (default 8)");
    prepare->add_option("--noise", prepare_args.noise_flags,
                        "noise spec kind[:key=value,...], repeatable; e.g. "
                        "gaussian:var=0.05, salt_pepper:p=0.05, "
                        "poisson:rate=0.02, uniform:low=-0.1,high=0.1");
    prepare->add_option("--split", prepare_args.split,
                        "train/val/test window counts (default 512/64/64)");
    prepare->add_option("--seed", prepare_args.seed, "RNG seed (default 0)");
    prepare->add_option("--out", prepare_args.out,
                        "output directory (default 'dataset')");
    prepare->add_flag("--force", prepare_args.force,
                      "overwrite a non-empty output directory");
    prepare->callback([&]() { std::exit(cmd_prepare(prepare_args)); });

    TrainArgs train_args;
    auto* train = app.add_subcommand(
        "train", "Train the gating network on a prepared corpus");
    add_train_flags(train, train_args);
    train->add_option("--out", train_args.out,
                      "output directory (default 'model')");
    train->add_flag("--force", train_args.force,
                    "overwrite a non-empty output directory");
    train->callback([&]() { std::exit(cmd_train(train_args)); });

    DenoiseArgs denoise_args;
    auto* denoise = app.add_subcommand(
        "denoise", "Denoise one signal file with a trained checkpoint");
    denoise->add_option("--checkpoint", denoise_args.checkpoint,
                        "checkpoint.json from 'train'")
        ->required();
    denoise->add_option("--input", denoise_args.input,
                        "signal file: one sample per line, or a single-column "
                        "CSV with a header")
        ->required();
    denoise->add_option("--out", denoise_args.out,
                        "output directory (default 'denoised')");
    denoise->add_flag("--force", denoise_args.force,
                      "overwrite a non-empty output directory");
    denoise->callback([&]() { std::exit(cmd_denoise(denoise_args)); });

    EvalArgs eval_args;
    auto* eval = app.add_subcommand(
        "eval", "Score a checkpoint on a prepared test split");
    eval->add_option("--checkpoint", eval_args.checkpoint,
                     "checkpoint.json from 'train'")
        ->required();
    eval->add_option("--data", eval_args.data,
                     "dataset directory from 'prepare'")
        ->required();
    eval->add_option("--out", eval_args.out,
                     "output directory (default 'evaluation')");
    eval->add_flag("--force", eval_args.force,
                   "overwrite a non-empty output directory");
    eval->callback([&]() { std::exit(cmd_eval(eval_args)); });

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand(
        "sweep",
        "Retrain across decomposition levels 1-8 or wavelets db1-db10 and "
        "tabulate per-noise test MSE");
    sweep->add_option("--axis", sweep_args.axis,
                      "sweep axis: 'level' or 'wavelet'")
        ->required();
    sweep->add_option("--data", sweep_args.data,
                      "dataset directory from 'prepare'")
        ->required();
    sweep->add_option("--wavelet", sweep_args.wavelet,
                      "fixed wavelet for the level sweep (default db4)");
    sweep->add_option("--level", sweep_args.level,
                      "fixed level for the wavelet sweep (default 5)");
    sweep->add_option("--boundary", sweep_args.boundary,
                      "signal extension at the edges (default symmetric)")
        ->check(CLI::IsMember({"symmetric", "periodic"}));
    sweep->add_option("--lr", sweep_args.lr, "Adam learning rate");
    sweep->add_option("--batch", sweep_args.batch, "mini-batch size");
    sweep->add_option("--val-batch", sweep_args.val_batch,
                      "validation batch size");
    sweep->add_option("--epochs", sweep_args.epochs, "maximum epochs");
    sweep->add_option("--patience", sweep_args.patience,
                      "early-stopping patience");
    sweep->add_option("--seed", sweep_args.seed,
                      "RNG seed shared by every configuration");
    sweep->add_option("--jobs", sweep_args.jobs,
                      "parallel training slots (default 1; results are "
                      "identical for any value)");
    sweep->add_option("--out", sweep_args.out,
                      "output directory (default 'sweep')");
    sweep->add_flag("--force", sweep_args.force,
                    "overwrite a non-empty output directory");
    sweep->callback([&]() { std::exit(cmd_sweep(sweep_args)); });

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const dataset::ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    }
}
