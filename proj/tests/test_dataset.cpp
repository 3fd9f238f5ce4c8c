#include "ppgdn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "test_util.hpp"

using namespace ppgdn::dataset;
using ppgdn::noise::NoiseKind;
using ppgdn::noise::NoiseSpec;
using ppgdn::testutil::max_abs_diff;
using ppgdn::testutil::random_signal;

namespace {

namespace fs = std::filesystem;

struct TempFile {
    fs::path path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path(fs::temp_directory_path() / name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::error_code ec; fs::remove(path, ec); }
};

std::size_t count_dominant_peaks(const Signal& x, double threshold) {
    std::size_t peaks = 0;
    for (std::size_t i = 1; i + 1 < x.size(); ++i)
        if (x[i] > threshold && x[i] > x[i - 1] && x[i] >= x[i + 1]) ++peaks;
    return peaks;
}

std::vector<SourceWindow> test_windows(std::size_t count, std::size_t len) {
    std::vector<Signal> raw;
    for (std::size_t i = 0; i < count; ++i)
        raw.push_back(random_signal(len, 1000 + i, 0.0, 1.0));
    return to_source_windows(raw, "synthetic");
}

}  // namespace

TEST_CASE("load_record parses a two-column table") {
    TempFile f("ppgdn_rec_ok.csv",
               "t,pleth\n"
               "0,0.10\n0.008,0.20\n0.016,0.15\n0.024,0.30\n0.032,0.45\n"
               "0.040,0.60\n0.048,0.55\n0.056,0.40\n0.064,0.25\n0.072,0.12\n");
    auto rec = load_record(f.path, "pleth", 125.0);
    REQUIRE(rec.samples.size() == 10);
    CHECK(rec.samples[0] == 0.10);
    CHECK(rec.samples[4] == 0.45);
    CHECK(rec.samples[9] == 0.12);
    CHECK(rec.channel == "pleth");
    CHECK(rec.sample_rate == 125.0);
    CHECK(rec.subject_id == "ppgdn_rec_ok");
}

TEST_CASE("load_record names the available columns on a bad channel") {
    TempFile f("ppgdn_rec_col.csv", "t,pleth\n0,0.1\n");
    try {
        load_record(f.path, "ecg", 125.0);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("pleth") != std::string::npos);
        CHECK(msg.find("t") != std::string::npos);
    }
}

TEST_CASE("load_record reports the row of a non-numeric cell") {
    TempFile f("ppgdn_rec_bad.csv",
               "t,pleth\n0,0.1\n1,0.2\n2,0.3\n3,0.4\n4,oops\n5,0.6\n");
    try {
        load_record(f.path, "pleth", 125.0);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("row 6") != std::string::npos);
    }
}

TEST_CASE("load_record rejects empty and missing files") {
    TempFile f("ppgdn_rec_empty.csv", "");
    CHECK_THROWS_AS(load_record(f.path, "pleth", 125.0), ParseError);
    TempFile h("ppgdn_rec_headeronly.csv", "t,pleth\n");
    CHECK_THROWS_AS(load_record(h.path, "pleth", 125.0), ParseError);
    CHECK_THROWS_AS(
        load_record(fs::temp_directory_path() / "ppgdn_no_such_file.csv",
                    "pleth", 125.0),
        ParseError);
}

TEST_CASE("window cuts non-overlapping full windows and drops the remainder") {
    Record rec;
    rec.sample_rate = 125.0;
    rec.samples.resize(2500);
    for (std::size_t i = 0; i < rec.samples.size(); ++i)
        rec.samples[i] = static_cast<double>(i);
    auto w = window(rec, 8.0);
    REQUIRE(w.size() == 2);
    REQUIRE(w[0].size() == 1000);
    REQUIRE(w[1].size() == 1000);
    CHECK(w[0].front() == 0.0);
    CHECK(w[0].back() == 999.0);
    CHECK(w[1].front() == 1000.0);
    CHECK(w[1].back() == 1999.0);
}

TEST_CASE("window of a short record is empty") {
    Record rec;
    rec.sample_rate = 125.0;
    rec.samples.assign(999, 0.5);
    CHECK(window(rec, 8.0).empty());
    rec.samples.assign(1000, 0.5);
    CHECK(window(rec, 8.0).size() == 1);
}

TEST_CASE("normalize maps onto [0,1] with exact endpoints") {
    auto r = normalize({0.0, 5.0, 10.0});
    CHECK(r.scaled == Signal{0.0, 0.5, 1.0});
    CHECK(r.min == 0.0);
    CHECK(r.max == 10.0);

    Signal already = {0.0, 0.25, 1.0, 0.5};
    auto r2 = normalize(already);
    CHECK(max_abs_diff(r2.scaled, already) == 0.0);

    auto r3 = normalize(random_signal(257, 4, -3.0, 7.0));
    CHECK(*std::min_element(r3.scaled.begin(), r3.scaled.end()) == 0.0);
    CHECK(*std::max_element(r3.scaled.begin(), r3.scaled.end()) == 1.0);
}

TEST_CASE("normalize rejects a constant signal") {
    CHECK_THROWS_AS(normalize(Signal(16, 0.7)), std::invalid_argument);
    CHECK_THROWS_AS(normalize({}), std::invalid_argument);
}

TEST_CASE("synth_pulse: ten beats at 75 bpm and 125 Hz give 1000 samples") {
    PulseConfig cfg;  // defaults: 10 beats, 75 bpm, 125 Hz
    auto x = synth_pulse(cfg, 5);
    REQUIRE(x.size() == 1000);
    CHECK(*std::min_element(x.begin(), x.end()) == 0.0);
    CHECK(*std::max_element(x.begin(), x.end()) == 1.0);
    const std::size_t peaks = count_dominant_peaks(x, 0.6);
    CHECK(peaks >= 9);
    CHECK(peaks <= 11);
}

TEST_CASE("synth_pulse with zero jitter is exactly periodic") {
    PulseConfig cfg;
    cfg.amp_jitter = 0.0;
    cfg.period_jitter = 0.0;
    auto x = synth_pulse(cfg, 123);
    const std::size_t period = 100;  // 60/75 s at 125 Hz
    for (std::size_t k = 0; k + period < x.size(); ++k)
        CHECK(std::abs(x[k] - x[k + period]) < 1e-9);
}

TEST_CASE("synth_pulse differs across seeds and repeats per seed") {
    PulseConfig cfg;
    auto a = synth_pulse(cfg, 1);
    auto b = synth_pulse(cfg, 2);
    auto a2 = synth_pulse(cfg, 1);
    CHECK(max_abs_diff(a, b) > 0.0);
    CHECK(max_abs_diff(a, a2) == 0.0);
}

TEST_CASE("to_source_windows records consecutive offsets") {
    std::vector<Signal> w = {{1, 2}, {3, 4}, {5, 6}};
    auto src = to_source_windows(w, "rec7");
    REQUIRE(src.size() == 3);
    CHECK(src[0].offset == 0);
    CHECK(src[1].offset == 2);
    CHECK(src[2].offset == 4);
    for (const auto& s : src) CHECK(s.record_id == "rec7");
}

TEST_CASE("make_corpus splits disjointly and covers the requested counts") {
    auto windows = test_windows(16, 50);
    std::vector<NoiseSpec> specs = {
        NoiseSpec::gaussian(0.05, 0), NoiseSpec::poisson(0.02, 0),
        NoiseSpec::uniform(-0.1, 0.1, 0), NoiseSpec::salt_pepper(0.05, 0)};
    auto corpus = make_corpus(windows, specs, {8, 4, 4}, 77);

    CHECK(corpus.train.pairs.size() == 8);
    CHECK(corpus.val.pairs.size() == 4);
    CHECK(corpus.test.pairs.size() == 4);
    CHECK(corpus.train.window_len == 50);

    std::set<std::pair<std::string, std::size_t>> seen;
    for (const auto* ds : {&corpus.train, &corpus.val, &corpus.test})
        for (const auto& p : ds->pairs) {
            CHECK(p.clean.size() == 50);
            CHECK(p.noisy.size() == 50);
            CHECK(*std::min_element(p.clean.begin(), p.clean.end()) == 0.0);
            CHECK(*std::max_element(p.clean.begin(), p.clean.end()) == 1.0);
            seen.insert({p.record_id, p.offset});
        }
    CHECK(seen.size() == 16);  // no window reused across splits
}

TEST_CASE("make_corpus cycles the noise kinds evenly") {
    auto windows = test_windows(16, 50);
    std::vector<NoiseSpec> specs = {
        NoiseSpec::gaussian(0.05, 0), NoiseSpec::poisson(0.02, 0),
        NoiseSpec::uniform(-0.1, 0.1, 0), NoiseSpec::salt_pepper(0.05, 0)};
    auto corpus = make_corpus(windows, specs, {8, 4, 4}, 3);

    auto count_kind = [](const WindowedDataset& ds, NoiseKind k) {
        return std::count_if(ds.pairs.begin(), ds.pairs.end(),
                             [&](const WindowPair& p) { return p.noise_kind == k; });
    };
    for (auto kind : {NoiseKind::gaussian, NoiseKind::poisson,
                      NoiseKind::uniform, NoiseKind::salt_pepper}) {
        CHECK(count_kind(corpus.train, kind) == 2);
        CHECK(count_kind(corpus.val, kind) == 1);
        CHECK(count_kind(corpus.test, kind) == 1);
    }
}

TEST_CASE("make_corpus corruption is reproducible from the recorded seed") {
    auto windows = test_windows(6, 40);
    std::vector<NoiseSpec> specs = {NoiseSpec::gaussian(0.05, 0)};
    auto corpus = make_corpus(windows, specs, {4, 1, 1}, 9);
    for (const auto& p : corpus.train.pairs) {
        auto again = ppgdn::noise::corrupt(
            p.clean, NoiseSpec::gaussian(0.05, p.noise_seed));
        CHECK(max_abs_diff(again, p.noisy) == 0.0);
    }
}

TEST_CASE("make_corpus is deterministic per seed") {
    auto windows = test_windows(12, 30);
    std::vector<NoiseSpec> specs = {NoiseSpec::gaussian(0.05, 0),
                                    NoiseSpec::salt_pepper(0.05, 0)};
    auto a = make_corpus(windows, specs, {6, 3, 3}, 41);
    auto b = make_corpus(windows, specs, {6, 3, 3}, 41);
    auto c = make_corpus(windows, specs, {6, 3, 3}, 42);
    REQUIRE(a.test.pairs.size() == b.test.pairs.size());
    bool identical = true, differs = false;
    for (std::size_t i = 0; i < a.test.pairs.size(); ++i) {
        identical = identical &&
                    max_abs_diff(a.test.pairs[i].noisy, b.test.pairs[i].noisy) == 0.0 &&
                    a.test.pairs[i].offset == b.test.pairs[i].offset;
        differs = differs ||
                  a.test.pairs[i].offset != c.test.pairs[i].offset ||
                  max_abs_diff(a.test.pairs[i].noisy, c.test.pairs[i].noisy) > 0.0;
    }
    CHECK(identical);
    CHECK(differs);
}

TEST_CASE("make_corpus rejects impossible requests") {
    auto windows = test_windows(6, 20);
    std::vector<NoiseSpec> specs = {NoiseSpec::gaussian(0.05, 0)};
    CHECK_THROWS_AS(make_corpus(windows, specs, {5, 1, 1}, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_corpus(windows, {}, {4, 1, 1}, 0),
                    std::invalid_argument);

    auto ragged = windows;
    ragged[2].samples.pop_back();
    CHECK_THROWS_AS(make_corpus(ragged, specs, {4, 1, 1}, 0),
                    std::invalid_argument);

    auto flat = windows;
    std::fill(flat[0].samples.begin(), flat[0].samples.end(), 0.5);
    CHECK_THROWS_AS(make_corpus(flat, specs, {4, 1, 1}, 0),
                    std::invalid_argument);
}
