#include <doctest.h>

#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "tsxai/dataset.hpp"
#include "tsxai/errors.hpp"
#include "tsxai/synthdata.hpp"

using namespace tsxai;

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

}  // namespace

TEST_CASE("UCR files with tab, comma and blank delimiters") {
    fixture::TempDir dir("ucr");
    write_text(dir / "tab.tsv", "1\t0.5\t-1.25\t3\n-1\t2\t2\t2\n1\t0\t0\t1e-3\n");
    write_text(dir / "comma.csv", "1,0.5,-1.25,3\r\n-1,2,2,2\r\n1,0,0,1e-3\r\n");
    write_text(dir / "blank.txt", "  1.0000000e+00   5.0000000e-01  -1.2500000e+00   3.0000000e+00\n"
                                  " -1.0000000e+00   2.0000000e+00   2.0000000e+00   2.0000000e+00\n"
                                  "  1.0000000e+00   0.0000000e+00   0.0000000e+00   1.0000000e-03\n\n");
    for (const char* name : {"tab.tsv", "comma.csv", "blank.txt"}) {
        const auto d = load_ucr(dir / name);
        INFO(name);
        CHECK(d.size() == 3);
        CHECK(d.length() == 3);
        CHECK(d.label_values == std::vector<double>{-1.0, 1.0});
        CHECK(d.labels == std::vector<int>{1, 0, 1});
        CHECK(d.series(0, 0, 1) == -1.25);
        CHECK(d.series(2, 0, 2) == 1e-3);
    }
    CHECK(load_ucr(dir / "tab.tsv").delimiter == '\t');
    CHECK(load_ucr(dir / "comma.csv").delimiter == ',');
}

TEST_CASE("malformed UCR input reports the line") {
    fixture::TempDir dir("bad");
    write_text(dir / "ragged.csv", "1,2,3\n0,1\n");
    write_text(dir / "text.csv", "1,2,3\n0,1,x\n");
    write_text(dir / "empty.csv", "");
    write_text(dir / "label_only.csv", "1\n");
    try {
        load_ucr(dir / "ragged.csv");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    try {
        load_ucr(dir / "text.csv");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(load_ucr(dir / "empty.csv"), ParseError);
    CHECK_THROWS_AS(load_ucr(dir / "label_only.csv"), ParseError);
    CHECK_THROWS_AS(load_ucr(dir / "missing.csv"), ParseError);
}

TEST_CASE("write then load reproduces series bit-exactly, labels and relevant sets") {
    fixture::TempDir dir("roundtrip");
    SynthConfig cfg;
    cfg.seed = 3;
    auto data = generate_dataset(15, cfg);
    std::mt19937_64 rng(61);
    data.series(0, 0, 0) = 1.0 / 3.0;
    data.series(1, 0, 0) = -5e-300;
    data.series(2, 0, 0) = 123456789.123456789;
    write_dataset(data, dir / "syn.csv");
    CHECK(std::filesystem::exists(relevant_sidecar_path(dir / "syn.csv")));
    CHECK(relevant_sidecar_path(dir / "syn.csv").filename() == "syn.relevant.csv");
    const auto back = load_dataset(dir / "syn.csv");
    CHECK(back.series == data.series);
    CHECK(back.labels == data.labels);
    CHECK(back.relevant_sets == data.relevant_sets);
    CHECK(fingerprint(back) == fingerprint(data));

    write_ucr(data, dir / "syn.tsv", '\t');
    const auto tab = load_ucr(dir / "syn.tsv");
    CHECK(tab.series == data.series);
    CHECK_FALSE(tab.has_relevant_sets());
}

TEST_CASE("label mapping is a bijection onto sorted label values") {
    fixture::TempDir dir("labels");
    write_text(dir / "a.csv", "7,1\n3,2\n-2,3\n7,4\n");
    const auto d = load_ucr(dir / "a.csv");
    CHECK(d.label_values == std::vector<double>{-2.0, 3.0, 7.0});
    CHECK(d.labels == std::vector<int>{2, 1, 0, 2});

    write_text(dir / "b.csv", "3,1\n7,2\n");
    auto other = load_ucr(dir / "b.csv");
    CHECK(other.labels == std::vector<int>{0, 1});
    remap_labels(other, d.label_values);
    CHECK(other.labels == std::vector<int>{1, 2});
    CHECK(other.label_values == d.label_values);

    write_text(dir / "c.csv", "5,1\n");
    auto unknown = load_ucr(dir / "c.csv");
    CHECK_THROWS_AS(remap_labels(unknown, d.label_values), ValueError);
}

TEST_CASE("sidecar with a bad index is a parse error") {
    fixture::TempDir dir("sidecar");
    write_text(dir / "d.csv", "0,1,2,3\n1,1,2,3\n");
    write_text(dir / "d.relevant.csv", "0,1\n2,q\n");
    CHECK_THROWS_AS(load_dataset(dir / "d.csv"), ParseError);
    write_text(dir / "d.relevant.csv", "0,1\n2,9\n");
    CHECK_THROWS_AS(load_dataset(dir / "d.csv"), ValueError);
}

TEST_CASE("z-normalization, subsets, concatenation and stratified splits") {
    SynthConfig cfg;
    auto data = generate_dataset(20, cfg);
    z_normalize(data);
    for (std::size_t n = 0; n < data.size(); ++n) {
        double mean = 0, sq = 0;
        for (double v : data.series.series(n, 0)) mean += v / 250.0;
        for (double v : data.series.series(n, 0)) sq += (v - mean) * (v - mean);
        CHECK(std::abs(mean) < 1e-12);
        CHECK(std::sqrt(sq / 250.0) == doctest::Approx(1.0).epsilon(1e-6));
    }

    const std::vector<std::size_t> rows{3, 1};
    const auto sub = data.subset(rows);
    CHECK(sub.labels == std::vector<int>{1, 1});
    CHECK(sub.relevant_sets[0] == data.relevant_sets[3]);

    const auto pooled = concatenate(data, data);
    CHECK(pooled.size() == 80);
    const auto [train, test] = stratified_split(pooled, 0.8, 4);
    CHECK(train.size() == 64);
    CHECK(test.size() == 16);
    CHECK(train.class_counts() == std::vector<std::size_t>{32, 32});
    const auto again = stratified_split(pooled, 0.8, 4);
    CHECK(again.first.series == train.series);
    CHECK_THROWS_AS(stratified_split(pooled, 1.0, 4), ValueError);
}
