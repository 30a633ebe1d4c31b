#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dbnlc/preprocess.hpp"

using namespace dbnlc;

namespace {

LongitudinalDataset one_column(const std::vector<std::optional<double>>& weekly) {
    Schema schema = {{"X", 1, 3, VarKind::Continuous, false}};
    auto data = LongitudinalDataset::empty({"S1"}, (int)weekly.size(), schema);
    for (size_t w = 0; w < weekly.size(); ++w) data.cell(0, (int)w + 1, 0) = weekly[w];
    return data;
}

} // namespace

TEST_CASE("knn_impute averages the two temporally nearest observations") {
    SUBCASE("interior gap") {
        auto data = one_column({2.0, 4.0, std::nullopt, 6.0, 8.0});
        auto out = knn_impute(data, 2);
        CHECK(*out.cell(0, 3, 0) == doctest::Approx(5.0));
        for (int w : {1, 2, 4, 5}) CHECK(*out.cell(0, w, 0) == *data.cell(0, w, 0));
    }
    SUBCASE("boundary week uses the nearest in time regardless of direction") {
        auto data = one_column({std::nullopt, 4.0, 6.0, 8.0, 10.0});
        auto out = knn_impute(data, 2);
        CHECK(*out.cell(0, 1, 0) == doctest::Approx(5.0));
    }
    SUBCASE("no missing cells is the identity") {
        auto data = one_column({1.0, 2.0, 3.0});
        auto out = knn_impute(data, 2);
        for (int w = 1; w <= 3; ++w) CHECK(*out.cell(0, w, 0) == *data.cell(0, w, 0));
    }
    SUBCASE("too few observations names subject and variable") {
        auto data = one_column({2.0, std::nullopt, std::nullopt});
        CHECK_THROWS_WITH_AS(knn_impute(data, 2), doctest::Contains("S1"), std::runtime_error);
        CHECK_THROWS_WITH_AS(knn_impute(data, 2), doctest::Contains("X"), std::runtime_error);
    }
}

TEST_CASE("knn_impute is idempotent") {
    auto data = one_column({std::nullopt, 4.0, std::nullopt, 8.0, 1.0});
    auto once = knn_impute(data, 2);
    auto twice = knn_impute(once, 2);
    for (int w = 1; w <= 5; ++w) CHECK(*once.cell(0, w, 0) == *twice.cell(0, w, 0));
}

TEST_CASE("knn_impute tie goes to the earlier week") {
    // week 3 missing; weeks 2 and 4 are both distance 1, weeks 1 and 5
    // distance 2; k=3 forces one tie decision: earlier week 1 wins over 5
    auto data = one_column({10.0, 4.0, std::nullopt, 6.0, 100.0});
    auto out = knn_impute(data, 3);
    CHECK(*out.cell(0, 3, 0) == doctest::Approx((4.0 + 6.0 + 10.0) / 3));
}

TEST_CASE("summarize_aus gates low intensities and concatenates per-AU measures") {
    std::vector<std::array<double, kAuCount>> frames(3);
    for (auto& f : frames) f.fill(0.0);
    frames[0][0] = 0.0;
    frames[1][0] = 2.0;
    frames[2][0] = 3.0;
    // second AU constant 2, third all below the gate
    for (auto& f : frames) f[1] = 2.0;
    frames[0][2] = 0.9;
    frames[1][2] = 1.0;
    frames[2][2] = 0.4;

    auto v = summarize_aus(frames);
    CHECK(v[0] == doctest::Approx(5.0 / 3));
    CHECK(v[1] == doctest::Approx(3.0));
    CHECK(v[2] == doctest::Approx(0.0));
    CHECK(v[3] == doctest::Approx(1.2472).epsilon(1e-4));
    CHECK(v[4] == doctest::Approx(2.0)); // constant AU: mean
    CHECK(v[7] == doctest::Approx(0.0)); // constant AU: std
    // gated-to-zero AU
    CHECK(v[8] == doctest::Approx(0.0));
    CHECK(v[9] == doctest::Approx(0.0));
    CHECK(v[11] == doctest::Approx(0.0));
    // max >= mean >= min per AU
    for (int a = 0; a < kAuCount; ++a) {
        CHECK(v[a * 4 + 1] >= v[a * 4 + 0]);
        CHECK(v[a * 4 + 0] >= v[a * 4 + 2]);
        CHECK(v[a * 4 + 3] >= 0.0);
    }
}

TEST_CASE("summarize_aus error paths") {
    CHECK_THROWS_WITH_AS(summarize_aus({}), doctest::Contains("empty"), std::runtime_error);
    std::vector<std::array<double, kAuCount>> one(1);
    one[0].fill(2.0);
    CHECK_THROWS_WITH_AS(summarize_aus(one), doctest::Contains("2 frames"), std::runtime_error);
    std::vector<std::array<double, kAuCount>> bad(2);
    bad[0].fill(0.0);
    bad[1].fill(0.0);
    bad[1][4] = 5.5;
    CHECK_THROWS_WITH_AS(summarize_aus(bad), doctest::Contains("outside"), std::runtime_error);
}

TEST_CASE("au frame files must carry every AU column") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path();
    auto good = (dir / "dbnlc_au_good.csv").string();
    {
        std::ofstream out(good);
        out << "frame";
        for (const auto& au : au_names()) out << "," << au;
        out << "\n1";
        for (int a = 0; a < kAuCount; ++a) out << ",2.0";
        out << "\n2";
        for (int a = 0; a < kAuCount; ++a) out << ",0.5";
        out << "\n";
    }
    auto frames = load_au_frames(good);
    REQUIRE(frames.size() == 2);
    CHECK(frames[0][0] == 2.0);

    auto bad = (dir / "dbnlc_au_bad.csv").string();
    {
        std::ofstream out(bad);
        out << "frame,AU01\n1,2.0\n";
    }
    CHECK_THROWS_WITH_AS(load_au_frames(bad), doctest::Contains("AU02"), std::runtime_error);
}

TEST_CASE("feature table imputation mirrors the temporal knn rule") {
    std::vector<AuFeatureVector> feats;
    for (int w : {1, 2, 4, 5}) {
        AuFeatureVector f;
        f.subject = "S1";
        f.week = w;
        f.sub_session = SubSession::Meditation;
        f.values.fill(static_cast<double>(w));
        feats.push_back(f);
    }
    auto table = build_feature_table(feats, SubSession::Meditation, {"S1"}, 5);
    CHECK(!table.cell(0, 3).has_value());
    auto imputed = impute_feature_table(table, 2);
    REQUIRE(imputed.cell(0, 3).has_value());
    for (double v : *imputed.cell(0, 3)) CHECK(v == doctest::Approx(3.0)); // (2+4)/2
    // observed cells untouched
    for (double v : *imputed.cell(0, 5)) CHECK(v == doctest::Approx(5.0));
}
