#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "dbnlc/eval.hpp"

using namespace dbnlc;

namespace {

// reference subject-wise prediction/actual vectors used as fixed points
const std::vector<double> kS1Pred = {1.83, 2.54, 3.75, 3.99, 2.84, 3.66, 4.85, 0.5};
const std::vector<double> kS1Act = {1.8, 1.83, 3.4, 2.2, 2.0, 4.25, 5.0, 1.5};

} // namespace

TEST_CASE("rmse examples") {
    CHECK(rmse(kS1Pred, kS1Act) == doctest::Approx(0.86).epsilon(0.01));
    std::vector<double> same = {1, 2, 3};
    CHECK(rmse(same, same) == 0.0);
    std::vector<double> shifted = {1.5, 2.5, 3.5};
    CHECK(rmse(shifted, same) == doctest::Approx(0.5));
    CHECK(rmse(same, shifted) == doctest::Approx(0.5)); // symmetric
    CHECK_THROWS_WITH_AS(rmse({}, {}), doctest::Contains("empty"), std::runtime_error);
    CHECK_THROWS_WITH_AS(rmse(std::vector<double>{1.0}, same), doctest::Contains("mismatch"),
                         std::runtime_error);
}

TEST_CASE("r2 examples") {
    CHECK(r2(kS1Pred, kS1Act) == doctest::Approx(0.5024).epsilon(0.02));
    std::vector<double> act = {1, 2, 3, 4};
    CHECK(r2(act, act) == doctest::Approx(1.0));
    std::vector<double> mean_pred(4, 2.5);
    CHECK(r2(mean_pred, act) == doctest::Approx(0.0));
    std::vector<double> constant(4, 3.0);
    CHECK_THROWS_WITH_AS(r2(act, constant), doctest::Contains("zero variance"),
                         std::runtime_error);
}

TEST_CASE("r2 stays at most 1 and survives affine rescaling of both inputs") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> unif(0.0, 5.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> pred(8), act(8);
        for (int i = 0; i < 8; ++i) {
            pred[i] = unif(gen);
            act[i] = unif(gen);
        }
        double v = r2(pred, act);
        CHECK(v <= 1.0);
        std::vector<double> pred2(8), act2(8);
        for (int i = 0; i < 8; ++i) {
            pred2[i] = 2.5 * pred[i] - 1.0;
            act2[i] = 2.5 * act[i] - 1.0;
        }
        CHECK(r2(pred2, act2) == doctest::Approx(v).epsilon(1e-9));
    }
}

TEST_CASE("build_report joins and marks unavailable metrics") {
    std::vector<std::string> names = {"A", "B"};
    std::vector<PredictedRow> preds;
    std::vector<ActualRow> actuals;
    for (int s = 1; s <= 3; ++s) {
        for (int w = 4; w <= 5; ++w) {
            PredictedRow p{"S" + std::to_string(s), w, {1.0 * s, 2.0 * w}};
            preds.push_back(p);
            ActualRow a{"S" + std::to_string(s), w, {1.1 * s, 2.1 * w}};
            if (s == 3 && w == 5) a.values = {std::nullopt, std::nullopt}; // missed session
            actuals.push_back(a);
        }
    }
    auto report = build_report(preds, actuals, names);
    REQUIRE(report.rows.size() == 6);
    int with_metrics = 0;
    for (const auto& row : report.rows)
        if (row.rmse) ++with_metrics;
    CHECK(with_metrics == 5);
    const auto& missing = report.rows.back();
    CHECK(missing.subject == "S3");
    CHECK(!missing.rmse.has_value());
    CHECK(!missing.r2.has_value());
    CHECK(missing.predicted.size() == 2); // predictions still present

    auto text = report_to_text(report);
    CHECK(text.find("--") != std::string::npos);
    auto csv_text = report_to_csv(report);
    CHECK(csv_text.find("pred_A") != std::string::npos);
}

TEST_CASE("build_report edge cases") {
    CHECK(build_report({}, {}, {"A"}).rows.empty());

    std::vector<PredictedRow> dup = {{"S1", 4, {1.0}}, {"S1", 4, {2.0}}};
    CHECK_THROWS_WITH_AS(build_report(dup, {}, {"A"}), doctest::Contains("duplicate"),
                         std::runtime_error);

    std::vector<PredictedRow> preds = {{"S1", 4, {1.0}}};
    std::vector<ActualRow> stray = {{"S2", 4, {1.0}}};
    CHECK_THROWS_WITH_AS(build_report(preds, stray, {"A"}), doctest::Contains("S2"),
                         std::runtime_error);
}

TEST_CASE("negative r2 values pass through unclamped") {
    std::vector<double> pred = {3.39, 1.86, 3.1, 4.32, 1.66, 4.69, 4.73, 1.36};
    std::vector<double> act = {4.4, 4.67, 5.0, 4.6, 4.0, 5.0, 5.0, 1.5};
    double v = r2(pred, act);
    CHECK(v == doctest::Approx(-0.8986).epsilon(0.02));
    std::vector<PredictedRow> preds = {{"S3", 4, pred}};
    std::vector<ActualRow> actuals = {{"S3", 4, {}}};
    for (double a : act) actuals[0].values.push_back(a);
    auto report =
        build_report(preds, actuals, {"Anth", "Ani", "Like", "PerInt", "RM", "Conv", "Sens", "DeltaRC"});
    CHECK(*report.rows[0].r2 < 0.0);
    CHECK(report_to_csv(report).find("-0.8") != std::string::npos);
}
