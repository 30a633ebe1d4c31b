#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dbnlc {

double rmse(std::span<const double> pred, std::span<const double> actual);

/// 1 - sum((actual - pred)^2) / sum((actual - mean(actual))^2); negative on
/// poor out-of-sample fits and reported as-is.
double r2(std::span<const double> pred, std::span<const double> actual);

struct PredictionRow {
    std::string subject;
    int week = 0;
    std::vector<double> predicted;
    std::vector<std::optional<double>> actual;
    std::optional<double> rmse;
    std::optional<double> r2;
};

struct PredictionReport {
    std::vector<std::string> rating_names;
    std::vector<PredictionRow> rows;
};

struct ActualRow {
    std::string subject;
    int week = 0;
    std::vector<std::optional<double>> values;
};

struct PredictedRow {
    std::string subject;
    int week = 0;
    std::vector<double> values;
};

/// Joins predictions with actuals by (subject, week); metrics are computed
/// exactly when every actual in the row is present.
PredictionReport build_report(const std::vector<PredictedRow>& predictions,
                              const std::vector<ActualRow>& actuals,
                              const std::vector<std::string>& rating_names);

/// CSV rendering: subject, week, pred_*, actual_*, rmse, r2 (blank when
/// unavailable).
std::string report_to_csv(const PredictionReport& report);

/// Aligned table with "pred (actual)" cells, "--" for unavailable metrics.
std::string report_to_text(const PredictionReport& report);

} // namespace dbnlc
