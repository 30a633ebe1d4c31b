#include "dbnlc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dbnlc/util/csv.hpp"

namespace dbnlc {

double rmse(std::span<const double> pred, std::span<const double> actual) {
    if (pred.empty()) throw std::runtime_error("rmse: empty vectors");
    if (pred.size() != actual.size()) throw std::runtime_error("rmse: length mismatch");
    double s = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) s += (pred[i] - actual[i]) * (pred[i] - actual[i]);
    return std::sqrt(s / static_cast<double>(pred.size()));
}

double r2(std::span<const double> pred, std::span<const double> actual) {
    if (pred.size() != actual.size()) throw std::runtime_error("r2: length mismatch");
    if (pred.size() < 2) throw std::runtime_error("r2: need at least 2 values");
    double mean = 0.0;
    for (double a : actual) mean += a;
    mean /= static_cast<double>(actual.size());
    double g = 0.0, s = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        g += (actual[i] - pred[i]) * (actual[i] - pred[i]);
        s += (actual[i] - mean) * (actual[i] - mean);
    }
    if (s == 0.0) throw std::runtime_error("r2: undefined, actual values have zero variance");
    return 1.0 - g / s;
}

PredictionReport build_report(const std::vector<PredictedRow>& predictions,
                              const std::vector<ActualRow>& actuals,
                              const std::vector<std::string>& rating_names) {
    PredictionReport report;
    report.rating_names = rating_names;

    std::set<std::pair<std::string, int>> keys;
    for (const auto& p : predictions) {
        if (!keys.insert({p.subject, p.week}).second)
            throw std::runtime_error("build_report: duplicate prediction for subject " +
                                     p.subject + ", week " + std::to_string(p.week));
    }
    std::map<std::pair<std::string, int>, const ActualRow*> actual_by_key;
    for (const auto& a : actuals) {
        if (!keys.count({a.subject, a.week}))
            throw std::runtime_error("build_report: actuals reference subject " + a.subject +
                                     ", week " + std::to_string(a.week) +
                                     " with no matching prediction");
        if (!actual_by_key.insert({{a.subject, a.week}, &a}).second)
            throw std::runtime_error("build_report: duplicate actuals for subject " + a.subject +
                                     ", week " + std::to_string(a.week));
    }

    for (const auto& p : predictions) {
        PredictionRow row;
        row.subject = p.subject;
        row.week = p.week;
        row.predicted = p.values;
        row.actual.assign(rating_names.size(), std::nullopt);
        auto it = actual_by_key.find({p.subject, p.week});
        if (it != actual_by_key.end()) row.actual = it->second->values;

        bool complete = std::all_of(row.actual.begin(), row.actual.end(),
                                    [](const auto& v) { return v.has_value(); });
        if (complete) {
            std::vector<double> a;
            for (const auto& v : row.actual) a.push_back(*v);
            row.rmse = rmse(row.predicted, a);
            row.r2 = r2(row.predicted, a);
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string report_to_csv(const PredictionReport& report) {
    csv::Csv out;
    out.header = {"subject", "week"};
    for (const auto& name : report.rating_names) out.header.push_back("pred_" + name);
    for (const auto& name : report.rating_names) out.header.push_back("actual_" + name);
    out.header.push_back("rmse");
    out.header.push_back("r2");
    for (const auto& row : report.rows) {
        std::vector<std::string> cells = {row.subject, std::to_string(row.week)};
        for (double v : row.predicted) cells.push_back(csv::format_double(v, 4));
        for (const auto& v : row.actual)
            cells.push_back(v ? csv::format_double(*v, 4) : "");
        cells.push_back(row.rmse ? csv::format_double(*row.rmse, 2) : "");
        cells.push_back(row.r2 ? csv::format_double(*row.r2, 4) : "");
        out.rows.push_back(std::move(cells));
    }
    std::ostringstream text;
    for (size_t i = 0; i < out.header.size(); ++i) text << (i ? "," : "") << out.header[i];
    text << "\n";
    for (const auto& row : out.rows) {
        for (size_t i = 0; i < row.size(); ++i) text << (i ? "," : "") << row[i];
        text << "\n";
    }
    return text.str();
}

std::string report_to_text(const PredictionReport& report) {
    std::vector<std::vector<std::string>> grid;
    std::vector<std::string> header = {"subject", "week"};
    for (const auto& name : report.rating_names) header.push_back(name);
    header.push_back("RMSE");
    header.push_back("R2");
    grid.push_back(header);
    for (const auto& row : report.rows) {
        std::vector<std::string> cells = {row.subject, std::to_string(row.week)};
        for (size_t i = 0; i < row.predicted.size(); ++i) {
            std::string cell = csv::format_double(row.predicted[i], 2);
            cell += row.actual[i] ? " (" + csv::format_double(*row.actual[i], 2) + ")" : " (--)";
            cells.push_back(cell);
        }
        cells.push_back(row.rmse ? csv::format_double(*row.rmse, 2) : "--");
        cells.push_back(row.r2 ? csv::format_double(*row.r2, 4) : "--");
        grid.push_back(std::move(cells));
    }

    std::vector<size_t> width(header.size(), 0);
    for (const auto& row : grid)
        for (size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
    std::ostringstream out;
    for (const auto& row : grid) {
        for (size_t i = 0; i < row.size(); ++i) {
            out << row[i] << std::string(width[i] - row[i].size(), ' ');
            if (i + 1 < row.size()) out << "  ";
        }
        out << "\n";
    }
    return out.str();
}

} // namespace dbnlc
