#include "dbnlc/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dbnlc/util/csv.hpp"

namespace dbnlc {

namespace {

/// Indices of the k nearest observed weeks to `target`, by |delta| with
/// ties toward the earlier week.
std::vector<int> nearest_weeks(const std::vector<int>& observed, int target, int k) {
    std::vector<int> sorted = observed;
    std::stable_sort(sorted.begin(), sorted.end(), [&](int a, int b) {
        int da = std::abs(a - target), db = std::abs(b - target);
        if (da != db) return da < db;
        return a < b;
    });
    sorted.resize(k);
    return sorted;
}

} // namespace

LongitudinalDataset knn_impute(const LongitudinalDataset& data, int k) {
    if (k < 1) throw std::runtime_error("knn_impute: k must be at least 1");
    LongitudinalDataset out = data;
    for (size_t v = 0; v < data.variables.size(); ++v) {
        for (size_t s = 0; s < data.subjects.size(); ++s) {
            std::vector<int> observed;
            std::vector<int> missing;
            for (int w = 1; w <= data.weeks; ++w) {
                if (data.cell(static_cast<int>(s), w, static_cast<int>(v)))
                    observed.push_back(w);
                else
                    missing.push_back(w);
            }
            if (missing.empty()) continue;
            if (static_cast<int>(observed.size()) < k)
                throw std::runtime_error("knn_impute: subject " + data.subjects[s] +
                                         ", variable " + data.variables[v].name + " has only " +
                                         std::to_string(observed.size()) +
                                         " observed weeks, need " + std::to_string(k));
            for (int w : missing) {
                double sum = 0.0;
                for (int nw : nearest_weeks(observed, w, k))
                    sum += *data.cell(static_cast<int>(s), nw, static_cast<int>(v));
                out.cell(static_cast<int>(s), w, static_cast<int>(v)) = sum / k;
            }
        }
    }
    return out;
}

std::span<const std::string> au_names() {
    static const std::vector<std::string> names = {
        "AU01", "AU02", "AU04", "AU05", "AU06", "AU07", "AU09", "AU10", "AU12",
        "AU14", "AU15", "AU17", "AU20", "AU23", "AU25", "AU26", "AU28", "AU45"};
    return names;
}

std::string sub_session_tag(SubSession s) {
    return s == SubSession::Meditation ? "med" : "int";
}

std::array<double, kAuFeatureDim> summarize_aus(
    const std::vector<std::array<double, kAuCount>>& frames) {
    if (frames.empty()) throw std::runtime_error("summarize_aus: empty frame list");
    if (frames.size() < 2) throw std::runtime_error("summarize_aus: need at least 2 frames");

    std::array<double, kAuFeatureDim> out{};
    std::vector<double> gated(frames.size());
    for (int a = 0; a < kAuCount; ++a) {
        for (size_t f = 0; f < frames.size(); ++f) {
            double v = frames[f][a];
            if (v < 0.0 || v > 5.0)
                throw std::runtime_error("summarize_aus: intensity " + std::to_string(v) +
                                         " outside [0, 5]");
            // an AU with intensity <= 1 is not considered present
            gated[f] = v > 1.0 ? v : 0.0;
        }
        double mean = 0.0;
        for (double g : gated) mean += g;
        mean /= static_cast<double>(gated.size());
        double mx = gated[0], mn = gated[0], ss = 0.0;
        for (double g : gated) {
            mx = std::max(mx, g);
            mn = std::min(mn, g);
            ss += (g - mean) * (g - mean);
        }
        out[a * 4 + 0] = mean;
        out[a * 4 + 1] = mx;
        out[a * 4 + 2] = mn;
        out[a * 4 + 3] = std::sqrt(ss / static_cast<double>(gated.size()));
    }
    return out;
}

std::vector<std::array<double, kAuCount>> load_au_frames(const std::string& path) {
    auto table = csv::read_file(path);
    auto names = au_names();
    std::vector<int> cols(kAuCount);
    for (int a = 0; a < kAuCount; ++a) {
        cols[a] = table.column(names[a]);
        if (cols[a] < 0)
            throw std::runtime_error("load_au_frames: column " + names[a] + " missing in " + path);
    }
    std::vector<std::array<double, kAuCount>> frames;
    for (const auto& row : table.rows) {
        std::array<double, kAuCount> f{};
        for (int a = 0; a < kAuCount; ++a) {
            try {
                f[a] = std::stod(row[cols[a]]);
            } catch (...) {
                throw std::runtime_error("load_au_frames: non-numeric intensity in " + path);
            }
        }
        frames.push_back(f);
    }
    return frames;
}

std::optional<std::array<double, kAuFeatureDim>>& AuFeatureTable::cell(int subject, int week) {
    return cells[static_cast<size_t>(subject) * weeks + (week - 1)];
}

const std::optional<std::array<double, kAuFeatureDim>>& AuFeatureTable::cell(int subject,
                                                                             int week) const {
    return cells[static_cast<size_t>(subject) * weeks + (week - 1)];
}

AuFeatureTable build_feature_table(const std::vector<AuFeatureVector>& features,
                                   SubSession sub_session,
                                   const std::vector<std::string>& subjects, int weeks) {
    AuFeatureTable table;
    table.subjects = subjects;
    table.weeks = weeks;
    table.cells.assign(subjects.size() * static_cast<size_t>(weeks), std::nullopt);
    for (const auto& f : features) {
        if (f.sub_session != sub_session) continue;
        auto it = std::find(subjects.begin(), subjects.end(), f.subject);
        if (it == subjects.end())
            throw std::runtime_error("build_feature_table: unknown subject " + f.subject);
        if (f.week < 1 || f.week > weeks)
            throw std::runtime_error("build_feature_table: week " + std::to_string(f.week) +
                                     " out of range for subject " + f.subject);
        int s = static_cast<int>(it - subjects.begin());
        if (table.cell(s, f.week))
            throw std::runtime_error("build_feature_table: duplicate feature vector for " +
                                     f.subject + ", week " + std::to_string(f.week));
        table.cell(s, f.week) = f.values;
    }
    return table;
}

AuFeatureTable impute_feature_table(const AuFeatureTable& table, int k) {
    AuFeatureTable out = table;
    for (size_t s = 0; s < table.subjects.size(); ++s) {
        std::vector<int> observed, missing;
        for (int w = 1; w <= table.weeks; ++w) {
            if (table.cell(static_cast<int>(s), w))
                observed.push_back(w);
            else
                missing.push_back(w);
        }
        if (missing.empty()) continue;
        if (static_cast<int>(observed.size()) < k)
            throw std::runtime_error("impute_feature_table: subject " + table.subjects[s] +
                                     " has only " + std::to_string(observed.size()) +
                                     " observed sessions, need " + std::to_string(k));
        for (int w : missing) {
            std::array<double, kAuFeatureDim> mean{};
            for (int nw : nearest_weeks(observed, w, k)) {
                const auto& src = *table.cell(static_cast<int>(s), nw);
                for (int d = 0; d < kAuFeatureDim; ++d) mean[d] += src[d];
            }
            for (int d = 0; d < kAuFeatureDim; ++d) mean[d] /= k;
            out.cell(static_cast<int>(s), w) = mean;
        }
    }
    return out;
}

} // namespace dbnlc
