#include "dbnlc/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dbnlc/util/csv.hpp"
#include "json.hpp"

namespace dbnlc {

Schema default_study_schema() {
    Schema s;
    auto trait = [&](const char* name) {
        s.push_back({name, 1, 3, VarKind::Continuous, true});
    };
    trait("Ext");
    trait("Agr");
    trait("Consc");
    trait("Neur");
    trait("Open");
    s.push_back({"WB", 1, 3, VarKind::Continuous, false});
    s.push_back({"AU_med", 2, 4, VarKind::Discrete, false});
    s.push_back({"AU_int", 2, 4, VarKind::Discrete, false});
    for (const char* name : {"Anth", "Ani", "Like", "PerInt", "RM", "Conv", "Sens", "DeltaRC"})
        s.push_back({name, 3, 3, VarKind::Continuous, false});
    return s;
}

int schema_index(const Schema& schema, const std::string& name) {
    for (size_t i = 0; i < schema.size(); ++i)
        if (schema[i].name == name) return static_cast<int>(i);
    return -1;
}

std::optional<double>& LongitudinalDataset::cell(int subject, int week, int var) {
    return cells[(static_cast<size_t>(subject) * weeks + (week - 1)) * variables.size() + var];
}

const std::optional<double>& LongitudinalDataset::cell(int subject, int week, int var) const {
    return cells[(static_cast<size_t>(subject) * weeks + (week - 1)) * variables.size() + var];
}

int LongitudinalDataset::subject_index(const std::string& id) const {
    for (size_t i = 0; i < subjects.size(); ++i)
        if (subjects[i] == id) return static_cast<int>(i);
    return -1;
}


LongitudinalDataset LongitudinalDataset::empty(std::vector<std::string> subjects, int weeks,
                                               Schema variables) {
    LongitudinalDataset d;
    d.subjects = std::move(subjects);
    d.weeks = weeks;
    d.variables = std::move(variables);
    d.cells.assign(d.subjects.size() * static_cast<size_t>(weeks) * d.variables.size(),
                   std::nullopt);
    return d;
}

LongitudinalDataset load_dataset(const std::string& path, const Schema& schema) {
    auto table = csv::read_file(path);
    if (table.rows.empty()) throw std::runtime_error("load_dataset: no rows in " + path);

    int subject_col = table.column("subject");
    int week_col = table.column("week");
    if (subject_col < 0 || week_col < 0)
        throw std::runtime_error("load_dataset: 'subject' and 'week' columns are required");

    std::vector<int> var_cols(schema.size());
    for (size_t v = 0; v < schema.size(); ++v) {
        var_cols[v] = table.column(schema[v].name);
        if (var_cols[v] < 0)
            throw std::runtime_error("load_dataset: unknown variable referenced by schema: " +
                                     schema[v].name);
    }

    std::set<std::string> subject_set;
    int max_week = 0;
    for (const auto& row : table.rows) {
        subject_set.insert(row[subject_col]);
        int week;
        try {
            size_t pos = 0;
            week = std::stoi(row[week_col], &pos);
            if (pos != row[week_col].size()) throw std::invalid_argument("");
        } catch (...) {
            throw std::runtime_error("load_dataset: non-integer week '" + row[week_col] + "'");
        }
        if (week < 1) throw std::runtime_error("load_dataset: week indices must start at 1");
        max_week = std::max(max_week, week);
    }

    auto data = LongitudinalDataset::empty(
        std::vector<std::string>(subject_set.begin(), subject_set.end()), max_week, schema);

    std::set<std::pair<std::string, int>> seen;
    for (const auto& row : table.rows) {
        const std::string& id = row[subject_col];
        int week = std::stoi(row[week_col]);
        if (!seen.insert({id, week}).second)
            throw std::runtime_error("load_dataset: duplicate row for subject " + id + ", week " +
                                     std::to_string(week));
        int s = data.subject_index(id);
        for (size_t v = 0; v < schema.size(); ++v) {
            const std::string& text = row[var_cols[v]];
            if (text.empty()) continue;
            try {
                size_t pos = 0;
                double value = std::stod(text, &pos);
                if (pos != text.size()) throw std::invalid_argument("");
                data.cell(s, week, static_cast<int>(v)) = value;
            } catch (...) {
                throw std::runtime_error("load_dataset: non-numeric cell '" + text +
                                         "' for variable " + schema[v].name);
            }
        }
    }

    // measured-once variables: copy the earliest observed value to all weeks
    for (size_t v = 0; v < schema.size(); ++v) {
        if (!schema[v].replicate_across_weeks) continue;
        for (size_t s = 0; s < data.subjects.size(); ++s) {
            std::optional<double> value;
            for (int w = 1; w <= data.weeks && !value; ++w)
                value = data.cell(static_cast<int>(s), w, static_cast<int>(v));
            if (!value) continue;
            for (int w = 1; w <= data.weeks; ++w)
                data.cell(static_cast<int>(s), w, static_cast<int>(v)) = value;
        }
    }
    return data;
}

void save_dataset(const std::string& path, const LongitudinalDataset& data) {
    csv::Csv out;
    out.header = {"subject", "week"};
    for (const auto& v : data.variables) out.header.push_back(v.name);
    for (size_t s = 0; s < data.subjects.size(); ++s) {
        for (int w = 1; w <= data.weeks; ++w) {
            std::vector<std::string> row = {data.subjects[s], std::to_string(w)};
            for (size_t v = 0; v < data.variables.size(); ++v) {
                const auto& c = data.cell(static_cast<int>(s), w, static_cast<int>(v));
                row.push_back(c ? csv::format_double_exact(*c) : "");
            }
            out.rows.push_back(std::move(row));
        }
    }
    csv::write_file(path, out);
}

int VarQuant::bin_of(double v) const {
    for (size_t k = 0; k < cutpoints.size(); ++k)
        if (v <= cutpoints[k]) return static_cast<int>(k);
    return static_cast<int>(cutpoints.size());
}

const VarQuant* QuantizationMap::find(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return &vars[i];
    return nullptr;
}

std::string QuantizationMap::to_json() const {
    nlohmann::ordered_json j;
    for (size_t i = 0; i < names.size(); ++i) {
        nlohmann::ordered_json entry;
        entry["cutpoints"] = vars[i].cutpoints;
        entry["representatives"] = vars[i].representatives;
        entry["min"] = vars[i].lo;
        entry["max"] = vars[i].hi;
        j[names[i]] = entry;
    }
    return j.dump(2) + "\n";
}

QuantizationMap QuantizationMap::from_json(const std::string& text) {
    auto j = nlohmann::ordered_json::parse(text);
    QuantizationMap map;
    for (auto it = j.begin(); it != j.end(); ++it) {
        VarQuant q;
        q.cutpoints = it.value().at("cutpoints").get<std::vector<double>>();
        q.representatives = it.value().at("representatives").get<std::vector<double>>();
        q.lo = it.value().value("min", 0.0);
        q.hi = it.value().value("max", 0.0);
        map.names.push_back(it.key());
        map.vars.push_back(std::move(q));
    }
    return map;
}

namespace {

// Equal-frequency cutpoints chosen among the distinct values: the k-th cut
// lands on the distinct value whose cumulative count is closest to n*k/c,
// constrained so every bin keeps at least one distinct value.
VarQuant quantize_one(const std::string& name, std::vector<double> values, int levels) {
    std::sort(values.begin(), values.end());
    const size_t n = values.size();

    std::vector<double> distinct;
    std::vector<size_t> cum; // count of values <= distinct[i]
    for (size_t i = 0; i < n; ++i) {
        if (distinct.empty() || values[i] != distinct.back()) {
            distinct.push_back(values[i]);
            cum.push_back(i + 1);
        } else {
            cum.back() = i + 1;
        }
    }
    if (static_cast<int>(distinct.size()) < levels)
        throw std::runtime_error("quantize: variable " + name + " has " +
                                 std::to_string(distinct.size()) +
                                 " distinct values, cannot form " + std::to_string(levels) +
                                 " bins");

    VarQuant q;
    q.lo = values.front();
    q.hi = values.back();
    size_t prev = 0; // index into distinct of the last chosen cutpoint + 1
    for (int k = 1; k < levels; ++k) {
        double target = static_cast<double>(n) * k / levels;
        size_t best = prev;
        double best_gap = -1.0;
        // must leave (levels - k) distinct values above the cut
        size_t last_allowed = distinct.size() - static_cast<size_t>(levels - k) - 1;
        for (size_t i = prev; i <= last_allowed; ++i) {
            double gap = std::fabs(static_cast<double>(cum[i]) - target);
            if (best_gap < 0.0 || gap < best_gap) {
                best_gap = gap;
                best = i;
            }
        }
        q.cutpoints.push_back(distinct[best]);
        prev = best + 1;
    }

    std::vector<double> sums(levels, 0.0);
    std::vector<size_t> counts(levels, 0);
    for (double v : values) {
        int b = q.bin_of(v);
        sums[b] += v;
        counts[b] += 1;
    }
    for (int b = 0; b < levels; ++b)
        q.representatives.push_back(sums[b] / static_cast<double>(counts[b]));
    return q;
}

} // namespace

std::pair<LongitudinalDataset, QuantizationMap> quantize(const LongitudinalDataset& data) {
    LongitudinalDataset out = data;
    QuantizationMap map;
    for (size_t v = 0; v < data.variables.size(); ++v) {
        const auto& spec = data.variables[v];
        if (spec.kind == VarKind::Discrete) continue;
        std::vector<double> values;
        for (size_t s = 0; s < data.subjects.size(); ++s) {
            for (int w = 1; w <= data.weeks; ++w) {
                const auto& c = data.cell(static_cast<int>(s), w, static_cast<int>(v));
                if (!c)
                    throw std::runtime_error("quantize: missing value for variable " + spec.name +
                                             " (impute first)");
                values.push_back(*c);
            }
        }
        VarQuant q = quantize_one(spec.name, std::move(values), spec.cardinality);
        for (size_t s = 0; s < data.subjects.size(); ++s)
            for (int w = 1; w <= data.weeks; ++w) {
                auto& c = out.cell(static_cast<int>(s), w, static_cast<int>(v));
                c = static_cast<double>(q.bin_of(*c) + 1);
            }
        map.names.push_back(spec.name);
        map.vars.push_back(std::move(q));
    }
    return {std::move(out), std::move(map)};
}

double dequantize_expectation(std::span<const double> posterior, const VarQuant& entry) {
    if (posterior.size() != entry.representatives.size())
        throw std::runtime_error("dequantize_expectation: posterior length " +
                                 std::to_string(posterior.size()) + " does not match " +
                                 std::to_string(entry.representatives.size()) + " bins");
    double total = 0.0;
    for (double p : posterior) total += p;
    if (std::fabs(total - 1.0) > 1e-9)
        throw std::runtime_error("dequantize_expectation: posterior is not normalized");
    double e = 0.0;
    for (size_t k = 0; k < posterior.size(); ++k) e += posterior[k] * entry.representatives[k];
    return e;
}

std::string two_slice_node_name(const Schema& schema, int node) {
    int n = static_cast<int>(schema.size());
    if (node < n) return schema[node].name + "_tm1";
    return schema[node - n].name + "_t";
}

TwoSliceDataset unroll_two_slice(const LongitudinalDataset& discrete, int weeks_used) {
    if (weeks_used < 2) throw std::runtime_error("unroll_two_slice: need at least two slices");
    if (weeks_used > discrete.weeks)
        throw std::runtime_error("unroll_two_slice: dataset has only " +
                                 std::to_string(discrete.weeks) + " weeks");
    TwoSliceDataset out;
    out.base_n = static_cast<int>(discrete.variables.size());
    out.schema = discrete.variables;

    auto state_of = [&](int s, int w, int v) {
        const auto& c = discrete.cell(s, w, v);
        if (!c)
            throw std::runtime_error("unroll_two_slice: missing value for subject " +
                                     discrete.subjects[s] + ", week " + std::to_string(w) +
                                     ", variable " + discrete.variables[v].name);
        double value = *c;
        int state = static_cast<int>(std::lround(value));
        if (std::fabs(value - state) > 1e-9 || state < 1 ||
            state > discrete.variables[v].cardinality)
            throw std::runtime_error("unroll_two_slice: value " + std::to_string(value) +
                                     " of " + discrete.variables[v].name +
                                     " is not a level in 1.." +
                                     std::to_string(discrete.variables[v].cardinality));
        return state - 1;
    };

    for (size_t s = 0; s < discrete.subjects.size(); ++s) {
        for (int w = 2; w <= weeks_used; ++w) {
            std::vector<int> row(2 * out.base_n);
            for (int v = 0; v < out.base_n; ++v) {
                row[v] = state_of(static_cast<int>(s), w - 1, v);
                row[out.base_n + v] = state_of(static_cast<int>(s), w, v);
            }
            out.rows.push_back(std::move(row));
            out.provenance.push_back({discrete.subjects[s], w});
        }
    }
    return out;
}

} // namespace dbnlc
