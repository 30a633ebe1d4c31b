#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dbnlc {

// Discrete state values are 1-based in files and error messages (levels
// 1..cardinality) and 0-based everywhere inside the library.

enum class VarKind { Continuous, Discrete };

struct NodeSpec {
    std::string name;
    int layer = 1;       // 1 = traits/baseline, 2 = facial states, 3 = session ratings
    int cardinality = 3; // quantization levels for continuous, state count for discrete
    VarKind kind = VarKind::Continuous;
    bool replicate_across_weeks = false; // measured once, copied to every week
};

using Schema = std::vector<NodeSpec>;

/// The 16-variable weekly schema used throughout the bundled experiments:
/// five personality traits and baseline wellbeing (layer 1), two facial
/// action-unit state nodes (layer 2), seven coach-perception ratings and the
/// relaxation/calm change score (layer 3).
Schema default_study_schema();

int schema_index(const Schema& schema, const std::string& name);

/// Panel data: subjects x weeks x variables, with an explicit missing mask.
struct LongitudinalDataset {
    std::vector<std::string> subjects;
    int weeks = 0;
    Schema variables;
    // subject-major, then week, then variable
    std::vector<std::optional<double>> cells;

    std::optional<double>& cell(int subject, int week, int var);
    const std::optional<double>& cell(int subject, int week, int var) const;
    int subject_index(const std::string& id) const;

    static LongitudinalDataset empty(std::vector<std::string> subjects, int weeks,
                                     Schema variables);
};

/// Loads a long-format CSV (columns: subject, week, then variable names).
/// Empty cells become missing; absent (subject, week) rows become rows of
/// missing cells; replicate-across-weeks variables are filled from their
/// earliest observed week.
LongitudinalDataset load_dataset(const std::string& path, const Schema& schema);

void save_dataset(const std::string& path, const LongitudinalDataset& data);

struct VarQuant {
    std::vector<double> cutpoints;       // ascending, cardinality - 1 of them
    std::vector<double> representatives; // per-bin mean of training values
    double lo = 0.0;                     // training range, for out-of-range warnings
    double hi = 0.0;

    /// 0-based bin; values at a cutpoint go to the lower bin.
    int bin_of(double v) const;
};

struct QuantizationMap {
    std::vector<std::string> names; // schema order, continuous variables only
    std::vector<VarQuant> vars;

    const VarQuant* find(const std::string& name) const;
    std::string to_json() const;
    static QuantizationMap from_json(const std::string& text);
};

/// Equal-frequency discretization of the continuous variables; discrete
/// variables pass through unchanged. Requires complete data (impute first).
std::pair<LongitudinalDataset, QuantizationMap> quantize(const LongitudinalDataset& data);

/// Posterior-expected representative: sum_k posterior[k] * representative[k].
double dequantize_expectation(std::span<const double> posterior, const VarQuant& entry);

/// Rows of 2N discrete states: previous-slice columns then current-slice
/// columns, one row per (subject, consecutive week pair).
struct TwoSliceDataset {
    int base_n = 0;
    Schema schema;                      // base (one-slice) schema
    std::vector<std::vector<int>> rows; // 0-based states, length 2 * base_n
    std::vector<std::pair<std::string, int>> provenance; // (subject, later week)

    int cardinality(int node) const { return schema[node % base_n].cardinality; }
    int node_count() const { return 2 * base_n; }
};

std::string two_slice_node_name(const Schema& schema, int node);

/// Pairs consecutive weeks within the first `weeks_used` weeks of a fully
/// discrete, fully observed dataset.
TwoSliceDataset unroll_two_slice(const LongitudinalDataset& discrete, int weeks_used);

} // namespace dbnlc
