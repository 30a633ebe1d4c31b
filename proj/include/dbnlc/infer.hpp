#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "dbnlc/params.hpp"

namespace dbnlc {

/// Hard evidence: node id -> observed state (0-based).
using Evidence = std::map<int, int>;

/// Dense factor over a sorted set of node ids; the last variable varies
/// fastest.
struct Table {
    std::vector<int> vars;
    std::vector<int> cards;
    std::vector<double> values;

    static Table unit(std::vector<int> vars, std::vector<int> cards);
    size_t size() const { return values.size(); }

    void multiply_in(const Table& other); // other.vars must be a subset
    void divide_in(const Table& other);   // 0/0 -> 0
    Table marginal(const std::vector<int>& keep_vars) const;
    void reduce(int var, int state); // zero out inconsistent entries
    double total() const;
};

struct JunctionTree {
    struct Clique {
        std::vector<int> vars;
        Table potential; // product of assigned CPTs
    };
    struct Separator {
        std::vector<int> vars;
        int a = 0, b = 0; // clique indices
    };

    std::vector<Clique> cliques;
    std::vector<Separator> separators;
    std::vector<int> family_clique; // per node: clique holding its CPT
    std::vector<int> node_clique;   // per node: first clique containing it
    std::vector<int> cards;         // per node
    std::vector<std::string> names; // per node, for error messages
};

/// Moralize, min-fill triangulate (ties by node name), extract maximal
/// cliques, and connect them by a maximum-weight spanning tree over
/// separator sizes.
JunctionTree build_junction_tree(const TwoSliceDag& dag, const CptSet& cpts);

/// Junction tree over the previous-slice half only, which is ancestrally
/// closed and serves as the static within-slice model.
JunctionTree build_junction_tree_prev_slice(const TwoSliceDag& dag, const CptSet& cpts);

struct PropagateResult {
    std::vector<std::vector<double>> marginals; // per node, normalized
    double log_evidence = 0.0;
    std::vector<Table> clique_beliefs; // calibrated, each sums to P(evidence)
};

/// Two-pass sum-product calibration. Throws when the evidence has
/// probability zero.
PropagateResult propagate(const JunctionTree& jt, const Evidence& evidence);

// ---------------------------------------------------------------------------
// EM over partially observed rows

/// Row over all two-slice nodes; -1 marks a missing value.
using PartialRow = std::vector<int>;

struct EmResult {
    CptSet cpts;
    std::vector<double> ll_trace; // observed-data log-likelihood per E step
};

struct EmOptions {
    int max_iter = 100;
    double tol = 1e-6;
    int workers = 1;
};

/// Expected family counts via propagation per row, then the smoothed
/// estimator of fit_map on those counts, iterated to convergence.
EmResult em_update(const TwoSliceDag& dag, const CptSet& cpts,
                   const std::vector<PartialRow>& rows, double ess,
                   const EmOptions& opts = {});

// ---------------------------------------------------------------------------
// Sampling and forecasting

/// Forward sampling in topological order; byte-deterministic given the seed.
TwoSliceDataset sample(const TwoSliceDag& dag, const CptSet& cpts, int n, uint64_t seed);

struct ForecastOptions {
    /// Iterations of single-row EM before reading posteriors. The default
    /// skips the refresh: with one row the smoothed M step only pulls
    /// unobserved families toward uniform (fixed point a_jk / a_j), so the
    /// trained model's posterior is the prediction.
    int em_refresh_iters = 0;
    double ess = 1.0;
};

struct ForecastResult {
    std::vector<double> predictions;               // layer-3 nodes, schema order
    std::vector<std::vector<double>> posteriors;   // aligned with predictions
    std::vector<std::string> rating_names;
};

/// Predicts the current slice's rating nodes from a fully observed previous
/// slice and partially observed current slice (layer-1 and layer-2 nodes).
ForecastResult forecast(const TwoSliceDag& dag, const CptSet& cpts,
                        const std::vector<int>& prev_slice, const Evidence& curr_partial,
                        const QuantizationMap& qmap, const ForecastOptions& opts = {});

struct ProfileForecast {
    std::vector<std::vector<double>> ratings; // horizon rows, layer-3 schema order
    std::vector<std::string> rating_names;
    std::vector<std::string> warnings;
};

/// Rolls a personality profile forward: step 1 from the within-slice model
/// given layer-1 evidence only, later steps feed the previous step's
/// posterior-mode slice as the previous-slice observation.
ProfileForecast forecast_profile(const TwoSliceDag& dag, const CptSet& cpts,
                                 const std::vector<double>& personality, double wellbeing,
                                 int horizon, const QuantizationMap& qmap);

} // namespace dbnlc
