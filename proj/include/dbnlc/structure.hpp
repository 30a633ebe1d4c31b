#pragma once

#include <set>
#include <string>
#include <vector>

#include "dbnlc/core.hpp"

namespace dbnlc {

// Node ids over the two-slice space: 0..N-1 are the previous slice,
// N..2N-1 the current slice, both in schema order.

/// Edge legality rules for the two-slice search. Previous-slice nodes take
/// no parents during search (the within-slice structure is learned on
/// current-slice families and replicated); current-slice edges must respect
/// layer(parent) <= layer(child) within the slice; cross-slice edges run
/// previous -> current only. Nodes may additionally be exogenous (no
/// parents) or restricted to an explicit parent whitelist.
struct ConstraintSet {
    int base_n = 0;
    std::vector<int> layer;                       // per base node
    std::vector<bool> exogenous;                  // per two-slice node id
    std::vector<std::vector<int>> allowed_parents; // whitelist per node id, empty = no limit
    std::set<std::pair<int, int>> forbidden;      // extra (parent, child) bans

    bool is_prev(int node) const { return node < base_n; }
    int base(int node) const { return node % base_n; }

    bool edge_allowed(int parent, int child) const;
    /// A pair is worth testing when an edge could exist in either direction.
    bool pair_testable(int a, int b) const;

    /// Default rules for a weekly study schema: measured-once layer-1 nodes
    /// are exogenous in the current slice, remaining layer-1 nodes may only
    /// persist from their own previous value.
    static ConstraintSet for_schema(const Schema& schema);
};

/// Directed acyclic structure over 2N nodes. The within-slice structure is
/// stored once per slice (identical by construction); between-slice edges
/// run from the previous into the current slice.
struct TwoSliceDag {
    Schema schema;
    int base_n = 0;
    std::vector<std::vector<int>> parents; // per two-slice node id, sorted

    int node_count() const { return 2 * base_n; }
    int cardinality(int node) const { return schema[node % base_n].cardinality; }
    std::string node_name(int node) const { return two_slice_node_name(schema, node); }

    bool has_edge(int parent, int child) const;
    std::vector<std::pair<int, int>> edges() const;

    /// Base-index pairs (i, j): edge i_t -> j_t (and its previous-slice copy).
    std::vector<std::pair<int, int>> within_edges() const;
    /// Base-index pairs (i, j): edge i_{t-1} -> j_t.
    std::vector<std::pair<int, int>> between_edges() const;

    std::vector<std::vector<int>> within_adjacency() const;  // base_n x base_n
    std::vector<std::vector<int>> between_adjacency() const; // base_n x base_n

    bool is_acyclic() const;
    std::vector<int> topological_order() const; // throws on cycle

    /// Builds the full structure from current-slice families, replicating
    /// the within-slice edges into the previous slice.
    static TwoSliceDag from_current_families(const Schema& schema,
                                             const std::vector<std::vector<int>>& curr_parents);

    std::string to_json() const;
    static TwoSliceDag from_json(const std::string& text);
};

struct G2Result {
    double statistic = 0.0;
    long dof = 0;
    double pvalue = 1.0;
    bool informative = false; // false when no populated stratum has freedom
};

/// Likelihood-ratio independence test of (x, y) given the conditioning set z
/// on discrete two-slice rows. Uninformative results (dof 0) are treated as
/// independence by callers.
G2Result g2_test(const TwoSliceDataset& data, int x, int y, const std::vector<int>& z);

/// Max-min parents-children candidate sets per node, symmetry corrected.
/// Pairs whose edge is constraint-forbidden in both directions are never
/// tested or admitted.
std::vector<std::vector<int>> mmpc(const TwoSliceDataset& data, const ConstraintSet& constraints,
                                   double alpha, int max_cond);

/// BDeu family score with equivalent sample size `ess` (natural log).
double bdeu_score(const TwoSliceDataset& data, int node, const std::vector<int>& parents,
                  double ess);

struct StructureOptions {
    double alpha = 0.05;
    int max_cond = 3;
    double ess = 1.0;
};

/// Greedy add/delete/reverse search over current-slice families. Additions
/// and reversals stay on the skeleton; every move must keep the graph
/// acyclic and constraint-legal; ties break on (add < delete < reverse,
/// then parent/child name).
TwoSliceDag hill_climb(const TwoSliceDataset& data,
                       const std::vector<std::vector<int>>& skeleton,
                       const ConstraintSet& constraints, double ess);

/// mmpc followed by hill_climb.
TwoSliceDag learn_structure(const TwoSliceDataset& data, const ConstraintSet& constraints,
                            const StructureOptions& opts = {});

} // namespace dbnlc
