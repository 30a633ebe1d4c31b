#pragma once

#include <span>
#include <string>
#include <vector>

#include "dbnlc/structure.hpp"

namespace dbnlc {

/// Conditional probability table of one node. Rows are indexed by the
/// parent configuration with the first parent most significant; each row is
/// a distribution over the node's states.
struct Cpt {
    int node = 0;
    std::vector<int> parents; // ordered as listed; row index uses this order
    int r = 0;                // node cardinality
    long q = 1;               // product of parent cardinalities
    std::vector<double> table; // q * r, row-major

    std::span<const double> row(long j) const { return {table.data() + j * r, size_t(r)}; }
    std::span<double> row(long j) { return {table.data() + j * r, size_t(r)}; }
};

struct CptSet {
    std::vector<Cpt> cpts; // one per two-slice node id
};

/// Dirichlet posterior-mean estimate theta_jk = (N_jk + a_jk) / (N_j + a_j)
/// with BDeu-style prior mass a_jk = ess / (r q). Here "MAP" always means
/// this smoothed estimator: every entry stays strictly positive, which the
/// junction tree and EM rely on. Unseen parent configurations get uniform
/// rows.
CptSet fit_map(const TwoSliceDataset& data, const TwoSliceDag& dag, double ess);

/// Same estimator applied to fractional (expected) counts, as the EM M step.
Cpt cpt_from_counts(int node, const std::vector<int>& parents, int r, long q,
                    std::span<const double> counts, double ess);

/// Model artifact: schema, structure, and flattened tables.
std::string cpts_to_json(const TwoSliceDag& dag, const CptSet& cpts, double ess);
std::pair<TwoSliceDag, CptSet> cpts_from_json(const std::string& text);

} // namespace dbnlc
