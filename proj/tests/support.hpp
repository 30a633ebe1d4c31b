// Shared test fixtures: independent oracles and random-instance generators.
// Everything here recomputes expected values by routes separate from the
// library code they check.
#pragma once

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "dbnlc/infer.hpp"
#include "dbnlc/params.hpp"
#include "dbnlc/structure.hpp"

namespace testsupport {

using namespace dbnlc;

inline Schema tiny_schema(const std::vector<std::pair<std::string, int>>& vars) {
    Schema s;
    for (const auto& [name, card] : vars) s.push_back({name, 1, card, VarKind::Discrete, false});
    return s;
}

/// Full-joint enumeration: marginals and evidence mass by brute force.
struct Enumerated {
    std::vector<std::vector<double>> marginals; // per node (2N), normalized
    double log_evidence;
};

inline Enumerated enumerate_joint(const TwoSliceDag& dag, const CptSet& cpts,
                                  const Evidence& evidence) {
    int nn = dag.node_count();
    std::vector<int> cards(nn);
    for (int v = 0; v < nn; ++v) cards[v] = dag.cardinality(v);

    Enumerated out;
    out.marginals.resize(nn);
    for (int v = 0; v < nn; ++v) out.marginals[v].assign(cards[v], 0.0);

    std::vector<int> states(nn, 0);
    double total = 0.0;
    while (true) {
        bool consistent = true;
        for (const auto& [node, state] : evidence)
            if (states[node] != state) consistent = false;
        if (consistent) {
            double p = 1.0;
            for (int v = 0; v < nn; ++v) {
                const Cpt& cpt = cpts.cpts[v];
                long j = 0;
                for (int par : cpt.parents) j = j * cards[par] + states[par];
                p *= cpt.table[j * cpt.r + states[v]];
            }
            total += p;
            for (int v = 0; v < nn; ++v) out.marginals[v][states[v]] += p;
        }
        int d = nn - 1;
        while (d >= 0 && ++states[d] == cards[d]) states[d--] = 0;
        if (d < 0) break;
    }
    for (int v = 0; v < nn; ++v)
        for (double& p : out.marginals[v]) p /= total;
    out.log_evidence = std::log(total);
    return out;
}

/// Random two-slice network with random discrete CPTs, entries bounded away
/// from zero so random evidence stays possible.
struct RandomNet {
    TwoSliceDag dag;
    CptSet cpts;
};

inline RandomNet random_net(std::mt19937_64& gen, int base_n, int max_card) {
    std::uniform_int_distribution<int> card_dist(2, max_card);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Schema schema;
    for (int i = 0; i < base_n; ++i)
        schema.push_back({"X" + std::to_string(i), 1, card_dist(gen), VarKind::Discrete, false});

    std::vector<int> order(base_n);
    for (int i = 0; i < base_n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), gen);

    std::vector<std::vector<int>> families(base_n);
    for (int a = 0; a < base_n; ++a)
        for (int b = a + 1; b < base_n; ++b)
            if (unif(gen) < 0.4) families[order[b]].push_back(base_n + order[a]);
    for (int i = 0; i < base_n; ++i)
        for (int j = 0; j < base_n; ++j)
            if (unif(gen) < 0.3) families[j].push_back(i);

    RandomNet net;
    net.dag = TwoSliceDag::from_current_families(schema, families);
    net.cpts.cpts.resize(net.dag.node_count());
    for (int v = 0; v < net.dag.node_count(); ++v) {
        const auto& parents = net.dag.parents[v];
        Cpt cpt;
        cpt.node = v;
        cpt.parents = parents;
        cpt.r = net.dag.cardinality(v);
        cpt.q = 1;
        for (int p : parents) cpt.q *= net.dag.cardinality(p);
        cpt.table.resize(cpt.q * cpt.r);
        for (long j = 0; j < cpt.q; ++j) {
            double sum = 0.0;
            for (int k = 0; k < cpt.r; ++k) {
                double w = 0.1 + unif(gen);
                cpt.table[j * cpt.r + k] = w;
                sum += w;
            }
            for (int k = 0; k < cpt.r; ++k) cpt.table[j * cpt.r + k] /= sum;
        }
        net.cpts.cpts[v] = std::move(cpt);
    }
    return net;
}

inline Evidence random_evidence(std::mt19937_64& gen, const TwoSliceDag& dag, double prob) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Evidence ev;
    for (int v = 0; v < dag.node_count(); ++v)
        if (unif(gen) < prob)
            ev[v] = static_cast<int>(gen() % static_cast<uint64_t>(dag.cardinality(v)));
    return ev;
}

/// BDeu family score recomputed independently: map-based stratum counting
/// and a different summation order.
inline double bdeu_oracle(const TwoSliceDataset& data, int node, const std::vector<int>& parents,
                          double ess) {
    std::map<std::vector<int>, std::map<int, long>> strata;
    for (const auto& row : data.rows) {
        std::vector<int> key;
        for (int p : parents) key.push_back(row[p]);
        strata[key][row[node]] += 1;
    }
    double r = data.cardinality(node);
    double q = 1;
    for (int p : parents) q *= data.cardinality(p);
    double alpha_jk = ess / (r * q);
    double alpha_j = ess / q;

    double score = 0.0;
    for (const auto& [key, counts] : strata) {
        long nj = 0;
        double cell_terms = 0.0;
        for (const auto& [state, njk] : counts) {
            nj += njk;
            cell_terms += std::lgamma(alpha_jk + njk) - std::lgamma(alpha_jk);
        }
        score += cell_terms + std::lgamma(alpha_j) - std::lgamma(alpha_j + nj);
    }
    return score;
}

/// Total BDeu of the searched (current-slice) families.
inline double total_score(const TwoSliceDataset& data, const TwoSliceDag& dag, double ess) {
    double s = 0.0;
    for (int v = dag.base_n; v < dag.node_count(); ++v) s += bdeu_score(data, v, dag.parents[v], ess);
    return s;
}

/// True when no single constraint-legal add/delete/reverse on the
/// current-slice families strictly improves the total score.
inline bool is_local_optimum(const TwoSliceDataset& data, const TwoSliceDag& dag,
                             const std::vector<std::vector<int>>& skeleton,
                             const ConstraintSet& constraints, double ess, double min_gain = 1e-9) {
    int base_n = dag.base_n, nn = dag.node_count();
    auto adjacent = [&](int a, int b) {
        return std::find(skeleton[a].begin(), skeleton[a].end(), b) != skeleton[a].end();
    };
    auto family_score = [&](int node, std::vector<int> parents) {
        std::sort(parents.begin(), parents.end());
        return bdeu_score(data, node, parents, ess);
    };
    auto try_structure = [&](std::vector<std::vector<int>> families) {
        TwoSliceDag cand = TwoSliceDag::from_current_families(dag.schema, families);
        return cand.is_acyclic();
    };

    std::vector<std::vector<int>> families(base_n);
    for (int b = 0; b < base_n; ++b) families[b] = dag.parents[base_n + b];

    for (int b = 0; b < base_n; ++b) {
        int child = base_n + b;
        double base = family_score(child, families[b]);
        for (int p = 0; p < nn; ++p) {
            bool present =
                std::find(families[b].begin(), families[b].end(), p) != families[b].end();
            if (!present && constraints.edge_allowed(p, child) && adjacent(p, child)) {
                auto f = families;
                f[b].push_back(p);
                if (try_structure(f) && family_score(child, f[b]) - base > min_gain) return false;
            }
            if (present) {
                auto f = families;
                f[b].erase(std::find(f[b].begin(), f[b].end(), p));
                double del_delta = family_score(child, f[b]) - base;
                if (del_delta > min_gain) return false;
                if (p >= base_n && constraints.edge_allowed(child, p)) {
                    auto g = f;
                    g[p - base_n].push_back(child);
                    double rev_delta = del_delta +
                                       family_score(p, g[p - base_n]) -
                                       family_score(p, families[p - base_n]);
                    if (try_structure(g) && rev_delta > min_gain) return false;
                }
            }
        }
    }
    return true;
}

} // namespace testsupport
