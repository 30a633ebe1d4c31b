#include "dbnlc/structure.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

#include "dbnlc/util/stats.hpp"
#include "json.hpp"

namespace dbnlc {

// ---------------------------------------------------------------------------
// ConstraintSet

bool ConstraintSet::edge_allowed(int parent, int child) const {
    if (parent == child) return false;
    if (is_prev(child)) return false; // previous-slice families are not searched
    if (exogenous[child]) return false;
    if (!allowed_parents[child].empty()) {
        const auto& white = allowed_parents[child];
        if (std::find(white.begin(), white.end(), parent) == white.end()) return false;
    }
    if (forbidden.count({parent, child})) return false;
    if (!is_prev(parent)) {
        // within the current slice: layer ordering applies
        if (layer[base(parent)] > layer[base(child)]) return false;
    }
    return true;
}

bool ConstraintSet::pair_testable(int a, int b) const {
    return edge_allowed(a, b) || edge_allowed(b, a);
}

ConstraintSet ConstraintSet::for_schema(const Schema& schema) {
    ConstraintSet c;
    c.base_n = static_cast<int>(schema.size());
    c.layer.resize(c.base_n);
    for (int i = 0; i < c.base_n; ++i) c.layer[i] = schema[i].layer;
    c.exogenous.assign(2 * c.base_n, false);
    c.allowed_parents.assign(2 * c.base_n, {});
    for (int i = 0; i < c.base_n; ++i) {
        int curr = c.base_n + i;
        if (schema[i].layer == 1) {
            if (schema[i].replicate_across_weeks) {
                c.exogenous[curr] = true; // value is a constant of the subject
            } else {
                c.allowed_parents[curr] = {i}; // weekly baseline persists only
            }
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// TwoSliceDag

bool TwoSliceDag::has_edge(int parent, int child) const {
    const auto& p = parents[child];
    return std::find(p.begin(), p.end(), parent) != p.end();
}

std::vector<std::pair<int, int>> TwoSliceDag::edges() const {
    std::vector<std::pair<int, int>> out;
    for (int child = 0; child < node_count(); ++child)
        for (int parent : parents[child]) out.push_back({parent, child});
    return out;
}

std::vector<std::pair<int, int>> TwoSliceDag::within_edges() const {
    std::vector<std::pair<int, int>> out;
    for (int child = base_n; child < 2 * base_n; ++child)
        for (int parent : parents[child])
            if (parent >= base_n) out.push_back({parent - base_n, child - base_n});
    return out;
}

std::vector<std::pair<int, int>> TwoSliceDag::between_edges() const {
    std::vector<std::pair<int, int>> out;
    for (int child = base_n; child < 2 * base_n; ++child)
        for (int parent : parents[child])
            if (parent < base_n) out.push_back({parent, child - base_n});
    return out;
}

std::vector<std::vector<int>> TwoSliceDag::within_adjacency() const {
    std::vector<std::vector<int>> m(base_n, std::vector<int>(base_n, 0));
    for (auto [i, j] : within_edges()) m[i][j] = 1;
    return m;
}

std::vector<std::vector<int>> TwoSliceDag::between_adjacency() const {
    std::vector<std::vector<int>> m(base_n, std::vector<int>(base_n, 0));
    for (auto [i, j] : between_edges()) m[i][j] = 1;
    return m;
}

std::vector<int> TwoSliceDag::topological_order() const {
    int n = node_count();
    std::vector<int> indegree(n, 0);
    std::vector<std::vector<int>> children(n);
    for (int child = 0; child < n; ++child)
        for (int parent : parents[child]) {
            children[parent].push_back(child);
            indegree[child] += 1;
        }
    std::vector<int> ready;
    for (int v = 0; v < n; ++v)
        if (indegree[v] == 0) ready.push_back(v);
    std::vector<int> order;
    while (!ready.empty()) {
        // smallest id first keeps the order deterministic
        auto it = std::min_element(ready.begin(), ready.end());
        int v = *it;
        ready.erase(it);
        order.push_back(v);
        for (int c : children[v])
            if (--indegree[c] == 0) ready.push_back(c);
    }
    if (static_cast<int>(order.size()) != n)
        throw std::runtime_error("TwoSliceDag: graph contains a cycle");
    return order;
}

bool TwoSliceDag::is_acyclic() const {
    try {
        topological_order();
        return true;
    } catch (const std::runtime_error&) {
        return false;
    }
}

TwoSliceDag TwoSliceDag::from_current_families(const Schema& schema,
                                               const std::vector<std::vector<int>>& curr_parents) {
    TwoSliceDag dag;
    dag.schema = schema;
    dag.base_n = static_cast<int>(schema.size());
    dag.parents.assign(2 * dag.base_n, {});
    for (int b = 0; b < dag.base_n; ++b) {
        auto family = curr_parents[b];
        std::sort(family.begin(), family.end());
        dag.parents[dag.base_n + b] = family;
        // replicate within-slice parents into the previous slice
        for (int p : family)
            if (p >= dag.base_n) dag.parents[b].push_back(p - dag.base_n);
        std::sort(dag.parents[b].begin(), dag.parents[b].end());
    }
    return dag;
}

std::string TwoSliceDag::to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = nlohmann::ordered_json::array();
    for (const auto& v : schema) {
        j["schema"].push_back({{"name", v.name},
                               {"layer", v.layer},
                               {"cardinality", v.cardinality},
                               {"kind", v.kind == VarKind::Discrete ? "discrete" : "continuous"},
                               {"replicate_across_weeks", v.replicate_across_weeks}});
    }
    j["within_edges"] = nlohmann::ordered_json::array();
    for (auto [i, k] : within_edges())
        j["within_edges"].push_back({schema[i].name, schema[k].name});
    j["between_edges"] = nlohmann::ordered_json::array();
    for (auto [i, k] : between_edges())
        j["between_edges"].push_back({schema[i].name, schema[k].name});
    return j.dump(2) + "\n";
}

TwoSliceDag TwoSliceDag::from_json(const std::string& text) {
    auto j = nlohmann::ordered_json::parse(text);
    Schema schema;
    for (const auto& v : j.at("schema")) {
        NodeSpec spec;
        spec.name = v.at("name").get<std::string>();
        spec.layer = v.at("layer").get<int>();
        spec.cardinality = v.at("cardinality").get<int>();
        spec.kind = v.at("kind").get<std::string>() == "discrete" ? VarKind::Discrete
                                                                  : VarKind::Continuous;
        spec.replicate_across_weeks = v.value("replicate_across_weeks", false);
        schema.push_back(spec);
    }
    int n = static_cast<int>(schema.size());
    std::vector<std::vector<int>> curr_parents(n);
    for (const auto& e : j.at("within_edges")) {
        int i = schema_index(schema, e.at(0).get<std::string>());
        int k = schema_index(schema, e.at(1).get<std::string>());
        if (i < 0 || k < 0) throw std::runtime_error("TwoSliceDag: unknown node in within_edges");
        curr_parents[k].push_back(n + i);
    }
    for (const auto& e : j.at("between_edges")) {
        int i = schema_index(schema, e.at(0).get<std::string>());
        int k = schema_index(schema, e.at(1).get<std::string>());
        if (i < 0 || k < 0) throw std::runtime_error("TwoSliceDag: unknown node in between_edges");
        curr_parents[k].push_back(i);
    }
    return from_current_families(schema, curr_parents);
}

// ---------------------------------------------------------------------------
// G-squared conditional independence test

G2Result g2_test(const TwoSliceDataset& data, int x, int y, const std::vector<int>& z) {
    if (x == y) throw std::runtime_error("g2_test: x and y must differ");
    for (int v : z)
        if (v == x || v == y) throw std::runtime_error("g2_test: z overlaps x or y");

    int rx = data.cardinality(x);
    int ry = data.cardinality(y);
    long q = 1;
    for (int v : z) q *= data.cardinality(v);

    // counts[stratum][x][y]
    std::vector<long> counts(static_cast<size_t>(q) * rx * ry, 0);
    for (const auto& row : data.rows) {
        long stratum = 0;
        for (int v : z) stratum = stratum * data.cardinality(v) + row[v];
        counts[(static_cast<size_t>(stratum) * rx + row[x]) * ry + row[y]] += 1;
    }

    double g2 = 0.0;
    long dof = 0;
    for (long s = 0; s < q; ++s) {
        const long* cell = &counts[static_cast<size_t>(s) * rx * ry];
        long total = 0;
        std::vector<long> row_sum(rx, 0), col_sum(ry, 0);
        for (int i = 0; i < rx; ++i)
            for (int j = 0; j < ry; ++j) {
                long c = cell[i * ry + j];
                total += c;
                row_sum[i] += c;
                col_sum[j] += c;
            }
        if (total == 0) continue; // unpopulated stratum contributes nothing
        // only levels that occur in the stratum carry freedom; a variable
        // constant within the stratum contributes none
        long live_rows = 0, live_cols = 0;
        for (int i = 0; i < rx; ++i) live_rows += row_sum[i] > 0 ? 1 : 0;
        for (int j = 0; j < ry; ++j) live_cols += col_sum[j] > 0 ? 1 : 0;
        dof += std::max<long>(live_rows - 1, 0) * std::max<long>(live_cols - 1, 0);
        for (int i = 0; i < rx; ++i)
            for (int j = 0; j < ry; ++j) {
                long o = cell[i * ry + j];
                if (o == 0) continue;
                double e = static_cast<double>(row_sum[i]) * col_sum[j] / total;
                g2 += 2.0 * o * std::log(o / e);
            }
    }

    G2Result r;
    if (dof == 0) return r; // uninformative
    r.statistic = std::max(g2, 0.0);
    r.dof = dof;
    r.pvalue = stats::chi2_sf(r.statistic, dof);
    r.informative = true;
    return r;
}

// ---------------------------------------------------------------------------
// MMPC

namespace {

/// p-value with uninformative tests treated as full independence.
double effective_p(const G2Result& r) { return r.informative ? r.pvalue : 1.0; }

/// Enumerates subsets of `pool` with size <= max_size that contain the
/// element at `must_include` (or all such subsets when must_include < 0),
/// invoking fn(subset).
void for_subsets(const std::vector<int>& pool, int max_size, int must_include,
                 const std::function<void(const std::vector<int>&)>& fn) {
    int n = static_cast<int>(pool.size());
    std::vector<int> subset;
    std::function<void(int)> rec = [&](int start) {
        bool ok = must_include < 0 ||
                  std::find(subset.begin(), subset.end(), pool[must_include]) != subset.end();
        if (ok) fn(subset);
        if (static_cast<int>(subset.size()) == max_size) return;
        for (int i = start; i < n; ++i) {
            subset.push_back(pool[i]);
            rec(i + 1);
            subset.pop_back();
        }
    };
    rec(0);
}

/// Candidate parent-children set of one target by the max-min heuristic.
std::vector<int> mmpc_one(const TwoSliceDataset& data, const ConstraintSet& constraints,
                          int target, double alpha, int max_cond) {
    int nn = data.node_count();
    std::vector<int> cpc;

    // max over already-tested subsets of the p-value; the max-min rule picks
    // the candidate whose weakest association is strongest
    std::vector<double> max_p(nn, -1.0);
    std::vector<bool> dropped(nn, true);
    for (int v = 0; v < nn; ++v)
        if (v != target && constraints.pair_testable(v, target)) dropped[v] = false;

    int newest = -1; // index into cpc of the member added last round
    while (true) {
        for (int v = 0; v < nn; ++v) {
            if (dropped[v] || std::find(cpc.begin(), cpc.end(), v) != cpc.end()) continue;
            if (newest < 0) {
                max_p[v] = effective_p(g2_test(data, v, target, {}));
            } else {
                // only subsets containing the newest member are new this round
                for_subsets(cpc, max_cond, newest, [&](const std::vector<int>& s) {
                    if (max_p[v] > alpha) return;
                    max_p[v] = std::max(max_p[v], effective_p(g2_test(data, v, target, s)));
                });
            }
            if (max_p[v] > alpha) dropped[v] = true; // independent; never recovers
        }
        int best = -1;
        for (int v = 0; v < nn; ++v) {
            if (dropped[v] || std::find(cpc.begin(), cpc.end(), v) != cpc.end()) continue;
            if (best < 0 || max_p[v] < max_p[best]) best = v;
        }
        if (best < 0) break;
        cpc.push_back(best);
        newest = static_cast<int>(cpc.size()) - 1;
    }

    // backward: drop members independent of the target given some subset of
    // the other retained members
    for (size_t i = 0; i < cpc.size();) {
        int v = cpc[i];
        std::vector<int> others;
        for (int u : cpc)
            if (u != v) others.push_back(u);
        bool independent = false;
        for_subsets(others, max_cond, -1, [&](const std::vector<int>& s) {
            if (independent) return;
            if (effective_p(g2_test(data, v, target, s)) > alpha) independent = true;
        });
        if (independent)
            cpc.erase(cpc.begin() + i);
        else
            ++i;
    }
    std::sort(cpc.begin(), cpc.end());
    return cpc;
}

} // namespace

std::vector<std::vector<int>> mmpc(const TwoSliceDataset& data, const ConstraintSet& constraints,
                                   double alpha, int max_cond) {
    if (alpha <= 0.0 || alpha >= 1.0) throw std::runtime_error("mmpc: alpha must be in (0, 1)");
    int nn = data.node_count();
    std::vector<std::vector<int>> pc(nn);
    for (int t = 0; t < nn; ++t) pc[t] = mmpc_one(data, constraints, t, alpha, max_cond);

    // symmetry correction: keep v in pc[t] only if t is also in pc[v]
    std::vector<std::vector<int>> out(nn);
    for (int t = 0; t < nn; ++t)
        for (int v : pc[t])
            if (std::find(pc[v].begin(), pc[v].end(), t) != pc[v].end()) out[t].push_back(v);
    return out;
}

// ---------------------------------------------------------------------------
// BDeu

double bdeu_score(const TwoSliceDataset& data, int node, const std::vector<int>& parents,
                  double ess) {
    if (ess <= 0.0) throw std::runtime_error("bdeu_score: ess must be positive");
    int r = data.cardinality(node);
    long q = 1;
    for (int p : parents) q *= data.cardinality(p);

    std::vector<long> njk(static_cast<size_t>(q) * r, 0);
    for (const auto& row : data.rows) {
        long j = 0;
        for (int p : parents) j = j * data.cardinality(p) + row[p];
        njk[static_cast<size_t>(j) * r + row[node]] += 1;
    }

    const double a_jk = ess / (static_cast<double>(r) * q);
    const double a_j = ess / static_cast<double>(q);
    double score = 0.0;
    for (long j = 0; j < q; ++j) {
        long nj = 0;
        for (int k = 0; k < r; ++k) nj += njk[static_cast<size_t>(j) * r + k];
        if (nj == 0) continue; // empty stratum contributes lgamma terms that cancel
        score += std::lgamma(a_j) - std::lgamma(a_j + nj);
        for (int k = 0; k < r; ++k) {
            long n = njk[static_cast<size_t>(j) * r + k];
            if (n == 0) continue;
            score += std::lgamma(a_jk + n) - std::lgamma(a_jk);
        }
    }
    return score;
}

// ---------------------------------------------------------------------------
// Hill climbing

namespace {

enum class MoveKind { Add = 0, Delete = 1, Reverse = 2 };

struct Move {
    MoveKind kind;
    int parent;
    int child;
    double delta;
};

class FamilyScoreCache {
public:
    FamilyScoreCache(const TwoSliceDataset& data, double ess) : data_(data), ess_(ess) {}

    double get(int node, const std::vector<int>& parents) {
        auto key = std::make_pair(node, parents);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        double s = bdeu_score(data_, node, parents, ess_);
        cache_.emplace(std::move(key), s);
        return s;
    }

private:
    const TwoSliceDataset& data_;
    double ess_;
    std::map<std::pair<int, std::vector<int>>, double> cache_;
};

std::vector<int> with_parent(const std::vector<int>& parents, int p) {
    auto out = parents;
    out.insert(std::lower_bound(out.begin(), out.end(), p), p);
    return out;
}

std::vector<int> without_parent(const std::vector<int>& parents, int p) {
    auto out = parents;
    out.erase(std::find(out.begin(), out.end(), p));
    return out;
}

/// Cycle check on the current-slice subgraph after a hypothetical change;
/// cross-slice edges cannot create cycles.
bool acyclic_after(const std::vector<std::vector<int>>& curr_parents, int base_n, int add_parent,
                   int add_child, int del_parent, int del_child) {
    int n = base_n;
    std::vector<std::vector<int>> adj(n);
    for (int b = 0; b < n; ++b)
        for (int p : curr_parents[b]) {
            if (p < base_n) continue;
            if (p == del_parent && base_n + b == del_child) continue;
            adj[p - base_n].push_back(b);
        }
    if (add_parent >= base_n && add_child >= base_n)
        adj[add_parent - base_n].push_back(add_child - base_n);

    std::vector<int> state(n, 0); // 0 new, 1 on stack, 2 done
    std::function<bool(int)> has_cycle = [&](int v) {
        state[v] = 1;
        for (int c : adj[v]) {
            if (state[c] == 1) return true;
            if (state[c] == 0 && has_cycle(c)) return true;
        }
        state[v] = 2;
        return false;
    };
    for (int v = 0; v < n; ++v)
        if (state[v] == 0 && has_cycle(v)) return false;
    return true;
}

bool move_precedes(const Move& a, const Move& b, const TwoSliceDag& names) {
    if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    auto pa = names.node_name(a.parent), pb = names.node_name(b.parent);
    if (pa != pb) return pa < pb;
    return names.node_name(a.child) < names.node_name(b.child);
}

} // namespace

TwoSliceDag hill_climb(const TwoSliceDataset& data,
                       const std::vector<std::vector<int>>& skeleton,
                       const ConstraintSet& constraints, double ess) {
    const int base_n = data.base_n;
    const int nn = data.node_count();
    FamilyScoreCache score(data, ess);

    auto adjacent = [&](int a, int b) {
        return std::find(skeleton[a].begin(), skeleton[a].end(), b) != skeleton[a].end();
    };

    // families of current-slice nodes, indexed by base node
    std::vector<std::vector<int>> curr_parents(base_n);
    TwoSliceDag naming = TwoSliceDag::from_current_families(data.schema, curr_parents);

    const double kMinGain = 1e-9;
    while (true) {
        bool found = false;
        Move best{MoveKind::Add, -1, -1, 0.0};

        auto consider = [&](Move m) {
            if (m.delta <= kMinGain) return;
            if (!found || m.delta > best.delta ||
                (m.delta == best.delta && move_precedes(m, best, naming))) {
                best = m;
                found = true;
            }
        };

        for (int b = 0; b < base_n; ++b) {
            int child = base_n + b;
            const auto& parents = curr_parents[b];
            double base_score = score.get(child, parents);

            // additions
            for (int p = 0; p < nn; ++p) {
                if (p == child) continue;
                if (std::find(parents.begin(), parents.end(), p) != parents.end()) continue;
                if (!constraints.edge_allowed(p, child)) continue;
                if (!adjacent(p, child)) continue;
                if (!acyclic_after(curr_parents, base_n, p, child, -1, -1)) continue;
                double delta = score.get(child, with_parent(parents, p)) - base_score;
                consider({MoveKind::Add, p, child, delta});
            }

            // deletions and reversals of existing edges
            for (int p : parents) {
                double del_delta = score.get(child, without_parent(parents, p)) - base_score;
                consider({MoveKind::Delete, p, child, del_delta});

                if (p >= base_n) {
                    int rb = p - base_n; // reversed edge: child -> p
                    if (!constraints.edge_allowed(child, p)) continue;
                    if (!acyclic_after(curr_parents, base_n, child, p, p, child)) continue;
                    double delta = del_delta + score.get(p, with_parent(curr_parents[rb], child)) -
                                   score.get(p, curr_parents[rb]);
                    consider({MoveKind::Reverse, p, child, delta});
                }
            }
        }

        if (!found) break;
        int cb = best.child - base_n;
        switch (best.kind) {
        case MoveKind::Add:
            curr_parents[cb] = with_parent(curr_parents[cb], best.parent);
            break;
        case MoveKind::Delete:
            curr_parents[cb] = without_parent(curr_parents[cb], best.parent);
            break;
        case MoveKind::Reverse:
            curr_parents[cb] = without_parent(curr_parents[cb], best.parent);
            curr_parents[best.parent - base_n] =
                with_parent(curr_parents[best.parent - base_n], best.child);
            break;
        }
    }
    return TwoSliceDag::from_current_families(data.schema, curr_parents);
}

TwoSliceDag learn_structure(const TwoSliceDataset& data, const ConstraintSet& constraints,
                            const StructureOptions& opts) {
    auto skeleton = mmpc(data, constraints, opts.alpha, opts.max_cond);
    return hill_climb(data, skeleton, constraints, opts.ess);
}

} // namespace dbnlc
