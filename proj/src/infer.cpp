#include "dbnlc/infer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "dbnlc/util/parallel.hpp"
#include "dbnlc/util/rng.hpp"

namespace dbnlc {

// ---------------------------------------------------------------------------
// Table

Table Table::unit(std::vector<int> vars, std::vector<int> cards) {
    Table t;
    t.vars = std::move(vars);
    t.cards = std::move(cards);
    size_t n = 1;
    for (int c : t.cards) n *= static_cast<size_t>(c);
    t.values.assign(n, 1.0);
    return t;
}

namespace {

/// Walks every entry of `big`, exposing the aligned linear index into a
/// table over a subset of big's variables.
template <typename Fn>
void for_aligned(const Table& big, const Table& small, Fn&& fn) {
    size_t nv = big.vars.size();
    std::vector<long> stride(nv, 0);
    long s = 1;
    for (int i = static_cast<int>(small.vars.size()) - 1; i >= 0; --i) {
        auto it = std::find(big.vars.begin(), big.vars.end(), small.vars[i]);
        stride[it - big.vars.begin()] = s;
        s *= small.cards[i];
    }
    std::vector<int> digit(nv, 0);
    long small_idx = 0;
    for (size_t idx = 0; idx < big.values.size(); ++idx) {
        fn(idx, static_cast<size_t>(small_idx));
        for (int d = static_cast<int>(nv) - 1; d >= 0; --d) {
            if (++digit[d] < big.cards[d]) {
                small_idx += stride[d];
                break;
            }
            digit[d] = 0;
            small_idx -= stride[d] * (big.cards[d] - 1);
        }
    }
}

} // namespace

void Table::multiply_in(const Table& other) {
    for_aligned(*this, other,
                [&](size_t big, size_t small) { values[big] *= other.values[small]; });
}

void Table::divide_in(const Table& other) {
    for_aligned(*this, other, [&](size_t big, size_t small) {
        double d = other.values[small];
        values[big] = d == 0.0 ? 0.0 : values[big] / d;
    });
}

Table Table::marginal(const std::vector<int>& keep_vars) const {
    std::vector<int> keep_cards;
    for (int v : keep_vars) {
        auto it = std::find(vars.begin(), vars.end(), v);
        if (it == vars.end()) throw std::runtime_error("Table::marginal: variable not in scope");
        keep_cards.push_back(cards[it - vars.begin()]);
    }
    Table out = Table::unit(keep_vars, keep_cards);
    std::fill(out.values.begin(), out.values.end(), 0.0);
    for_aligned(*this, out, [&](size_t big, size_t small) { out.values[small] += values[big]; });
    return out;
}

void Table::reduce(int var, int state) {
    auto it = std::find(vars.begin(), vars.end(), var);
    if (it == vars.end()) throw std::runtime_error("Table::reduce: variable not in scope");
    size_t pos = it - vars.begin();
    std::vector<int> digit(vars.size(), 0);
    for (size_t idx = 0; idx < values.size(); ++idx) {
        if (digit[pos] != state) values[idx] = 0.0;
        for (int d = static_cast<int>(vars.size()) - 1; d >= 0; --d) {
            if (++digit[d] < cards[d]) break;
            digit[d] = 0;
        }
    }
}

double Table::total() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

// ---------------------------------------------------------------------------
// Junction tree construction

namespace {

struct Net {
    std::vector<int> nodes; // global ids, ascending
    std::vector<int> cards;
    std::vector<std::vector<int>> parents; // global ids
    std::vector<std::string> names;
    const CptSet* cpts;
};

JunctionTree build_over(const Net& net) {
    const int n = static_cast<int>(net.nodes.size());
    std::vector<int> local(net.nodes.empty() ? 0 : net.nodes.back() + 1, -1);
    for (int i = 0; i < n; ++i) local[net.nodes[i]] = i;

    // moral graph: connect each node to its parents and parents pairwise
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    auto connect = [&](int a, int b) {
        if (a == b) return;
        adj[a][b] = adj[b][a] = true;
    };
    for (int i = 0; i < n; ++i) {
        const auto& ps = net.parents[i];
        for (size_t a = 0; a < ps.size(); ++a) {
            connect(i, local[ps[a]]);
            for (size_t b = a + 1; b < ps.size(); ++b) connect(local[ps[a]], local[ps[b]]);
        }
    }

    // min-fill elimination, ties broken by node name
    std::vector<bool> gone(n, false);
    std::vector<std::vector<int>> candidate_cliques;
    auto fill_cost = [&](int v) {
        std::vector<int> nb;
        for (int u = 0; u < n; ++u)
            if (!gone[u] && adj[v][u]) nb.push_back(u);
        int fill = 0;
        for (size_t a = 0; a < nb.size(); ++a)
            for (size_t b = a + 1; b < nb.size(); ++b)
                if (!adj[nb[a]][nb[b]]) ++fill;
        return fill;
    };
    for (int step = 0; step < n; ++step) {
        int best = -1, best_fill = 0;
        for (int v = 0; v < n; ++v) {
            if (gone[v]) continue;
            int f = fill_cost(v);
            if (best < 0 || f < best_fill ||
                (f == best_fill && net.names[v] < net.names[best])) {
                best = v;
                best_fill = f;
            }
        }
        std::vector<int> clique = {best};
        for (int u = 0; u < n; ++u)
            if (!gone[u] && adj[best][u]) clique.push_back(u);
        std::sort(clique.begin(), clique.end());
        candidate_cliques.push_back(clique);
        // complete the eliminated node's neighborhood
        for (size_t a = 0; a < clique.size(); ++a)
            for (size_t b = a + 1; b < clique.size(); ++b)
                if (clique[a] != best && clique[b] != best) connect(clique[a], clique[b]);
        gone[best] = true;
    }

    // keep maximal cliques only, in discovery order
    std::vector<std::vector<int>> cliques;
    for (const auto& c : candidate_cliques) {
        bool contained = false;
        for (const auto& other : candidate_cliques) {
            if (&other == &c || other.size() <= c.size()) continue;
            if (std::includes(other.begin(), other.end(), c.begin(), c.end())) {
                contained = true;
                break;
            }
        }
        if (!contained) {
            if (std::find(cliques.begin(), cliques.end(), c) == cliques.end())
                cliques.push_back(c);
        }
    }

    // maximum-weight spanning tree over separator sizes; zero-weight edges
    // stitch disconnected components into a single tree
    int k = static_cast<int>(cliques.size());
    struct Cand {
        int w, a, b;
    };
    std::vector<Cand> cands;
    for (int a = 0; a < k; ++a)
        for (int b = a + 1; b < k; ++b) {
            std::vector<int> inter;
            std::set_intersection(cliques[a].begin(), cliques[a].end(), cliques[b].begin(),
                                  cliques[b].end(), std::back_inserter(inter));
            cands.push_back({static_cast<int>(inter.size()), a, b});
        }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
        if (x.w != y.w) return x.w > y.w;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });
    std::vector<int> comp(k);
    std::iota(comp.begin(), comp.end(), 0);
    std::function<int(int)> find = [&](int x) { return comp[x] == x ? x : comp[x] = find(comp[x]); };

    JunctionTree jt;
    for (const auto& c : cliques) {
        JunctionTree::Clique cl;
        cl.vars = c;
        jt.cliques.push_back(std::move(cl));
    }
    for (const auto& cand : cands) {
        if (static_cast<int>(jt.separators.size()) == k - 1) break;
        int ra = find(cand.a), rb = find(cand.b);
        if (ra == rb) continue;
        comp[ra] = rb;
        JunctionTree::Separator sep;
        std::set_intersection(cliques[cand.a].begin(), cliques[cand.a].end(),
                              cliques[cand.b].begin(), cliques[cand.b].end(),
                              std::back_inserter(sep.vars));
        sep.a = cand.a;
        sep.b = cand.b;
        jt.separators.push_back(std::move(sep));
    }

    // initialize potentials and assign families
    int total = net.nodes.empty() ? 0 : net.nodes.back() + 1;
    jt.family_clique.assign(total, -1);
    jt.node_clique.assign(total, -1);
    jt.cards.assign(total, 0);
    jt.names.assign(total, "");
    for (int i = 0; i < n; ++i) {
        jt.cards[net.nodes[i]] = net.cards[i];
        jt.names[net.nodes[i]] = net.names[i];
    }
    for (auto& cl : jt.cliques) {
        std::vector<int> global_vars, cards;
        for (int v : cl.vars) {
            global_vars.push_back(net.nodes[v]);
            cards.push_back(net.cards[v]);
        }
        cl.vars = global_vars;
        cl.potential = Table::unit(cl.vars, cards);
    }
    for (auto& sep : jt.separators) {
        std::vector<int> global_vars;
        for (int v : sep.vars) global_vars.push_back(net.nodes[v]);
        sep.vars = global_vars;
    }

    for (int i = 0; i < n; ++i) {
        int node = net.nodes[i];
        std::vector<int> family = {node};
        for (int p : net.parents[i]) family.push_back(p);
        std::sort(family.begin(), family.end());
        int target = -1;
        for (int c = 0; c < k && target < 0; ++c) {
            if (std::includes(jt.cliques[c].vars.begin(), jt.cliques[c].vars.end(), family.begin(),
                              family.end()))
                target = c;
        }
        if (target < 0) throw std::runtime_error("junction tree: family not covered by a clique");
        jt.family_clique[node] = target;
        for (int c = 0; c < k && jt.node_clique[node] < 0; ++c)
            if (std::binary_search(jt.cliques[c].vars.begin(), jt.cliques[c].vars.end(), node))
                jt.node_clique[node] = c;

        // CPT as a factor over the sorted family scope
        const Cpt& cpt = net.cpts->cpts[node];
        std::vector<int> fam_cards;
        for (int v : family) fam_cards.push_back(jt.cards[v]);
        Table f = Table::unit(family, fam_cards);
        std::vector<int> digit(family.size(), 0);
        for (size_t idx = 0; idx < f.values.size(); ++idx) {
            long j = 0;
            for (int p : cpt.parents) {
                size_t pos = std::find(family.begin(), family.end(), p) - family.begin();
                j = j * jt.cards[p] + digit[pos];
            }
            size_t npos = std::find(family.begin(), family.end(), node) - family.begin();
            f.values[idx] = cpt.table[j * cpt.r + digit[npos]];
            for (int d = static_cast<int>(family.size()) - 1; d >= 0; --d) {
                if (++digit[d] < fam_cards[d]) break;
                digit[d] = 0;
            }
        }
        jt.cliques[target].potential.multiply_in(f);
    }
    return jt;
}

Net net_from_dag(const TwoSliceDag& dag, const CptSet& cpts, bool prev_only) {
    Net net;
    int count = prev_only ? dag.base_n : dag.node_count();
    for (int v = 0; v < count; ++v) {
        net.nodes.push_back(v);
        net.cards.push_back(dag.cardinality(v));
        net.parents.push_back(dag.parents[v]);
        net.names.push_back(dag.node_name(v));
    }
    net.cpts = &cpts;
    return net;
}

} // namespace

JunctionTree build_junction_tree(const TwoSliceDag& dag, const CptSet& cpts) {
    if (cpts.cpts.size() != static_cast<size_t>(dag.node_count()))
        throw std::runtime_error("build_junction_tree: CPT set does not match the structure");
    return build_over(net_from_dag(dag, cpts, false));
}

JunctionTree build_junction_tree_prev_slice(const TwoSliceDag& dag, const CptSet& cpts) {
    return build_over(net_from_dag(dag, cpts, true));
}

// ---------------------------------------------------------------------------
// Propagation

PropagateResult propagate(const JunctionTree& jt, const Evidence& evidence) {
    std::vector<Table> belief;
    belief.reserve(jt.cliques.size());
    for (const auto& cl : jt.cliques) belief.push_back(cl.potential);

    for (const auto& [node, state] : evidence) {
        if (node < 0 || node >= static_cast<int>(jt.node_clique.size()) ||
            jt.node_clique[node] < 0)
            throw std::runtime_error("propagate: evidence on unknown node " +
                                     std::to_string(node));
        if (state < 0 || state >= jt.cards[node])
            throw std::runtime_error("propagate: evidence state out of range for " +
                                     jt.names[node]);
        belief[jt.node_clique[node]].reduce(node, state);
    }

    int k = static_cast<int>(jt.cliques.size());
    std::vector<std::vector<std::pair<int, int>>> nb(k); // (clique, separator idx)
    for (size_t s = 0; s < jt.separators.size(); ++s) {
        nb[jt.separators[s].a].push_back({jt.separators[s].b, static_cast<int>(s)});
        nb[jt.separators[s].b].push_back({jt.separators[s].a, static_cast<int>(s)});
    }

    std::vector<Table> sep_msg(jt.separators.size());

    // collect toward clique 0
    std::function<void(int, int)> collect = [&](int c, int from) {
        for (auto [other, s] : nb[c])
            if (other != from) collect(other, c);
        if (from >= 0) {
            int s = -1;
            for (auto [other, si] : nb[c])
                if (other == from) s = si;
            Table msg = belief[c].marginal(jt.separators[s].vars);
            belief[from].multiply_in(msg);
            sep_msg[s] = std::move(msg);
        }
    };
    collect(0, -1);

    double z = belief[0].total();
    if (!(z > 0.0)) throw std::runtime_error("propagate: evidence has probability zero");

    // distribute from clique 0
    std::function<void(int, int)> distribute = [&](int c, int from) {
        for (auto [other, s] : nb[c]) {
            if (other == from) continue;
            Table msg = belief[c].marginal(jt.separators[s].vars);
            msg.divide_in(sep_msg[s]);
            belief[other].multiply_in(msg);
            distribute(other, c);
        }
    };
    distribute(0, -1);

    PropagateResult result;
    result.log_evidence = std::log(z);
    result.marginals.assign(jt.node_clique.size(), {});
    for (size_t node = 0; node < jt.node_clique.size(); ++node) {
        int c = jt.node_clique[node];
        if (c < 0) continue;
        Table m = belief[c].marginal({static_cast<int>(node)});
        double total = m.total();
        std::vector<double> out(m.values.size());
        for (size_t i = 0; i < out.size(); ++i) out[i] = m.values[i] / total;
        result.marginals[node] = std::move(out);
    }
    result.clique_beliefs = std::move(belief);
    return result;
}

// ---------------------------------------------------------------------------
// EM

EmResult em_update(const TwoSliceDag& dag, const CptSet& cpts,
                   const std::vector<PartialRow>& rows, double ess, const EmOptions& opts) {
    const int nn = dag.node_count();
    for (size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<int>(rows[i].size()) != nn)
            throw std::runtime_error("em_update: row " + std::to_string(i) +
                                     " has the wrong width");
        bool any = false;
        for (int v : rows[i]) any = any || v >= 0;
        if (!any)
            throw std::runtime_error("em_update: row " + std::to_string(i) +
                                     " observes no nodes");
    }

    // per-family count table sizes
    std::vector<long> qs(nn);
    std::vector<int> rs(nn);
    for (int v = 0; v < nn; ++v) {
        rs[v] = dag.cardinality(v);
        long q = 1;
        for (int p : dag.parents[v]) q *= dag.cardinality(p);
        qs[v] = q;
    }

    // Guarded ascent: an iteration whose log-likelihood fails to improve by
    // tol is rejected and the previous parameters are returned. The smoothed
    // M step maximizes likelihood plus Dirichlet prior mass, so the plain
    // likelihood can drift down once the data fit has plateaued; stopping at
    // the peak keeps the returned trace non-decreasing.
    EmResult result;
    result.cpts = cpts;
    CptSet previous = cpts;
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        JunctionTree jt = build_junction_tree(dag, result.cpts);

        // E step: per-row expected counts, reduced in row order afterwards
        // so the result does not depend on the worker count
        std::vector<std::vector<std::vector<double>>> row_counts(rows.size());
        std::vector<double> row_ll(rows.size());
        parallel_for(static_cast<int>(rows.size()), opts.workers, [&](int i) {
            Evidence ev;
            for (int v = 0; v < nn; ++v)
                if (rows[i][v] >= 0) ev[v] = rows[i][v];
            PropagateResult prop;
            try {
                prop = propagate(jt, ev);
            } catch (const std::runtime_error& e) {
                throw std::runtime_error("em_update: row " + std::to_string(i) + ": " + e.what());
            }
            row_ll[i] = prop.log_evidence;
            auto& counts = row_counts[i];
            counts.resize(nn);
            for (int v = 0; v < nn; ++v) {
                counts[v].assign(static_cast<size_t>(qs[v]) * rs[v], 0.0);
                std::vector<int> scope = {v};
                for (int p : dag.parents[v]) scope.push_back(p);
                std::sort(scope.begin(), scope.end());
                Table marg = prop.clique_beliefs[jt.family_clique[v]].marginal(scope);
                // normalizing by the marginal's own mass keeps hard counts
                // exactly 1 for fully observed rows
                double z = marg.total();
                std::vector<int> digit(scope.size(), 0);
                for (size_t idx = 0; idx < marg.values.size(); ++idx) {
                    long j = 0;
                    for (int p : dag.parents[v]) {
                        size_t pos = std::find(scope.begin(), scope.end(), p) - scope.begin();
                        j = j * dag.cardinality(p) + digit[pos];
                    }
                    size_t npos = std::find(scope.begin(), scope.end(), v) - scope.begin();
                    counts[v][j * rs[v] + digit[npos]] += marg.values[idx] / z;
                    for (int d = static_cast<int>(scope.size()) - 1; d >= 0; --d) {
                        if (++digit[d] < marg.cards[d]) break;
                        digit[d] = 0;
                    }
                }
            }
        });

        double ll = 0.0;
        for (double v : row_ll) ll += v;
        if (!result.ll_trace.empty() && ll - result.ll_trace.back() < opts.tol) {
            result.cpts = std::move(previous);
            return result;
        }
        result.ll_trace.push_back(ll);
        previous = result.cpts;

        // M step
        std::vector<std::vector<double>> counts(nn);
        for (int v = 0; v < nn; ++v) counts[v].assign(static_cast<size_t>(qs[v]) * rs[v], 0.0);
        for (const auto& rc : row_counts)
            for (int v = 0; v < nn; ++v)
                for (size_t i = 0; i < counts[v].size(); ++i) counts[v][i] += rc[v][i];
        for (int v = 0; v < nn; ++v)
            result.cpts.cpts[v] = cpt_from_counts(v, dag.parents[v], rs[v], qs[v], counts[v], ess);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Sampling

TwoSliceDataset sample(const TwoSliceDag& dag, const CptSet& cpts, int n, uint64_t seed) {
    if (n < 1) throw std::runtime_error("sample: n must be at least 1");
    auto order = dag.topological_order();
    rng::SplitMix64 gen(seed);

    TwoSliceDataset out;
    out.base_n = dag.base_n;
    out.schema = dag.schema;
    out.rows.assign(n, std::vector<int>(dag.node_count(), 0));
    for (int i = 0; i < n; ++i) {
        auto& row = out.rows[i];
        for (int v : order) {
            const Cpt& cpt = cpts.cpts[v];
            long j = 0;
            for (int p : cpt.parents) j = j * dag.cardinality(p) + row[p];
            row[v] = gen.categorical(cpt.row(j));
        }
        out.provenance.push_back({"sample", i + 1});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Forecasting

namespace {

std::vector<int> rating_nodes(const Schema& schema) {
    std::vector<int> out;
    for (size_t i = 0; i < schema.size(); ++i)
        if (schema[i].layer == 3) out.push_back(static_cast<int>(i));
    return out;
}

int posterior_mode(const std::vector<double>& p) {
    int best = 0;
    for (size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[best]) best = static_cast<int>(i);
    return best;
}

} // namespace

ForecastResult forecast(const TwoSliceDag& dag, const CptSet& cpts,
                        const std::vector<int>& prev_slice, const Evidence& curr_partial,
                        const QuantizationMap& qmap, const ForecastOptions& opts) {
    const int n = dag.base_n;
    if (static_cast<int>(prev_slice.size()) != n)
        throw std::runtime_error("forecast: previous slice must observe all " +
                                 std::to_string(n) + " nodes");
    Evidence ev;
    for (int b = 0; b < n; ++b) ev[b] = prev_slice[b];
    for (const auto& [node, state] : curr_partial) {
        if (node < n || node >= 2 * n)
            throw std::runtime_error("forecast: partial evidence must be on the current slice");
        ev[node] = state;
    }
    for (int b = 0; b < n; ++b) {
        if (dag.schema[b].layer > 2) continue;
        if (!ev.count(n + b))
            throw std::runtime_error("forecast: missing required evidence node " +
                                     dag.schema[b].name);
    }

    const CptSet* model = &cpts;
    CptSet refreshed;
    if (opts.em_refresh_iters > 0) {
        PartialRow row(2 * n, -1);
        for (const auto& [node, state] : ev) row[node] = state;
        EmOptions em_opts;
        em_opts.max_iter = opts.em_refresh_iters;
        refreshed = em_update(dag, cpts, {row}, opts.ess, em_opts).cpts;
        model = &refreshed;
    }

    auto jt = build_junction_tree(dag, *model);
    auto prop = propagate(jt, ev);

    ForecastResult out;
    for (int b : rating_nodes(dag.schema)) {
        const auto& post = prop.marginals[n + b];
        const VarQuant* entry = qmap.find(dag.schema[b].name);
        if (!entry)
            throw std::runtime_error("forecast: no quantization entry for " + dag.schema[b].name);
        out.predictions.push_back(dequantize_expectation(post, *entry));
        out.posteriors.push_back(post);
        out.rating_names.push_back(dag.schema[b].name);
    }
    return out;
}

ProfileForecast forecast_profile(const TwoSliceDag& dag, const CptSet& cpts,
                                 const std::vector<double>& personality, double wellbeing,
                                 int horizon, const QuantizationMap& qmap) {
    if (horizon < 1) throw std::runtime_error("forecast_profile: horizon must be at least 1");
    const int n = dag.base_n;

    ProfileForecast out;
    auto quantize_value = [&](const std::string& name, double value) {
        const VarQuant* entry = qmap.find(name);
        if (!entry)
            throw std::runtime_error("forecast_profile: no quantization entry for " + name);
        if (value < entry->lo || value > entry->hi)
            out.warnings.push_back(name + " value " + std::to_string(value) +
                                   " outside the training range; clamped to the nearest bin");
        return entry->bin_of(value);
    };

    // layer-1 evidence on base indices
    Evidence layer1;
    size_t trait = 0;
    for (int b = 0; b < n; ++b) {
        if (dag.schema[b].layer != 1) continue;
        if (dag.schema[b].replicate_across_weeks) {
            if (trait >= personality.size())
                throw std::runtime_error("forecast_profile: profile has too few trait values");
            layer1[b] = quantize_value(dag.schema[b].name, personality[trait++]);
        } else {
            layer1[b] = quantize_value(dag.schema[b].name, wellbeing);
        }
    }
    if (trait != personality.size())
        throw std::runtime_error("forecast_profile: profile has too many trait values");

    auto ratings = rating_nodes(dag.schema);
    for (int b : ratings) out.rating_names.push_back(dag.schema[b].name);

    // step 1: within-slice model over the previous-slice half
    std::vector<int> prev_mode(n, 0);
    {
        auto jt = build_junction_tree_prev_slice(dag, cpts);
        auto prop = propagate(jt, layer1);
        std::vector<double> row;
        for (int b : ratings)
            row.push_back(dequantize_expectation(prop.marginals[b], *qmap.find(dag.schema[b].name)));
        out.ratings.push_back(std::move(row));
        for (int b = 0; b < n; ++b)
            prev_mode[b] = layer1.count(b) ? layer1[b] : posterior_mode(prop.marginals[b]);
    }

    if (horizon == 1) return out;

    auto jt = build_junction_tree(dag, cpts);
    for (int step = 2; step <= horizon; ++step) {
        Evidence ev;
        for (int b = 0; b < n; ++b) ev[b] = prev_mode[b];
        for (const auto& [b, state] : layer1)
            if (dag.schema[b].replicate_across_weeks) ev[n + b] = state;
        auto prop = propagate(jt, ev);
        std::vector<double> row;
        for (int b : ratings)
            row.push_back(
                dequantize_expectation(prop.marginals[n + b], *qmap.find(dag.schema[b].name)));
        out.ratings.push_back(std::move(row));
        for (int b = 0; b < n; ++b)
            prev_mode[b] = ev.count(n + b) ? ev[n + b] : posterior_mode(prop.marginals[n + b]);
    }
    return out;
}

} // namespace dbnlc
