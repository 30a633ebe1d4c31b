#include "dbnlc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>

#include "dbnlc/preprocess.hpp"
#include "dbnlc/util/csv.hpp"
#include "dbnlc/util/rng.hpp"

namespace dbnlc {

namespace {

namespace fs = std::filesystem;

/// CPT whose rows peak at a state chosen from the parent configuration.
Cpt build_cpt(const TwoSliceDag& dag, int node,
              const std::function<int(const std::map<int, int>&)>& peak_of, double peak_mass) {
    const auto& parents = dag.parents[node];
    int r = dag.cardinality(node);
    long q = 1;
    for (int p : parents) q *= dag.cardinality(p);

    Cpt cpt;
    cpt.node = node;
    cpt.parents = parents;
    cpt.r = r;
    cpt.q = q;
    cpt.table.resize(static_cast<size_t>(q) * r);
    std::map<int, int> states;
    std::vector<int> digit(parents.size(), 0);
    for (long j = 0; j < q; ++j) {
        for (size_t i = 0; i < parents.size(); ++i) states[parents[i]] = digit[i];
        int peak = peak_of(states);
        double rest = (1.0 - peak_mass) / (r - 1);
        for (int k = 0; k < r; ++k) cpt.table[j * r + k] = k == peak ? peak_mass : rest;
        for (int d = static_cast<int>(parents.size()) - 1; d >= 0; --d) {
            if (++digit[d] < dag.cardinality(parents[d])) break;
            digit[d] = 0;
        }
    }
    return cpt;
}

Cpt build_marginal(const TwoSliceDag& dag, int node, int rotate) {
    int r = dag.cardinality(node);
    Cpt cpt;
    cpt.node = node;
    cpt.r = r;
    cpt.q = 1;
    // mildly uneven, rotated per node so roots are not identical
    std::vector<double> base =
        r == 3 ? std::vector<double>{0.42, 0.33, 0.25} : std::vector<double>{0.34, 0.27, 0.22, 0.17};
    for (int k = 0; k < r; ++k) cpt.table.push_back(base[(k + rotate) % r]);
    return cpt;
}

/// Scales a parent state to the child's range.
int rescale(int state, int from_card, int to_card) {
    if (from_card == 1) return 0;
    double t = static_cast<double>(state) / (from_card - 1);
    return static_cast<int>(std::lround(t * (to_card - 1)));
}

} // namespace

GroundTruth make_ground_truth() {
    Schema schema = default_study_schema();
    const int n = static_cast<int>(schema.size());
    auto id = [&](const char* name) { return schema_index(schema, name); };
    auto curr = [&](const char* name) { return n + id(name); };

    std::vector<std::vector<int>> families(n);
    auto family = [&](const char* child, std::vector<int> parents) {
        families[id(child)] = std::move(parents);
    };
    family("WB", {id("WB")});
    family("AU_med", {id("Sens")});
    family("AU_int", {id("AU_int")});
    family("Anth", {curr("Ani"), id("Anth")});
    family("Like", {curr("Open")});
    family("PerInt", {id("Neur")});
    family("RM", {curr("Agr"), id("RM")});
    family("Conv", {curr("AU_med"), id("Consc")});
    family("Sens", {curr("Consc")});
    family("DeltaRC", {curr("WB")});

    GroundTruth gt;
    gt.dag = TwoSliceDag::from_current_families(schema, families);
    gt.cpts.cpts.resize(gt.dag.node_count());

    for (int v = 0; v < gt.dag.node_count(); ++v) {
        const auto& parents = gt.dag.parents[v];
        int r = gt.dag.cardinality(v);
        if (parents.empty()) {
            gt.cpts.cpts[v] = build_marginal(gt.dag, v, v % r);
        } else if (parents.size() == 1) {
            int p = parents[0];
            int pc = gt.dag.cardinality(p);
            gt.cpts.cpts[v] = build_cpt(
                gt.dag, v,
                [&, p, pc, r](const std::map<int, int>& s) { return rescale(s.at(p), pc, r); },
                0.75);
        } else {
            int p0 = parents[0], p1 = parents[1];
            int c0 = gt.dag.cardinality(p0), c1 = gt.dag.cardinality(p1);
            gt.cpts.cpts[v] = build_cpt(
                gt.dag, v,
                [&, p0, p1, c0, c1, r](const std::map<int, int>& s) {
                    double t = 0.5 * (static_cast<double>(s.at(p0)) / (c0 - 1) +
                                      static_cast<double>(s.at(p1)) / (c1 - 1));
                    return static_cast<int>(std::lround(t * (r - 1)));
                },
                0.7);
        }
    }
    return gt;
}

namespace {

struct Emitter {
    rng::SplitMix64& gen;

    double continuous_value(const std::string& name, int level) {
        if (name == "DeltaRC") {
            static const double anchors[3] = {0.25, 1.0, 1.75};
            return anchors[level] + (gen.uniform() * 2.0 - 1.0) * 0.3;
        }
        static const double anchors[3] = {1.7, 3.0, 4.3};
        return anchors[level] + (gen.uniform() * 2.0 - 1.0) * 0.5;
    }

    void write_frames(const std::string& path, int state) {
        struct Regime {
            std::vector<int> active;
            double base;
        };
        static const Regime regimes[4] = {{{0, 1, 3}, 2.0},
                                          {{4, 5, 8, 9}, 3.0},
                                          {{2, 6, 12, 16}, 2.6},
                                          {{10, 14, 15, 17}, 3.9}};
        const Regime& reg = regimes[state];
        int frames = 50 + static_cast<int>(gen.below(40));
        csv::Csv out;
        out.header = {"frame"};
        for (const auto& au : au_names()) out.header.push_back(au);
        for (int f = 0; f < frames; ++f) {
            std::vector<std::string> row = {std::to_string(f + 1)};
            for (int a = 0; a < kAuCount; ++a) {
                bool active = std::find(reg.active.begin(), reg.active.end(), a) != reg.active.end();
                double v;
                if (active) {
                    v = reg.base + (gen.uniform() * 2.0 - 1.0) * 0.6;
                    v = std::clamp(v, 1.1, 5.0);
                } else {
                    v = gen.uniform() * 0.9; // below the presence gate
                }
                row.push_back(csv::format_double(v, 3));
            }
            out.rows.push_back(std::move(row));
        }
        csv::write_file(path, out);
    }
};

} // namespace

void write_synthetic_dataset(const std::string& dir, const SyntheticOptions& opts) {
    GroundTruth gt = make_ground_truth();
    const Schema& schema = gt.dag.schema;
    const int n = gt.dag.base_n;
    rng::SplitMix64 gen(opts.seed);
    Emitter emit{gen};

    fs::create_directories(fs::path(dir) / "au_frames");

    auto missed = [&](int subject, int week) {
        for (auto [s, w] : opts.missed_sessions)
            if (s == subject && w == week) return true;
        return false;
    };

    auto prev_order = [&] {
        // previous-slice half is ancestrally closed; order its nodes only
        std::vector<int> order;
        for (int v : gt.dag.topological_order())
            if (v < n) order.push_back(v);
        return order;
    }();
    auto full_order = gt.dag.topological_order();

    csv::Csv questionnaire;
    questionnaire.header = {"subject", "week"};
    for (const auto& spec : schema)
        if (spec.kind == VarKind::Continuous) questionnaire.header.push_back(spec.name);

    for (int s = 0; s < opts.subjects; ++s) {
        std::string id = "S" + std::to_string(s + 1);

        // week 1 from the within-slice half
        std::vector<int> slice(n, 0);
        for (int v : prev_order) {
            const Cpt& cpt = gt.cpts.cpts[v];
            long j = 0;
            for (int p : cpt.parents) j = j * gt.dag.cardinality(p) + slice[p];
            slice[v] = gen.categorical(cpt.row(j));
        }

        std::vector<int> trait_state(n, -1);
        std::vector<double> trait_value(n, 0.0);
        for (int v = 0; v < n; ++v) {
            if (!schema[v].replicate_across_weeks) continue;
            trait_state[v] = slice[v];
            trait_value[v] = emit.continuous_value(schema[v].name, slice[v]);
        }

        for (int week = 1; week <= opts.weeks; ++week) {
            if (week > 1) {
                std::vector<int> states(2 * n, 0);
                for (int v = 0; v < n; ++v) states[v] = slice[v];
                for (int v : full_order) {
                    if (v < n) continue;
                    const Cpt& cpt = gt.cpts.cpts[v];
                    long j = 0;
                    for (int p : cpt.parents) j = j * gt.dag.cardinality(p) + states[p];
                    states[v] = gen.categorical(cpt.row(j));
                }
                for (int v = 0; v < n; ++v)
                    slice[v] = trait_state[v] >= 0 ? trait_state[v] : states[n + v];
            }

            if (missed(s, week)) continue;

            std::vector<std::string> row = {id, std::to_string(week)};
            for (int v = 0; v < n; ++v) {
                if (schema[v].kind != VarKind::Continuous) continue;
                double value = trait_state[v] >= 0
                                   ? trait_value[v]
                                   : emit.continuous_value(schema[v].name, slice[v]);
                row.push_back(csv::format_double(value, 4));
            }
            questionnaire.rows.push_back(std::move(row));

            auto frame_path = [&](const char* tag) {
                return (fs::path(dir) / "au_frames" / (id + "_w" + std::to_string(week) + "_" +
                                                       tag + ".csv"))
                    .string();
            };
            emit.write_frames(frame_path("med"), slice[schema_index(schema, "AU_med")]);
            emit.write_frames(frame_path("int"), slice[schema_index(schema, "AU_int")]);
        }
    }
    csv::write_file((fs::path(dir) / "questionnaire.csv").string(), questionnaire);
}

} // namespace dbnlc
