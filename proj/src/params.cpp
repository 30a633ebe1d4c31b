#include "dbnlc/params.hpp"

#include <stdexcept>

#include "json.hpp"

namespace dbnlc {


Cpt cpt_from_counts(int node, const std::vector<int>& parents, int r, long q,
                    std::span<const double> counts, double ess) {
    if (ess <= 0.0) throw std::runtime_error("cpt_from_counts: ess must be positive");
    Cpt cpt;
    cpt.node = node;
    cpt.parents = parents;
    cpt.r = r;
    cpt.q = q;
    cpt.table.resize(static_cast<size_t>(q) * r);
    const double a_jk = ess / (static_cast<double>(r) * q);
    const double a_j = ess / static_cast<double>(q);
    for (long j = 0; j < q; ++j) {
        double nj = 0.0;
        for (int k = 0; k < r; ++k) nj += counts[j * r + k];
        for (int k = 0; k < r; ++k)
            cpt.table[j * r + k] = (counts[j * r + k] + a_jk) / (nj + a_j);
    }
    return cpt;
}

CptSet fit_map(const TwoSliceDataset& data, const TwoSliceDag& dag, double ess) {
    if (data.base_n != dag.base_n)
        throw std::runtime_error("fit_map: dataset and structure disagree on node count");
    CptSet set;
    for (int node = 0; node < dag.node_count(); ++node) {
        const auto& parents = dag.parents[node];
        int r = dag.cardinality(node);
        long q = 1;
        for (int p : parents) q *= dag.cardinality(p);
        std::vector<double> counts(static_cast<size_t>(q) * r, 0.0);
        for (const auto& row : data.rows) {
            long j = 0;
            for (int p : parents) j = j * dag.cardinality(p) + row[p];
            counts[static_cast<size_t>(j) * r + row[node]] += 1.0;
        }
        set.cpts.push_back(cpt_from_counts(node, parents, r, q, counts, ess));
    }
    return set;
}

std::string cpts_to_json(const TwoSliceDag& dag, const CptSet& cpts, double ess) {
    nlohmann::ordered_json j;
    j["structure"] = nlohmann::ordered_json::parse(dag.to_json());
    j["ess"] = ess;
    // rows are indexed with the first listed parent most significant
    j["parent_tuple_order"] = "first-parent-major";
    j["cpts"] = nlohmann::ordered_json::array();
    for (const auto& cpt : cpts.cpts) {
        nlohmann::ordered_json entry;
        entry["node"] = dag.node_name(cpt.node);
        auto parents = nlohmann::ordered_json::array();
        for (int p : cpt.parents) parents.push_back(dag.node_name(p));
        entry["parents"] = parents;
        entry["states"] = cpt.r;
        entry["table"] = cpt.table;
        j["cpts"].push_back(entry);
    }
    return j.dump(2) + "\n";
}

std::pair<TwoSliceDag, CptSet> cpts_from_json(const std::string& text) {
    auto j = nlohmann::ordered_json::parse(text);
    TwoSliceDag dag = TwoSliceDag::from_json(j.at("structure").dump());

    auto node_id = [&](const std::string& name) {
        for (int v = 0; v < dag.node_count(); ++v)
            if (dag.node_name(v) == name) return v;
        throw std::runtime_error("cpts_from_json: unknown node " + name);
    };

    CptSet set;
    set.cpts.resize(dag.node_count());
    for (const auto& entry : j.at("cpts")) {
        Cpt cpt;
        cpt.node = node_id(entry.at("node").get<std::string>());
        for (const auto& p : entry.at("parents")) cpt.parents.push_back(node_id(p.get<std::string>()));
        cpt.r = entry.at("states").get<int>();
        cpt.table = entry.at("table").get<std::vector<double>>();
        cpt.q = cpt.r > 0 ? static_cast<long>(cpt.table.size()) / cpt.r : 1;
        if (cpt.parents != dag.parents[cpt.node])
            throw std::runtime_error("cpts_from_json: parents of " +
                                     entry.at("node").get<std::string>() +
                                     " disagree with the structure");
        set.cpts[cpt.node] = std::move(cpt);
    }
    return {std::move(dag), std::move(set)};
}

} // namespace dbnlc
