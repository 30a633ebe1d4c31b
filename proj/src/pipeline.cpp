#include "dbnlc/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dbnlc/eval.hpp"
#include "dbnlc/infer.hpp"
#include "dbnlc/params.hpp"
#include "dbnlc/preprocess.hpp"
#include "dbnlc/util/csv.hpp"
#include "dbnlc/util/errors.hpp"
#include "dbnlc/util/parallel.hpp"
#include "dbnlc/util/rng.hpp"
#include "dbnlc/util/sha256.hpp"
#include "json.hpp"

namespace dbnlc {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

namespace {

std::string resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    if (path.is_absolute()) return path.string();
    return (base / path).lexically_normal().string();
}

Schema schema_from_json(const nlohmann::json& j) {
    Schema schema;
    for (const auto& v : j) {
        NodeSpec spec;
        spec.name = v.at("name").get<std::string>();
        spec.layer = v.at("layer").get<int>();
        spec.cardinality = v.at("cardinality").get<int>();
        spec.kind = v.value("kind", "continuous") == "discrete" ? VarKind::Discrete
                                                                : VarKind::Continuous;
        spec.replicate_across_weeks = v.value("replicate_across_weeks", false);
        schema.push_back(spec);
    }
    return schema;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

} // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(path));
    } catch (const std::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    fs::path base = fs::path(path).parent_path();

    ExperimentConfig cfg;
    try {
        if (j.contains("schema")) cfg.schema = schema_from_json(j.at("schema"));
        cfg.questionnaire_csv = resolve(base, j.at("questionnaire_csv").get<std::string>());
        cfg.au_frames_dir = resolve(base, j.at("au_frames_dir").get<std::string>());
        cfg.impute_k = j.value("impute_k", cfg.impute_k);
        if (j.contains("gmm")) {
            const auto& g = j.at("gmm");
            cfg.gmm_k_min = g.value("k_min", cfg.gmm_k_min);
            cfg.gmm_k_max = g.value("k_max", cfg.gmm_k_max);
            cfg.gmm_restarts = g.value("restarts", cfg.gmm_restarts);
        }
        cfg.alpha = j.value("alpha", cfg.alpha);
        cfg.max_cond = j.value("max_cond", cfg.max_cond);
        cfg.ess = j.value("ess", cfg.ess);
        if (j.contains("em")) {
            const auto& e = j.at("em");
            cfg.em_tol = e.value("tol", cfg.em_tol);
            cfg.em_max_iter = e.value("max_iter", cfg.em_max_iter);
        }
        cfg.train_weeks = j.at("train_weeks").get<std::vector<int>>();
        cfg.forecast_weeks = j.at("forecast_weeks").get<std::vector<int>>();
        if (j.contains("out_dir")) cfg.out_dir = resolve(base, j.at("out_dir").get<std::string>());
        cfg.seed = j.value("seed", cfg.seed);
        cfg.workers = j.value("workers", cfg.workers);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const {
    if (schema.empty()) throw ConfigError("schema is empty");
    for (const auto& v : schema) {
        if (v.cardinality < 2) throw ConfigError("node " + v.name + ": cardinality must be >= 2");
        if (v.layer < 1 || v.layer > 3)
            throw ConfigError("node " + v.name + ": layer must be 1, 2 or 3");
    }
    if (train_weeks.size() < 2) throw ConfigError("need at least 2 training weeks");
    for (size_t i = 0; i < train_weeks.size(); ++i)
        if (train_weeks[i] != static_cast<int>(i) + 1)
            throw ConfigError("training weeks must be contiguous starting at week 1");
    int last_train = train_weeks.back();
    if (forecast_weeks.empty()) throw ConfigError("no forecast weeks given");
    for (int w : forecast_weeks)
        if (w <= last_train)
            throw ConfigError("forecast week " + std::to_string(w) +
                              " overlaps the training weeks");
    if (impute_k < 1) throw ConfigError("impute_k must be >= 1");
    if (gmm_k_min < 1 || gmm_k_min > gmm_k_max) throw ConfigError("invalid gmm K range");
    if (alpha <= 0.0 || alpha >= 1.0) throw ConfigError("alpha must be in (0, 1)");
    if (ess <= 0.0) throw ConfigError("ess must be positive");
    if (workers < 1) throw ConfigError("workers must be >= 1");
}

// ---------------------------------------------------------------------------
// Shared stage helpers

namespace {

Schema continuous_schema(const Schema& schema) {
    Schema out;
    for (const auto& v : schema)
        if (v.kind == VarKind::Continuous) out.push_back(v);
    return out;
}

fs::path out_path(const ExperimentConfig& cfg, const std::string& name) {
    return fs::path(cfg.out_dir) / name;
}

void ensure_out_dir(const ExperimentConfig& cfg) { fs::create_directories(cfg.out_dir); }

std::string require_artifact(const ExperimentConfig& cfg, const std::string& name,
                             const std::string& producing_stage) {
    auto p = out_path(cfg, name);
    if (!fs::exists(p))
        throw std::runtime_error(name + " not found in " + cfg.out_dir + "; run the '" +
                                 producing_stage + "' stage first");
    return p.string();
}

/// Schema with AU-state cardinalities replaced by the selected cluster
/// counts.
Schema patched_schema(const ExperimentConfig& cfg) {
    Schema schema = cfg.schema;
    auto text = read_text(require_artifact(cfg, "au_clusters.json", "cluster"));
    auto j = nlohmann::json::parse(text);
    for (auto& v : schema)
        if (j.contains(v.name)) v.cardinality = j.at(v.name).get<int>();
    return schema;
}

struct StatesFile {
    std::vector<std::string> names; // discrete AU-state variables
    std::map<std::pair<std::string, int>, std::vector<int>> values;
};

StatesFile read_states(const ExperimentConfig& cfg) {
    auto table = csv::read_file(require_artifact(cfg, "au_states.csv", "cluster"));
    StatesFile out;
    for (size_t i = 2; i < table.header.size(); ++i) out.names.push_back(table.header[i]);
    for (const auto& row : table.rows) {
        std::vector<int> states;
        for (size_t i = 2; i < table.header.size(); ++i) states.push_back(std::stoi(row[i]));
        out.values[{row[0], std::stoi(row[1])}] = states;
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// Stages

std::vector<std::string> stage_impute(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    auto data = load_dataset(cfg.questionnaire_csv, continuous_schema(cfg.schema));
    auto imputed = knn_impute(data, cfg.impute_k);
    auto path = out_path(cfg, "imputed.csv").string();
    save_dataset(path, imputed);
    return {path};
}

std::vector<std::string> stage_cluster(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    if (!fs::is_directory(cfg.au_frames_dir))
        throw std::runtime_error("AU frames directory does not exist: " + cfg.au_frames_dir);

    // subjects and weeks come from the questionnaire file
    auto data = load_dataset(cfg.questionnaire_csv, continuous_schema(cfg.schema));

    std::vector<int> au_nodes;
    for (size_t v = 0; v < cfg.schema.size(); ++v)
        if (cfg.schema[v].kind == VarKind::Discrete && cfg.schema[v].layer == 2)
            au_nodes.push_back(static_cast<int>(v));
    if (au_nodes.size() != 2)
        throw std::runtime_error("expected two discrete layer-2 AU-state nodes in the schema");

    csv::Csv states_csv;
    states_csv.header = {"subject", "week"};
    std::map<std::pair<std::string, int>, std::vector<int>> states;
    nlohmann::ordered_json clusters;
    csv::Csv curves;
    curves.header = {"node", "K", "bic", "aic"};

    for (size_t a = 0; a < au_nodes.size(); ++a) {
        SubSession sub = a == 0 ? SubSession::Meditation : SubSession::Interaction;
        const std::string& node_name = cfg.schema[au_nodes[a]].name;
        states_csv.header.push_back(node_name);

        std::vector<AuFeatureVector> features;
        for (size_t s = 0; s < data.subjects.size(); ++s) {
            for (int w = 1; w <= data.weeks; ++w) {
                fs::path file = fs::path(cfg.au_frames_dir) /
                                (data.subjects[s] + "_w" + std::to_string(w) + "_" +
                                 sub_session_tag(sub) + ".csv");
                if (!fs::exists(file)) continue; // missed session, imputed below
                AuFeatureVector f;
                f.subject = data.subjects[s];
                f.week = w;
                f.sub_session = sub;
                f.values = summarize_aus(load_au_frames(file.string()));
                features.push_back(std::move(f));
            }
        }
        if (features.empty())
            throw std::runtime_error("no AU frame files found for sub-session " +
                                     sub_session_tag(sub));

        auto table = build_feature_table(features, sub, data.subjects, data.weeks);
        table = impute_feature_table(table, cfg.impute_k);

        std::vector<std::vector<double>> rows;
        std::vector<std::pair<std::string, int>> keys;
        for (size_t s = 0; s < data.subjects.size(); ++s)
            for (int w = 1; w <= data.weeks; ++w) {
                const auto& cell = table.cell(static_cast<int>(s), w);
                rows.push_back(std::vector<double>(cell->begin(), cell->end()));
                keys.push_back({data.subjects[s], w});
            }

        GmmOptions opts;
        opts.restarts = cfg.gmm_restarts;
        opts.workers = cfg.workers;
        int k_max = std::min(cfg.gmm_k_max, static_cast<int>(rows.size()));
        auto sel = select_k(rows, cfg.gmm_k_min, k_max, rng::derive(cfg.seed, 100 + a), opts);
        for (size_t i = 0; i < sel.ks.size(); ++i)
            curves.rows.push_back({node_name, std::to_string(sel.ks[i]),
                                   csv::format_double(sel.bic[i], 4),
                                   csv::format_double(sel.aic[i], 4)});
        clusters[node_name] = sel.best_k;

        const auto& fit = sel.fits[sel.best_k - sel.ks.front()];
        auto labels = assign_states(fit.model, rows);
        for (size_t i = 0; i < keys.size(); ++i) states[keys[i]].push_back(labels[i]);
    }

    for (size_t s = 0; s < data.subjects.size(); ++s)
        for (int w = 1; w <= data.weeks; ++w) {
            std::vector<std::string> row = {data.subjects[s], std::to_string(w)};
            for (int st : states[{data.subjects[s], w}]) row.push_back(std::to_string(st));
            states_csv.rows.push_back(std::move(row));
        }

    auto states_path = out_path(cfg, "au_states.csv").string();
    auto curves_path = out_path(cfg, "bic_aic.csv").string();
    auto clusters_path = out_path(cfg, "au_clusters.json").string();
    csv::write_file(states_path, states_csv);
    csv::write_file(curves_path, curves);
    write_text(clusters_path, clusters.dump(2) + "\n");
    return {states_path, curves_path, clusters_path};
}

std::vector<std::string> stage_discretize(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    Schema schema = patched_schema(cfg);
    auto imputed =
        load_dataset(require_artifact(cfg, "imputed.csv", "impute"), continuous_schema(schema));
    auto states = read_states(cfg);

    auto full = LongitudinalDataset::empty(imputed.subjects, imputed.weeks, schema);
    for (size_t s = 0; s < full.subjects.size(); ++s) {
        for (int w = 1; w <= full.weeks; ++w) {
            auto it = states.values.find({full.subjects[s], w});
            for (size_t v = 0; v < schema.size(); ++v) {
                if (schema[v].kind == VarKind::Continuous) {
                    int src = schema_index(imputed.variables, schema[v].name);
                    full.cell(static_cast<int>(s), w, static_cast<int>(v)) =
                        imputed.cell(static_cast<int>(s), w, src);
                } else {
                    if (it == states.values.end())
                        throw std::runtime_error("no AU states for subject " + full.subjects[s] +
                                                 ", week " + std::to_string(w));
                    auto pos = std::find(states.names.begin(), states.names.end(), schema[v].name);
                    if (pos == states.names.end())
                        throw std::runtime_error("au_states.csv lacks column " + schema[v].name);
                    full.cell(static_cast<int>(s), w, static_cast<int>(v)) =
                        it->second[pos - states.names.begin()];
                }
            }
        }
    }

    auto [discrete, qmap] = quantize(full);
    auto discrete_path = out_path(cfg, "discrete.csv").string();
    auto qmap_path = out_path(cfg, "quantization_map.json").string();
    save_dataset(discrete_path, discrete);
    write_text(qmap_path, qmap.to_json());
    return {discrete_path, qmap_path};
}

namespace {

std::vector<std::string> write_structure_exports(const ExperimentConfig& cfg,
                                                 const TwoSliceDag& dag) {
    auto dot_path = out_path(cfg, "structure.dot").string();
    auto within_path = out_path(cfg, "within_adjacency.csv").string();
    auto between_path = out_path(cfg, "between_adjacency.csv").string();
    write_text(dot_path, export_dot(dag));

    auto write_matrix = [&](const std::string& path, const std::vector<std::vector<int>>& m) {
        csv::Csv out;
        out.header = {"node"};
        for (const auto& v : dag.schema) out.header.push_back(v.name);
        for (int i = 0; i < dag.base_n; ++i) {
            std::vector<std::string> row = {dag.schema[i].name};
            for (int j = 0; j < dag.base_n; ++j) row.push_back(std::to_string(m[i][j]));
            out.rows.push_back(std::move(row));
        }
        csv::write_file(path, out);
    };
    write_matrix(within_path, dag.within_adjacency());
    write_matrix(between_path, dag.between_adjacency());
    return {dot_path, within_path, between_path};
}

TwoSliceDataset load_training_rows(const ExperimentConfig& cfg, const Schema& schema) {
    auto discrete = load_dataset(require_artifact(cfg, "discrete.csv", "discretize"), schema);
    return unroll_two_slice(discrete, cfg.train_weeks.back());
}

} // namespace

std::vector<std::string> stage_learn(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    Schema schema = patched_schema(cfg);
    auto rows = load_training_rows(cfg, schema);
    StructureOptions opts;
    opts.alpha = cfg.alpha;
    opts.max_cond = cfg.max_cond;
    opts.ess = cfg.ess;
    auto dag = learn_structure(rows, ConstraintSet::for_schema(schema), opts);

    auto structure_path = out_path(cfg, "structure.json").string();
    write_text(structure_path, dag.to_json());
    auto files = write_structure_exports(cfg, dag);
    files.insert(files.begin(), structure_path);
    return files;
}

std::vector<std::string> stage_fit(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    auto dag = TwoSliceDag::from_json(read_text(require_artifact(cfg, "structure.json", "learn")));
    auto rows = load_training_rows(cfg, dag.schema);
    auto cpts = fit_map(rows, dag, cfg.ess);
    auto model_path = out_path(cfg, "model.json").string();
    write_text(model_path, cpts_to_json(dag, cpts, cfg.ess));
    return {model_path};
}

std::vector<std::string> stage_forecast(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    auto [dag, cpts] = cpts_from_json(read_text(require_artifact(cfg, "model.json", "fit")));
    auto qmap = QuantizationMap::from_json(
        read_text(require_artifact(cfg, "quantization_map.json", "discretize")));
    auto discrete =
        load_dataset(require_artifact(cfg, "discrete.csv", "discretize"), dag.schema);
    auto raw = load_dataset(cfg.questionnaire_csv, continuous_schema(cfg.schema));

    const int n = dag.base_n;
    std::vector<int> rating_nodes;
    for (int v = 0; v < n; ++v)
        if (dag.schema[v].layer == 3) rating_nodes.push_back(v);

    struct Job {
        std::string subject;
        int week;
        std::vector<double> predictions;
    };
    std::vector<Job> jobs;
    for (const auto& subject : discrete.subjects)
        for (int w : cfg.forecast_weeks) {
            if (w < 2 || w > discrete.weeks)
                throw std::runtime_error("forecast week " + std::to_string(w) +
                                         " outside the dataset");
            jobs.push_back({subject, w, {}});
        }

    parallel_for(static_cast<int>(jobs.size()), cfg.workers, [&](int i) {
        auto& job = jobs[i];
        int s = discrete.subject_index(job.subject);
        std::vector<int> prev(n);
        Evidence curr;
        for (int v = 0; v < n; ++v) {
            prev[v] = static_cast<int>(*discrete.cell(s, job.week - 1, v)) - 1;
            if (dag.schema[v].layer <= 2)
                curr[n + v] = static_cast<int>(*discrete.cell(s, job.week, v)) - 1;
        }
        job.predictions = forecast(dag, cpts, prev, curr, qmap).predictions;
    });

    csv::Csv out;
    out.header = {"subject", "week"};
    for (int v : rating_nodes) out.header.push_back("pred_" + dag.schema[v].name);
    for (int v : rating_nodes) out.header.push_back("actual_" + dag.schema[v].name);
    for (const auto& job : jobs) {
        std::vector<std::string> row = {job.subject, std::to_string(job.week)};
        for (double p : job.predictions) row.push_back(csv::format_double(p, 4));
        int rs = raw.subject_index(job.subject);
        for (int v : rating_nodes) {
            // the raw panel can end before the forecast horizon
            if (job.week > raw.weeks) {
                row.push_back("");
                continue;
            }
            int src = schema_index(raw.variables, dag.schema[v].name);
            const auto& cell = raw.cell(rs, job.week, src);
            row.push_back(cell ? csv::format_double(*cell, 4) : "");
        }
        out.rows.push_back(std::move(row));
    }
    auto path = out_path(cfg, "forecast.csv").string();
    csv::write_file(path, out);
    return {path};
}

std::vector<std::string> stage_evaluate(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    auto table = csv::read_file(require_artifact(cfg, "forecast.csv", "forecast"));
    std::vector<std::string> names;
    for (const auto& h : table.header)
        if (h.rfind("pred_", 0) == 0) names.push_back(h.substr(5));

    std::vector<PredictedRow> preds;
    std::vector<ActualRow> actuals;
    for (const auto& row : table.rows) {
        PredictedRow p;
        p.subject = row[0];
        p.week = std::stoi(row[1]);
        ActualRow a;
        a.subject = p.subject;
        a.week = p.week;
        for (size_t i = 0; i < names.size(); ++i) {
            p.values.push_back(std::stod(row[2 + i]));
            const std::string& cell = row[2 + names.size() + i];
            a.values.push_back(cell.empty() ? std::optional<double>{} : std::stod(cell));
        }
        preds.push_back(std::move(p));
        actuals.push_back(std::move(a));
    }

    auto report = build_report(preds, actuals, names);
    auto csv_path = out_path(cfg, "report.csv").string();
    auto text_path = out_path(cfg, "report.txt").string();
    write_text(csv_path, report_to_csv(report));
    write_text(text_path, report_to_text(report));
    return {csv_path, text_path};
}

std::vector<std::string> stage_export(const ExperimentConfig& cfg) {
    ensure_out_dir(cfg);
    auto dag = TwoSliceDag::from_json(read_text(require_artifact(cfg, "structure.json", "learn")));
    return write_structure_exports(cfg, dag);
}

// ---------------------------------------------------------------------------
// run + manifest

std::string Manifest::to_json() const {
    nlohmann::ordered_json j;
    for (const auto& [name, hash] : artifacts) j[name] = hash;
    return j.dump(2) + "\n";
}

Manifest run_pipeline(const ExperimentConfig& cfg) {
    cfg.validate();
    struct Stage {
        const char* name;
        std::vector<std::string> (*fn)(const ExperimentConfig&);
    };
    const Stage stages[] = {
        {"impute", stage_impute},     {"cluster", stage_cluster},
        {"discretize", stage_discretize}, {"learn", stage_learn},
        {"fit", stage_fit},           {"forecast", stage_forecast},
        {"evaluate", stage_evaluate},
    };

    std::vector<std::string> written;
    Manifest manifest;
    try {
        for (const auto& stage : stages) {
            std::vector<std::string> files;
            try {
                files = stage.fn(cfg);
            } catch (const std::exception& e) {
                throw StageError(stage.name, e.what());
            }
            for (const auto& f : files) written.push_back(f);
        }
    } catch (...) {
        for (const auto& f : written) {
            std::error_code ec;
            fs::remove(f, ec);
        }
        throw;
    }

    for (const auto& f : written)
        manifest.artifacts[fs::path(f).filename().string()] = sha256_file(f);
    write_text(out_path(cfg, "manifest.json").string(), manifest.to_json());
    return manifest;
}

// ---------------------------------------------------------------------------
// DOT export

std::string export_dot(const TwoSliceDag& dag) {
    std::ostringstream out;
    out << "digraph two_slice_dbn {\n";
    out << "  rankdir=LR;\n";
    out << "  node [shape=ellipse, style=filled];\n";
    const int n = dag.base_n;
    for (int v = 0; v < n; ++v)
        out << "  \"" << dag.node_name(v) << "\" [label=\"" << dag.schema[v].name
            << " (t-1)\", fillcolor=\"#f4cccc\"];\n";
    for (int v = 0; v < n; ++v)
        out << "  \"" << dag.node_name(n + v) << "\" [label=\"" << dag.schema[v].name
            << " (t)\", fillcolor=\"#cfe2f3\"];\n";
    for (auto [i, j] : dag.within_edges())
        out << "  \"" << dag.node_name(i) << "\" -> \"" << dag.node_name(j) << "\";\n";
    for (auto [i, j] : dag.within_edges())
        out << "  \"" << dag.node_name(n + i) << "\" -> \"" << dag.node_name(n + j) << "\";\n";
    for (auto [i, j] : dag.between_edges())
        out << "  \"" << dag.node_name(i) << "\" -> \"" << dag.node_name(n + j)
            << "\" [style=dashed];\n";
    out << "}\n";
    return out.str();
}

} // namespace dbnlc
