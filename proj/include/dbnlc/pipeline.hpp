#pragma once

#include <map>
#include <string>
#include <vector>

#include "dbnlc/core.hpp"
#include "dbnlc/structure.hpp"

namespace dbnlc {

struct ExperimentConfig {
    Schema schema = default_study_schema();
    std::string questionnaire_csv;
    std::string au_frames_dir;

    int impute_k = 2;
    int gmm_k_min = 2;
    int gmm_k_max = 8;
    int gmm_restarts = 10;
    double alpha = 0.05;
    int max_cond = 3;
    double ess = 1.0;
    double em_tol = 1e-6;
    int em_max_iter = 100;

    std::vector<int> train_weeks;    // must be 1..k, k >= 2
    std::vector<int> forecast_weeks; // after the training weeks

    std::string out_dir = "out";
    uint64_t seed = 0;
    int workers = 1;

    /// Parses the JSON config; relative paths resolve against the config
    /// file's directory. Defaults match the values documented in README.
    static ExperimentConfig load(const std::string& path);
    void validate() const;
};

struct Manifest {
    // artifact file name -> sha256 of its content
    std::map<std::string, std::string> artifacts;
    std::string to_json() const;
};

// Stage functions; each reads its inputs from the config and any artifacts
// earlier stages left in out_dir, and returns the files it wrote.
std::vector<std::string> stage_impute(const ExperimentConfig& cfg);
std::vector<std::string> stage_cluster(const ExperimentConfig& cfg);
std::vector<std::string> stage_discretize(const ExperimentConfig& cfg);
std::vector<std::string> stage_learn(const ExperimentConfig& cfg);
std::vector<std::string> stage_fit(const ExperimentConfig& cfg);
std::vector<std::string> stage_forecast(const ExperimentConfig& cfg);
std::vector<std::string> stage_evaluate(const ExperimentConfig& cfg);
std::vector<std::string> stage_export(const ExperimentConfig& cfg);

/// Runs every stage in order and writes manifest.json. Any failure removes
/// the files created by this run before rethrowing.
Manifest run_pipeline(const ExperimentConfig& cfg);

/// DOT rendering with previous-slice nodes styled distinctly and
/// between-slice edges dashed; byte-deterministic.
std::string export_dot(const TwoSliceDag& dag);

} // namespace dbnlc
