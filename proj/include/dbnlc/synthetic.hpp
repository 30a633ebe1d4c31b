#pragma once

#include <cstdint>
#include <string>

#include "dbnlc/infer.hpp"
#include "dbnlc/params.hpp"

namespace dbnlc {

/// Hand-built two-slice ground truth over the study schema: strong, sparse
/// dependencies honoring the layer rules. Used for recovery benchmarks and
/// to generate the bundled dataset.
struct GroundTruth {
    TwoSliceDag dag;
    CptSet cpts;
};

GroundTruth make_ground_truth();

struct SyntheticOptions {
    int subjects = 9;
    int weeks = 5;
    uint64_t seed = 11;
    /// (subject index, week) sessions that were skipped: the questionnaire
    /// row and the AU frame files are absent.
    std::vector<std::pair<int, int>> missed_sessions = {{3, 2}, {8, 5}};
};

/// Writes questionnaire.csv and au_frames/<subject>_w<week>_{med,int}.csv
/// under `dir`, generated by rolling the ground truth forward and emitting
/// continuous values and per-frame AU intensities.
void write_synthetic_dataset(const std::string& dir, const SyntheticOptions& opts = {});

} // namespace dbnlc
