#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbnlc/core.hpp"

namespace dbnlc {

/// Replaces every missing cell with the mean of the subject's k temporally
/// nearest observed values of the same variable (distance |week delta|,
/// ties toward the earlier week). Observed cells are never touched, so the
/// operation is idempotent.
LongitudinalDataset knn_impute(const LongitudinalDataset& data, int k);

// ---------------------------------------------------------------------------
// Facial action-unit summary features

inline constexpr int kAuCount = 18;
inline constexpr int kAuFeatureDim = kAuCount * 4; // mean, max, min, std per AU

/// OpenFace AU order used for frame files and feature vectors.
std::span<const std::string> au_names();

enum class SubSession { Meditation, Interaction };

std::string sub_session_tag(SubSession s); // "med" / "int"

struct AuFeatureVector {
    std::string subject;
    int week = 0;
    SubSession sub_session = SubSession::Meditation;
    std::array<double, kAuFeatureDim> values{};
};

/// Per-AU (mean, max, min, population std) after gating: intensities at or
/// below 1 do not count as a present AU and are zeroed before summarizing.
std::array<double, kAuFeatureDim> summarize_aus(
    const std::vector<std::array<double, kAuCount>>& frames);

/// Reads one per-frame intensity file (columns: frame, AU01..AU45).
std::vector<std::array<double, kAuCount>> load_au_frames(const std::string& path);

// ---------------------------------------------------------------------------
// Gaussian mixture clustering of feature vectors

struct GmmModel {
    int k = 0;
    std::vector<double> weights;
    std::vector<std::vector<double>> means;     // k x d, in standardized space
    std::vector<std::vector<double>> variances; // k x d, diagonal
    std::vector<double> standardize_mean;       // per input dimension
    std::vector<double> standardize_scale;

    int dim() const { return static_cast<int>(standardize_mean.size()); }
    /// Normalized component responsibilities for one raw-space point.
    std::vector<double> responsibilities(std::span<const double> x) const;
};

struct GmmOptions {
    int restarts = 10;
    int max_iter = 200;
    double tol = 1e-6;
    double variance_floor = 1e-6;
    int workers = 1;
};

struct GmmFit {
    GmmModel model;
    double loglik = 0.0;
    std::vector<double> ll_trace; // of the winning restart
    std::vector<std::string> warnings;
};

/// Diagonal-covariance EM from k-means++ starts; returns the best of
/// `restarts` runs by log-likelihood (ties to the lowest restart index).
GmmFit fit_gmm(const std::vector<std::vector<double>>& features, int k, uint64_t seed,
               const GmmOptions& opts = {});

struct KSelection {
    int best_k = 0;
    std::vector<int> ks;
    std::vector<double> bic;
    std::vector<double> aic;
    std::vector<GmmFit> fits; // aligned with ks
};

/// Fits every K in [k_min, k_max] and picks the BIC minimizer (ties to the
/// smaller K). BIC = -2 logL + p ln n, AIC = -2 logL + 2p with
/// p = (K - 1) + 2 K d.
KSelection select_k(const std::vector<std::vector<double>>& features, int k_min, int k_max,
                    uint64_t seed, const GmmOptions& opts = {});

/// Hard cluster labels in 1..K (argmax responsibility, ties to the lower
/// component index).
std::vector<int> assign_states(const GmmModel& model,
                               const std::vector<std::vector<double>>& features);

// ---------------------------------------------------------------------------
// Feature tables over (subject, week)

/// One sub-session's feature vectors arranged per (subject, week), with
/// missing sessions imputed elementwise by the same temporal knn rule.
struct AuFeatureTable {
    std::vector<std::string> subjects;
    int weeks = 0;
    // subject-major, then week; missing until imputed
    std::vector<std::optional<std::array<double, kAuFeatureDim>>> cells;

    std::optional<std::array<double, kAuFeatureDim>>& cell(int subject, int week);
    const std::optional<std::array<double, kAuFeatureDim>>& cell(int subject, int week) const;
};

AuFeatureTable build_feature_table(const std::vector<AuFeatureVector>& features,
                                   SubSession sub_session,
                                   const std::vector<std::string>& subjects, int weeks);

/// Temporal knn over each feature dimension; errors when a subject has
/// fewer than k observed sessions.
AuFeatureTable impute_feature_table(const AuFeatureTable& table, int k);

} // namespace dbnlc
