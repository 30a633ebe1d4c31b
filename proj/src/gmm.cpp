#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "dbnlc/preprocess.hpp"
#include "dbnlc/util/parallel.hpp"
#include "dbnlc/util/rng.hpp"
#include "dbnlc/util/stats.hpp"

namespace dbnlc {

namespace {

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;
    std::vector<std::string> warnings;
};

Standardizer standardize_params(const std::vector<std::vector<double>>& x) {
    size_t n = x.size(), d = x[0].size();
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    for (const auto& row : x)
        for (size_t j = 0; j < d; ++j) s.mean[j] += row[j];
    for (size_t j = 0; j < d; ++j) s.mean[j] /= static_cast<double>(n);
    for (size_t j = 0; j < d; ++j) {
        double ss = 0.0;
        for (const auto& row : x) ss += (row[j] - s.mean[j]) * (row[j] - s.mean[j]);
        double sd = std::sqrt(ss / static_cast<double>(n));
        if (sd > 0.0)
            s.scale[j] = sd;
        else
            s.warnings.push_back("dimension " + std::to_string(j) +
                                 " has zero variance; standardized with scale 1");
    }
    return s;
}

std::vector<std::vector<double>> apply_standardizer(const Standardizer& s,
                                                    const std::vector<std::vector<double>>& x) {
    std::vector<std::vector<double>> z(x.size(), std::vector<double>(s.mean.size()));
    for (size_t i = 0; i < x.size(); ++i)
        for (size_t j = 0; j < s.mean.size(); ++j)
            z[i][j] = (x[i][j] - s.mean[j]) / s.scale[j];
    return z;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return s;
}

std::vector<int> kmeanspp_centers(const std::vector<std::vector<double>>& z, int k,
                                  rng::SplitMix64& gen) {
    size_t n = z.size();
    std::vector<int> centers;
    centers.push_back(static_cast<int>(gen.below(n)));
    std::vector<double> d2(n);
    while (static_cast<int>(centers.size()) < k) {
        for (size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (int c : centers) best = std::min(best, sq_dist(z[i], z[c]));
            d2[i] = best;
        }
        double total = 0.0;
        for (double v : d2) total += v;
        int chosen;
        if (total <= 0.0) {
            chosen = static_cast<int>(gen.below(n)); // all points coincide with centers
        } else {
            chosen = gen.categorical(d2);
        }
        centers.push_back(chosen);
    }
    return centers;
}

// log N(z; mu, diag(var)) for standardized input
double log_gauss_diag(std::span<const double> z, std::span<const double> mu,
                      std::span<const double> var) {
    double lp = 0.0;
    for (size_t j = 0; j < z.size(); ++j) {
        double diff = z[j] - mu[j];
        lp += -0.5 * (std::log(2.0 * std::numbers::pi * var[j]) + diff * diff / var[j]);
    }
    return lp;
}

struct EmRun {
    GmmModel model;
    double loglik = -std::numeric_limits<double>::infinity();
    std::vector<double> trace;
};

EmRun run_em(const std::vector<std::vector<double>>& z, int k, uint64_t seed,
             const GmmOptions& opts) {
    size_t n = z.size(), d = z[0].size();
    rng::SplitMix64 gen(seed);

    GmmModel m;
    m.k = k;
    m.weights.assign(k, 1.0 / k);
    m.means.assign(k, std::vector<double>(d, 0.0));
    m.variances.assign(k, std::vector<double>(d, 1.0));

    auto centers = kmeanspp_centers(z, k, gen);
    for (int c = 0; c < k; ++c) m.means[c] = z[centers[c]];

    // initial hard assignment to nearest center
    {
        std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
        std::vector<std::vector<double>> sqs(k, std::vector<double>(d, 0.0));
        std::vector<double> counts(k, 0.0);
        for (size_t i = 0; i < n; ++i) {
            int best = 0;
            double bd = sq_dist(z[i], m.means[0]);
            for (int c = 1; c < k; ++c) {
                double dist = sq_dist(z[i], m.means[c]);
                if (dist < bd) {
                    bd = dist;
                    best = c;
                }
            }
            counts[best] += 1.0;
            for (size_t j = 0; j < d; ++j) {
                sums[best][j] += z[i][j];
                sqs[best][j] += z[i][j] * z[i][j];
            }
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0.0) {
                m.weights[c] = counts[c] / static_cast<double>(n);
                for (size_t j = 0; j < d; ++j) {
                    m.means[c][j] = sums[c][j] / counts[c];
                    double var = sqs[c][j] / counts[c] - m.means[c][j] * m.means[c][j];
                    m.variances[c][j] = std::max(var, opts.variance_floor);
                }
            } else {
                m.weights[c] = 1e-12;
                for (size_t j = 0; j < d; ++j) m.variances[c][j] = opts.variance_floor;
            }
        }
        double wsum = 0.0;
        for (double w : m.weights) wsum += w;
        for (double& w : m.weights) w /= wsum;
    }

    EmRun run;
    std::vector<std::vector<double>> resp(n, std::vector<double>(k));
    std::vector<double> logp(k);
    std::vector<double> lognorm(k);
    std::vector<std::vector<double>> half_prec(k, std::vector<double>(d));
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        // E step; the normalizer of each component is constant per iteration
        for (int c = 0; c < k; ++c) {
            lognorm[c] = m.weights[c] > 0.0 ? std::log(m.weights[c])
                                            : -std::numeric_limits<double>::infinity();
            for (size_t j = 0; j < d; ++j) {
                lognorm[c] += -0.5 * std::log(2.0 * std::numbers::pi * m.variances[c][j]);
                half_prec[c][j] = 0.5 / m.variances[c][j];
            }
        }
        double ll = 0.0;
        for (size_t i = 0; i < n; ++i) {
            for (int c = 0; c < k; ++c) {
                double quad = 0.0;
                for (size_t j = 0; j < d; ++j) {
                    double diff = z[i][j] - m.means[c][j];
                    quad += diff * diff * half_prec[c][j];
                }
                logp[c] = lognorm[c] - quad;
            }
            double lse = stats::log_sum_exp(logp);
            ll += lse;
            for (int c = 0; c < k; ++c) resp[i][c] = std::exp(logp[c] - lse);
        }
        run.trace.push_back(ll);
        run.loglik = ll;
        if (iter > 0 && ll - prev_ll < opts.tol) break;
        prev_ll = ll;

        // M step (variance floor keeps the parameter set feasible, which
        // preserves the EM monotonicity guarantee)
        for (int c = 0; c < k; ++c) {
            double nc = 0.0;
            for (size_t i = 0; i < n; ++i) nc += resp[i][c];
            if (nc < 1e-12) {
                m.weights[c] = 0.0;
                continue;
            }
            m.weights[c] = nc / static_cast<double>(n);
            for (size_t j = 0; j < d; ++j) {
                double mu = 0.0;
                for (size_t i = 0; i < n; ++i) mu += resp[i][c] * z[i][j];
                mu /= nc;
                double var = 0.0;
                for (size_t i = 0; i < n; ++i)
                    var += resp[i][c] * (z[i][j] - mu) * (z[i][j] - mu);
                var /= nc;
                m.means[c][j] = mu;
                m.variances[c][j] = std::max(var, opts.variance_floor);
            }
        }
    }
    run.model = std::move(m);
    return run;
}

} // namespace

std::vector<double> GmmModel::responsibilities(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim())
        throw std::runtime_error("GmmModel: point has dimension " + std::to_string(x.size()) +
                                 ", model expects " + std::to_string(dim()));
    std::vector<double> z(x.size());
    for (size_t j = 0; j < x.size(); ++j)
        z[j] = (x[j] - standardize_mean[j]) / standardize_scale[j];
    std::vector<double> logp(k);
    for (int c = 0; c < k; ++c)
        logp[c] = (weights[c] > 0.0 ? std::log(weights[c])
                                    : -std::numeric_limits<double>::infinity()) +
                  log_gauss_diag(z, means[c], variances[c]);
    double lse = stats::log_sum_exp(logp);
    std::vector<double> r(k);
    for (int c = 0; c < k; ++c) r[c] = std::exp(logp[c] - lse);
    return r;
}


GmmFit fit_gmm(const std::vector<std::vector<double>>& features, int k, uint64_t seed,
               const GmmOptions& opts) {
    if (k < 1) throw std::runtime_error("fit_gmm: k must be at least 1");
    if (features.empty() || static_cast<int>(features.size()) < k)
        throw std::runtime_error("fit_gmm: need at least k=" + std::to_string(k) + " points, got " +
                                 std::to_string(features.size()));
    auto st = standardize_params(features);
    auto z = apply_standardizer(st, features);

    std::vector<EmRun> runs(opts.restarts);
    parallel_for(opts.restarts, opts.workers, [&](int r) {
        runs[r] = run_em(z, k, rng::derive(seed, static_cast<uint64_t>(k), r), opts);
    });

    int best = 0;
    for (int r = 1; r < opts.restarts; ++r)
        if (runs[r].loglik > runs[best].loglik) best = r;

    GmmFit fit;
    fit.model = std::move(runs[best].model);
    fit.model.standardize_mean = st.mean;
    fit.model.standardize_scale = st.scale;
    fit.loglik = runs[best].loglik;
    fit.ll_trace = std::move(runs[best].trace);
    fit.warnings = st.warnings;
    return fit;
}

KSelection select_k(const std::vector<std::vector<double>>& features, int k_min, int k_max,
                    uint64_t seed, const GmmOptions& opts) {
    if (k_min < 1 || k_min > k_max)
        throw std::runtime_error("select_k: invalid K range [" + std::to_string(k_min) + ", " +
                                 std::to_string(k_max) + "]");
    if (k_max > static_cast<int>(features.size()))
        throw std::runtime_error("select_k: k_max exceeds the number of points");
    size_t n = features.size();
    size_t d = features[0].size();

    KSelection sel;
    int count = k_max - k_min + 1;
    sel.ks.resize(count);
    sel.bic.resize(count);
    sel.aic.resize(count);
    sel.fits.resize(count);
    GmmOptions inner = opts;
    inner.workers = 1; // parallelism across K values instead
    parallel_for(count, opts.workers, [&](int i) {
        int k = k_min + i;
        sel.ks[i] = k;
        sel.fits[i] = fit_gmm(features, k, seed, inner);
        double p = (k - 1) + 2.0 * k * static_cast<double>(d);
        sel.bic[i] = -2.0 * sel.fits[i].loglik + p * std::log(static_cast<double>(n));
        sel.aic[i] = -2.0 * sel.fits[i].loglik + 2.0 * p;
    });
    int best = 0;
    for (int i = 1; i < count; ++i)
        if (sel.bic[i] < sel.bic[best]) best = i;
    sel.best_k = sel.ks[best];
    return sel;
}

std::vector<int> assign_states(const GmmModel& model,
                               const std::vector<std::vector<double>>& features) {
    std::vector<int> labels(features.size());
    for (size_t i = 0; i < features.size(); ++i) {
        auto r = model.responsibilities(features[i]);
        int best = 0;
        for (int c = 1; c < model.k; ++c)
            if (r[c] > r[best]) best = c;
        labels[i] = best + 1;
    }
    return labels;
}

} // namespace dbnlc
