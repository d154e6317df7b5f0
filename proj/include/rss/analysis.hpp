#pragma once

#include "rss/data_model.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace rss {

enum class LaplaceMode { moment, mle };

struct LaplaceFit {
    double mu = 0.0;
    double b = 1.0;
};

/// moment: mu = mean, b = sqrt(population variance / 2).
/// mle: mu = median, b = mean |v - mu|.
LaplaceFit fit_laplace(const Vector& values, LaplaceMode mode = LaplaceMode::moment);
double laplace_cdf(double x, const LaplaceFit& fit);
double laplace_icdf(double p0, const LaplaceFit& fit);

/// Indices with |values_i| > theta.
SupportSet threshold_support(const Vector& values, double theta);

/// Cut at the largest ratio between consecutive sorted magnitudes, searched
/// over the first half of the nonzero entries; returns the geometric mean of
/// the two magnitudes at the cut. The first maximizer wins ties.
double gap_threshold(const Vector& values);

struct OverlapResult {
    /// How many supports contain each voxel.
    std::vector<int> counts;
    /// Voxels selected by at least S supports, for every S in [1, m].
    std::map<int, SupportSet> support_at;
    int S = 1;

    const SupportSet& at_least() const { return support_at.at(S); }
};

OverlapResult overlap(const std::vector<SupportSet>& supports, int S);

struct PredictionConfig {
    int n_splits = 100;
    double train_fraction = 0.9;
    std::vector<double> alpha_grid{1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
    int cv_folds = 3;
    double solver_tol = 1e-6;
    int solver_max_iters = 2000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

struct PredictionResult {
    double mean_acc = 0.0;
    double std_acc = 0.0;
    std::vector<double> accuracies;
};

/// Pools every center, keeps the support columns, and scores an L2 logistic
/// classifier over random train/test splits. alpha per split comes from
/// k-fold cross-validation on the training rows.
PredictionResult evaluate_prediction(const CenterCollection& pooled, const SupportSet& support,
                                     const PredictionConfig& cfg);

/// Uniform random support of the given size.
SupportSet random_support(Index p, Index size, std::uint64_t seed);

}  // namespace rss
