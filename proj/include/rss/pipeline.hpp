#pragma once

#include "rss/analysis.hpp"
#include "rss/clustering.hpp"
#include "rss/config.hpp"
#include "rss/engine.hpp"
#include "rss/synthgen.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rss {

enum class Method { rss, randomized_l1, l1, l2_logistic, l2_svm, ttest };

const std::vector<Method>& all_methods();
std::string method_name(Method m);
Method parse_method(const std::string& name);

enum class ThresholdRule { laplace, gap };

/// Everything needed to turn one center's data into a support.
struct PipelineConfig {
    Method method = Method::rss;
    int q = 200;
    RSSConfig rss;
    double p0 = 0.975;
    LaplaceMode laplace_mode = LaplaceMode::moment;
    ThresholdRule threshold_rule = ThresholdRule::laplace;
    /// alpha for the single-solve L1 baseline, as a fraction of alpha_max.
    double l1_alpha_fraction = 0.1;
    double l2_alpha = 1.0;
    double svm_alpha = 1.0;
    double ttest_level = 0.05;
    /// Iteration cap for the single full-data solves, which face far worse
    /// conditioning than the small per-draw problems.
    int baseline_max_iters = 20000;
    std::uint64_t seed = 0;

    void validate() const;
};

struct MethodResult {
    /// Scores for stability methods, weights for single solves, t for the t test.
    Vector values;
    SupportSet support;
    double theta = 0.0;
    bool flagged = false;
    std::optional<ScoreMap> scores;
};

/// Laplace quantile (clamped at 0) or gap cut, per cfg.threshold_rule.
double choose_threshold(const Vector& values, const PipelineConfig& cfg);

/// `clustering` is required for Method::rss and ignored otherwise.
MethodResult run_method(const Dataset& dataset, const PipelineConfig& cfg, const Clustering* clustering = nullptr);

struct FalsePositiveResult {
    double ratio = 0.0;
    /// Selected voxels inside the reference support, per permutation.
    std::vector<Index> inside;
    /// Total selected voxels, per permutation.
    std::vector<Index> null_sizes;
};

/// Reruns the pipeline on label-permuted copies of `dataset` and measures how
/// much of `final_support` the null runs reproduce.
FalsePositiveResult estimate_false_positives(const Dataset& dataset, const PipelineConfig& cfg,
                                             const Clustering* clustering, const SupportSet& final_support, int n_perm,
                                             std::uint64_t seed);
/// Same, with caller-supplied permutations.
FalsePositiveResult estimate_false_positives(const Dataset& dataset, const PipelineConfig& cfg,
                                             const Clustering* clustering, const SupportSet& final_support,
                                             const std::vector<std::vector<Index>>& permutations);

/// k-means over the dataset's voxel profiles with cfg.q and cfg.seed.
Clustering cluster_for(const Dataset& dataset, const PipelineConfig& cfg);

struct MethodComparison {
    Method method = Method::rss;
    std::vector<MethodResult> per_center;
    std::vector<SupportSet> supports;
    OverlapResult overlap;
    bool flagged = false;
};

/// Every method on every center, plus the overlap of each method's supports.
/// `clusterings` holds one entry per center (needed only for Method::rss).
std::vector<MethodComparison> compare_methods(const CenterCollection& centers, const std::vector<Clustering>& clusterings,
                                              const PipelineConfig& base, const std::vector<Method>& methods);

SynthConfig synth_config_from(const Config& c);
PipelineConfig pipeline_config_from(const Config& c);
PredictionConfig prediction_config_from(const Config& c);

}  // namespace rss
