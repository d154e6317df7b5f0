#pragma once

#include "rss/clustering.hpp"
#include "rss/data_model.hpp"
#include "rss/solvers.hpp"
#include "rss/subsampling.hpp"

#include <filesystem>
#include <vector>

namespace rss {

/// Averaged problem for one draw: column k of Xr is the mean of the drawn
/// voxels col_map[k] over the drawn rows.
struct ReducedProblem {
    Matrix Xr;
    std::vector<std::vector<Index>> col_map;
    std::vector<int> yr;
};

/// Per-voxel selection frequencies. scores[i] = selected[i] / max(included[i], 1).
struct ScoreMap {
    Vector scores;
    std::vector<Index> included;
    std::vector<Index> selected;
    int draws = 0;
    /// Draws whose solver stopped at max_iters.
    int nonconverged = 0;
    /// Set when more than 10% of draws did not converge.
    bool flagged = false;

    Index size() const { return included.size(); }
    void validate() const;
    friend bool operator==(const ScoreMap&, const ScoreMap&) = default;
};

enum class SelectRule { nonzero, top_k };

struct RSSConfig {
    SubsampleConfig subsample;
    /// Shared by every penalized fit. standardize applies to the L1 fits only.
    SolverConfig solver{.standardize = true};
    /// Per-draw alpha as a fraction of the reduced problem's alpha_max.
    double alpha_fraction = 0.1;
    SelectRule select_rule = SelectRule::nonzero;
    int top_k = 1;
    /// |w| at or below this counts as zero.
    double magnitude_floor = 1e-8;
    unsigned threads = 1;

    void validate() const;
};

ReducedProblem build_reduced_problem(const Dataset& dataset, const SubsampleDraw& draw);

/// Indices of the reduced weights that pass the selection rule.
std::vector<Index> select_columns(const Vector& w, const RSSConfig& cfg);

/// Stability selection over constrained block draws with super-voxel averaging.
ScoreMap rss_run(const Dataset& dataset, const Clustering& clustering, const RSSConfig& cfg);

/// Same loop with uniform voxel dropout and no averaging.
ScoreMap randomized_l1_run(const Dataset& dataset, const RSSConfig& cfg);

/// `RSSSCORE 1 <p>` header then p lines `score included selected`.
void write_score_map(const ScoreMap& s, const std::filesystem::path& path);
ScoreMap read_score_map(const std::filesystem::path& path);

}  // namespace rss
