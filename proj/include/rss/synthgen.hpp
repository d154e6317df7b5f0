#pragma once

#include "rss/data_model.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace rss {

/// Axis-aligned box of voxels: corner plus edge lengths.
struct Box {
    Coord corner;
    std::array<int, 3> edges{1, 1, 1};
};

/// Multi-center generator settings. Every center shares one full-grid mask.
/// Support columns get class means +effect_size / -effect_size, every column
/// gets N(0, noise_sigma^2) noise, and each center then applies a per-column
/// gain ~ U[lo, hi] and offset ~ N(0, center_shift_sigma^2).
struct SynthConfig {
    std::array<int, 3> dims{20, 20, 20};
    int n_centers = 4;
    int n_per_center = 60;
    std::vector<Box> true_clusters;
    double effect_size = 2.0;
    double noise_sigma = 1.0;
    std::array<double, 2> center_scale_range{1.0, 1.0};
    double center_shift_sigma = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GroundTruth {
    SupportSet true_support;
    Vector true_w;
};

struct SynthOutput {
    CenterCollection centers;
    GroundTruth truth;
};

SynthOutput generate_multicenter(const SynthConfig& cfg);

struct SupportScore {
    double precision = 1.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Precision/recall/F1 against the planted support. An empty estimate has
/// precision 1 and recall 0.
SupportScore score_support(const SupportSet& est, const GroundTruth& truth);

/// `RSSGT 1 <p>` header then support indices, one per line.
void write_ground_truth(const GroundTruth& gt, const std::filesystem::path& path);
GroundTruth read_ground_truth(const std::filesystem::path& path, double effect_size = 1.0);

/// Center ids produced by the generator: center00, center01, ...
std::string center_name(int c);

}  // namespace rss
