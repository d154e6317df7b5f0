#pragma once

#include "rss/clustering.hpp"
#include "rss/data_model.hpp"
#include "rss/random.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace rss {

struct SubsampleConfig {
    double row_rate = 0.5;
    double voxel_rate = 0.1;
    int block_edge = 5;
    int draws = 200;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One resample: chosen rows plus the chosen voxels of every cluster.
struct SubsampleDraw {
    std::vector<Index> rows;
    /// per_cluster[g] is the sorted subset of cluster g drawn this time.
    std::vector<std::vector<Index>> per_cluster;
    /// Voxels that came from the uniform fallback instead of a block. The
    /// tiled sampler always meets its quota from blocks, so this stays 0.
    Index fallback_voxels = 0;

    Index voxel_count() const;
    friend bool operator==(const SubsampleDraw&, const SubsampleDraw&) = default;
};

/// ceil(rate * size), at least 1 for a nonempty cluster.
Index cluster_quota(double rate, Index size);

/// Class-stratified rows without replacement: round(rate * n) rows in total,
/// split across classes by largest remainder with at least one row per class.
std::vector<Index> draw_rows(std::span<const int> y, double row_rate, Rng& rng);

/// Cuts each cluster into pieces with a randomly shifted grid of cubes, lays
/// the pieces end to end in random order and takes a cyclic run of quota
/// voxels from a uniform start. Every member is drawn with probability
/// exactly quota/|g|. Built once per (mask, clustering) pair and reused for
/// every draw.
class BlockSampler {
public:
    BlockSampler(const VoxelMask& mask, const Clustering& clustering);

    struct Result {
        std::vector<std::vector<Index>> per_cluster;
        Index fallback_voxels = 0;
        /// Voxels contributed by each placed cube, in placement order.
        std::vector<std::vector<Index>> blocks;
    };

    Result draw(double voxel_rate, int block_edge, Rng& rng) const;

private:
    void fill_cluster(int g, Index quota, int edge, Rng& rng, Result& r) const;

    const VoxelMask& mask_;
    const Clustering& clustering_;
    std::vector<std::vector<Index>> members_;
};

BlockSampler::Result draw_constrained_blocks(const VoxelMask& mask, const Clustering& clustering,
                                             const SubsampleConfig& cfg, Rng& rng);

/// Draw b uses an RNG derived from (cfg.seed, b) only.
SubsampleDraw make_draw(const Dataset& dataset, const BlockSampler& sampler, const SubsampleConfig& cfg, int b);
std::vector<SubsampleDraw> make_draws(const Dataset& dataset, const Clustering& clustering,
                                      const SubsampleConfig& cfg, unsigned threads = 1);

}  // namespace rss
