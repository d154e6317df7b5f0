#pragma once

#include "rss/data_model.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace rss {

/// Partition of p items into q nonempty clusters.
struct Clustering {
    std::vector<int> assignment;
    int q = 0;
    /// Sum of squared distances to the assigned centers.
    double inertia = 0.0;
    /// Inertia after every Lloyd iteration.
    std::vector<double> inertia_history;
    int iterations = 0;

    Index size() const { return assignment.size(); }
    /// Member indices of every cluster, each list ascending.
    std::vector<std::vector<Index>> members() const;
    void validate(Index p) const;
};

/// True when both clusterings induce the same partition, whatever the labels.
bool same_partition(const Clustering& a, const Clustering& b);

/// Lloyd's k-means with k-means++ seeding and squared Euclidean distance.
/// `points` holds one point per column.
Clustering kmeans(const Matrix& points, int q, std::uint64_t seed, int max_iters = 300, unsigned threads = 1);

/// k-means over voxel profiles (columns of X), each standardized to mean 0
/// and variance 1 first; constant columns become all-zero.
Clustering cluster_voxels(const Dataset& dataset, int q, std::uint64_t seed, int max_iters = 300,
                          unsigned threads = 1);

Matrix standardize_columns(const Matrix& X);

/// `RSSCLU 1 <p> <q>` header then p cluster ids, one per line.
void write_clustering(const Clustering& c, const std::filesystem::path& path);
Clustering read_clustering(const std::filesystem::path& path);

}  // namespace rss
