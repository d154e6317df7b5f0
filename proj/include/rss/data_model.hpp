#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace rss {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = std::size_t;

/// Raised for malformed inputs, broken invariants and unreadable files.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Coord {
    int x = 0;
    int y = 0;
    int z = 0;

    friend bool operator==(const Coord&, const Coord&) = default;
};

/// In-mask voxels of a 3-D grid. A voxel's position in `voxels` is its
/// column index in every sample matrix built on this mask.
class VoxelMask {
public:
    VoxelMask() = default;
    VoxelMask(std::array<int, 3> dims, std::vector<Coord> voxels);

    /// Every grid cell in x-fastest order.
    static VoxelMask full(std::array<int, 3> dims);

    const std::array<int, 3>& dims() const { return dims_; }
    const std::vector<Coord>& voxels() const { return voxels_; }
    Index size() const { return voxels_.size(); }

    const Coord& coord(Index j) const;
    bool in_grid(const Coord& c) const;
    /// Column index of the voxel at `c`, or -1 when `c` is outside the mask.
    long index_of(const Coord& c) const;

    friend bool operator==(const VoxelMask& a, const VoxelMask& b) {
        return a.dims_ == b.dims_ && a.voxels_ == b.voxels_;
    }

private:
    std::array<int, 3> dims_{0, 0, 0};
    std::vector<Coord> voxels_;
    std::vector<long> lookup_;  // grid cell -> column, -1 outside
};

Coord voxel_index_to_coord(const VoxelMask& mask, Index j);

/// One center's samples. Labels are +1/-1.
struct Dataset {
    std::string center_id;
    Matrix X;
    std::vector<int> y;
    VoxelMask mask;

    Index n() const { return static_cast<Index>(X.rows()); }
    Index p() const { return static_cast<Index>(X.cols()); }

    /// Throws DataError when any invariant is broken.
    void validate() const;
};

bool operator==(const Dataset& a, const Dataset& b);

struct CenterCollection {
    std::vector<Dataset> datasets;

    void validate() const;
    Index size() const { return datasets.size(); }
};

struct ModelWeights {
    Vector w;
    double c = 0.0;
};

/// Sorted, duplicate-free column indices over a universe of `p` voxels.
struct SupportSet {
    std::vector<Index> indices;
    Index p = 0;

    SupportSet() = default;
    SupportSet(std::vector<Index> idx, Index universe);

    Index size() const { return indices.size(); }
    bool empty() const { return indices.empty(); }
    bool contains(Index j) const;

    friend bool operator==(const SupportSet&, const SupportSet&) = default;
};

SupportSet intersect(const SupportSet& a, const SupportSet& b);
double jaccard(const SupportSet& a, const SupportSet& b);

// File formats. A dataset lives in three files sharing a prefix:
// <prefix>.mat, <prefix>.labels, <prefix>.mask. The center id is the
// prefix's file name.

struct DatasetPaths {
    std::filesystem::path matrix;
    std::filesystem::path labels;
    std::filesystem::path mask;

    static DatasetPaths from_prefix(const std::filesystem::path& prefix);
};

Dataset load_dataset(const DatasetPaths& paths);
void save_dataset(const Dataset& d, const DatasetPaths& paths);

Matrix read_matrix(const std::filesystem::path& path);
void write_matrix(const Matrix& X, const std::filesystem::path& path);
std::vector<int> read_labels(const std::filesystem::path& path);
void write_labels(const std::vector<int>& y, const std::filesystem::path& path);
VoxelMask read_mask(const std::filesystem::path& path);
void write_mask(const VoxelMask& mask, const std::filesystem::path& path);

/// `RSSSUP 1 <p> <k>` header then k indices, one per line.
SupportSet read_support(const std::filesystem::path& path);
void write_support(const SupportSet& s, const std::filesystem::path& path);

}  // namespace rss
