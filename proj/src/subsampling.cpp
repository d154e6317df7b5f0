#include "rss/subsampling.hpp"

#include "rss/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

namespace rss {

namespace {

// Picks `k` of `pool` uniformly without replacement (partial Fisher-Yates).
std::vector<Index> sample_without_replacement(std::vector<Index> pool, Index k, Rng& rng) {
    k = std::min<Index>(k, pool.size());
    for (Index i = 0; i < k; ++i) {
        std::uniform_int_distribution<Index> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(k);
    return pool;
}


}  // namespace

// Keeps `need` voxels of an overshooting block as one face-connected piece.
// The piece starts at the voxel lowest along a random direction and grows
// through the frontier in that order, so on a convex block it is a
// half-space cut. Pieces that run out of frontier restart the same way.
void SubsampleConfig::validate() const {
    if (!(row_rate > 0.0 && row_rate <= 1.0)) throw DataError("row_rate must be in (0, 1]");
    if (!(voxel_rate > 0.0 && voxel_rate <= 1.0)) throw DataError("voxel_rate must be in (0, 1]");
    if (block_edge < 1) throw DataError("block_edge must be at least 1");
    if (draws < 1) throw DataError("draws must be at least 1");
}

Index SubsampleDraw::voxel_count() const {
    Index total = 0;
    for (const auto& g : per_cluster) total += g.size();
    return total;
}

Index cluster_quota(double rate, Index size) {
    if (size == 0) return 0;
    const double exact = rate * static_cast<double>(size);
    // Tolerate representation error such as 0.1 * 220 = 22.000000000000004.
    const auto q = static_cast<Index>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
    return std::clamp<Index>(q, 1, size);
}

std::vector<Index> draw_rows(std::span<const int> y, double row_rate, Rng& rng) {
    std::vector<Index> cls[2];
    for (Index i = 0; i < y.size(); ++i) cls[y[i] == 1 ? 1 : 0].push_back(i);
    if (cls[0].size() < 2 || cls[1].size() < 2) throw DataError("draw_rows needs at least 2 samples per class");

    const double n = static_cast<double>(y.size());
    const auto total = static_cast<Index>(std::max(2.0, std::round(row_rate * n)));
    Index quota[2];
    double remainder[2];
    Index assigned = 0;
    for (int c = 0; c < 2; ++c) {
        const double exact = row_rate * static_cast<double>(cls[c].size());
        quota[c] = std::clamp<Index>(static_cast<Index>(std::floor(exact + 1e-9)), 1, cls[c].size());
        remainder[c] = exact - std::floor(exact + 1e-9);
        assigned += quota[c];
    }
    // Largest remainder first; ties go to a random class.
    int order[2] = {0, 1};
    if (std::bernoulli_distribution(0.5)(rng)) std::swap(order[0], order[1]);
    if (remainder[order[1]] > remainder[order[0]]) std::swap(order[0], order[1]);
    for (int k = 0; assigned < total && k < 4; ++k) {
        const int c = order[k % 2];
        if (quota[c] < cls[c].size()) {
            ++quota[c];
            ++assigned;
        }
    }

    std::vector<Index> rows;
    for (int c = 0; c < 2; ++c) {
        auto picked = sample_without_replacement(cls[c], quota[c], rng);
        rows.insert(rows.end(), picked.begin(), picked.end());
    }
    std::sort(rows.begin(), rows.end());
    return rows;
}

BlockSampler::BlockSampler(const VoxelMask& mask, const Clustering& clustering)
    : mask_(mask), clustering_(clustering) {
    clustering.validate(mask.size());
    members_ = clustering.members();
}

void BlockSampler::fill_cluster(int g, Index quota, int edge, Rng& rng, Result& r) const {
    const std::vector<Index>& members = members_[static_cast<std::size_t>(g)];
    std::uniform_int_distribution<int> shift(0, edge - 1);
    const int ox = shift(rng), oy = shift(rng), oz = shift(rng);
    auto cell = [&](int v, int o) { return (v + o) / edge; };

    std::map<std::array<int, 3>, std::vector<Index>> by_cube;
    for (Index j : members) {
        const Coord& c = mask_.coord(j);
        by_cube[{cell(c.x, ox), cell(c.y, oy), cell(c.z, oz)}].push_back(j);
    }
    std::vector<std::pair<std::array<int, 3>, std::vector<Index>>> pieces(by_cube.begin(), by_cube.end());
    std::shuffle(pieces.begin(), pieces.end(), rng);

    // Inside a piece, voxels follow a snake path through the cube with random
    // axis order and directions. On any box inside the cube that path visits
    // neighbours one after another, so every run of a box piece is
    // face-connected.
    std::vector<Index> order;
    std::vector<std::size_t> piece_of;
    order.reserve(members.size());
    for (std::size_t k = 0; k < pieces.size(); ++k) {
        auto& [cube, vox] = pieces[k];
        std::array<int, 3> axes{0, 1, 2};
        std::shuffle(axes.begin(), axes.end(), rng);
        const int flips = std::uniform_int_distribution<int>(0, 7)(rng);
        auto rank = [&](Index j) {
            const Coord& c = mask_.coord(j);
            const int local[3] = {c.x + ox - cube[0] * edge, c.y + oy - cube[1] * edge, c.z + oz - cube[2] * edge};
            int u[3];
            for (int a = 0; a < 3; ++a) u[a] = flips >> a & 1 ? edge - 1 - local[axes[a]] : local[axes[a]];
            const int row = u[2] * edge + (u[2] % 2 ? edge - 1 - u[1] : u[1]);
            return row * edge + (row % 2 ? edge - 1 - u[0] : u[0]);
        };
        std::sort(vox.begin(), vox.end(), [&](Index a, Index b) { return rank(a) < rank(b); });
        for (Index j : vox) {
            order.push_back(j);
            piece_of.push_back(k);
        }
    }

    std::vector<Index>& out = r.per_cluster[static_cast<std::size_t>(g)];
    const Index start = std::uniform_int_distribution<Index>(0, order.size() - 1)(rng);
    for (Index i = 0; i < quota; ++i) {
        const Index pos = (start + i) % order.size();
        const bool new_block = i == 0 || pos == 0 || piece_of[pos] != piece_of[pos - 1];
        if (new_block) r.blocks.emplace_back();
        r.blocks.back().push_back(order[pos]);
        out.push_back(order[pos]);
    }
    std::sort(out.begin(), out.end());
}

BlockSampler::Result BlockSampler::draw(double voxel_rate, int block_edge, Rng& rng) const {
    Result r;
    r.per_cluster.resize(members_.size());
    for (std::size_t g = 0; g < members_.size(); ++g) {
        const Index quota = cluster_quota(voxel_rate, members_[g].size());
        if (quota == members_[g].size()) {
            r.per_cluster[g] = members_[g];
            continue;
        }
        fill_cluster(static_cast<int>(g), quota, block_edge, rng, r);
    }
    return r;
}

BlockSampler::Result draw_constrained_blocks(const VoxelMask& mask, const Clustering& clustering,
                                             const SubsampleConfig& cfg, Rng& rng) {
    cfg.validate();
    return BlockSampler(mask, clustering).draw(cfg.voxel_rate, cfg.block_edge, rng);
}

SubsampleDraw make_draw(const Dataset& dataset, const BlockSampler& sampler, const SubsampleConfig& cfg, int b) {
    Rng rng = make_rng(cfg.seed, {stream::kDraw, static_cast<std::uint64_t>(b)});
    SubsampleDraw d;
    d.rows = draw_rows(dataset.y, cfg.row_rate, rng);
    auto blocks = sampler.draw(cfg.voxel_rate, cfg.block_edge, rng);
    d.per_cluster = std::move(blocks.per_cluster);
    d.fallback_voxels = blocks.fallback_voxels;
    return d;
}

std::vector<SubsampleDraw> make_draws(const Dataset& dataset, const Clustering& clustering,
                                      const SubsampleConfig& cfg, unsigned threads) {
    cfg.validate();
    const BlockSampler sampler(dataset.mask, clustering);
    std::vector<SubsampleDraw> draws(static_cast<std::size_t>(cfg.draws));
    parallel_for(draws.size(), threads,
                 [&](std::size_t b) { draws[b] = make_draw(dataset, sampler, cfg, static_cast<int>(b)); });
    return draws;
}

}  // namespace rss
