#include "rss/synthgen.hpp"

#include "rss/random.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace rss {

void SynthConfig::validate() const {
    for (int d : dims)
        if (d <= 0) throw DataError("synth: dims must be positive");
    if (n_centers < 1) throw DataError("synth: n_centers must be positive");
    if (n_per_center < 2) throw DataError("synth: n_per_center must be at least 2");
    if (true_clusters.empty()) throw DataError("synth: empty support (no true clusters)");
    for (const auto& b : true_clusters) {
        const int lo[3] = {b.corner.x, b.corner.y, b.corner.z};
        for (int k = 0; k < 3; ++k) {
            if (b.edges[static_cast<std::size_t>(k)] < 1) throw DataError("synth: box edges must be positive");
            if (lo[k] < 0 || lo[k] + b.edges[static_cast<std::size_t>(k)] > dims[static_cast<std::size_t>(k)])
                throw DataError("synth: box outside grid");
        }
    }
    if (!(effect_size >= 0.0)) throw DataError("synth: effect_size must be nonnegative");
    if (!(noise_sigma >= 0.0)) throw DataError("synth: noise_sigma must be nonnegative");
    if (!(center_scale_range[0] > 0.0) || !(center_scale_range[0] <= center_scale_range[1]))
        throw DataError("synth: center_scale_range needs 0 < lo <= hi");
    if (!(center_shift_sigma >= 0.0)) throw DataError("synth: center_shift_sigma must be nonnegative");
}

std::string center_name(int c) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "center%02d", c);
    return buf;
}

SynthOutput generate_multicenter(const SynthConfig& cfg) {
    cfg.validate();
    const VoxelMask mask = VoxelMask::full(cfg.dims);
    const Index p = mask.size();

    std::vector<Index> support;
    for (const auto& b : cfg.true_clusters)
        for (int z = b.corner.z; z < b.corner.z + b.edges[2]; ++z)
            for (int y = b.corner.y; y < b.corner.y + b.edges[1]; ++y)
                for (int x = b.corner.x; x < b.corner.x + b.edges[0]; ++x)
                    support.push_back(static_cast<Index>(mask.index_of({x, y, z})));

    SynthOutput out;
    out.truth.true_support = SupportSet(std::move(support), p);
    out.truth.true_w = Vector::Zero(static_cast<Eigen::Index>(p));
    std::vector<char> in_support(p, 0);
    for (Index j : out.truth.true_support.indices) {
        in_support[j] = 1;
        out.truth.true_w(static_cast<Eigen::Index>(j)) = cfg.effect_size;
    }

    const int n = cfg.n_per_center;
    for (int c = 0; c < cfg.n_centers; ++c) {
        Rng rng = make_rng(cfg.seed, {stream::kCenter, static_cast<std::uint64_t>(c)});
        Dataset d;
        d.center_id = center_name(c);
        d.mask = mask;

        d.y.assign(static_cast<std::size_t>(n), -1);
        std::fill(d.y.begin(), d.y.begin() + (n + 1) / 2, 1);
        std::shuffle(d.y.begin(), d.y.end(), rng);

        std::uniform_real_distribution<double> gain(cfg.center_scale_range[0], cfg.center_scale_range[1]);
        std::normal_distribution<double> shift(0.0, 1.0);
        std::normal_distribution<double> noise(0.0, 1.0);
        d.X.resize(n, static_cast<Eigen::Index>(p));
        for (Index j = 0; j < p; ++j) {
            const double g = gain(rng);
            const double o = cfg.center_shift_sigma * shift(rng);
            const double mean = in_support[j] ? cfg.effect_size : 0.0;
            for (int i = 0; i < n; ++i) {
                const double signal = mean * d.y[static_cast<std::size_t>(i)];
                d.X(i, static_cast<Eigen::Index>(j)) = g * (signal + cfg.noise_sigma * noise(rng)) + o;
            }
        }
        out.centers.datasets.push_back(std::move(d));
    }
    return out;
}

SupportScore score_support(const SupportSet& est, const GroundTruth& truth) {
    SupportScore s;
    const double tp = static_cast<double>(intersect(est, truth.true_support).size());
    s.precision = est.empty() ? 1.0 : tp / static_cast<double>(est.size());
    s.recall = truth.true_support.empty() ? 0.0 : tp / static_cast<double>(truth.true_support.size());
    s.f1 = (s.precision + s.recall) > 0 && tp > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

void write_ground_truth(const GroundTruth& gt, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << "RSSGT 1 " << gt.true_support.p << '\n';
    for (Index j : gt.true_support.indices) out << j << '\n';
    if (!out) throw DataError("write failed: " + path.string());
}

GroundTruth read_ground_truth(const std::filesystem::path& path, double effect_size) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string() + " for reading");
    std::string magic, version;
    long p = -1;
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    if (!(hs >> magic >> version >> p) || magic != "RSSGT" || version != "1" || p < 0)
        throw DataError("malformed header in " + path.string());
    std::vector<Index> idx;
    for (long v; in >> v;) {
        if (v < 0) throw DataError("negative index in " + path.string());
        idx.push_back(static_cast<Index>(v));
    }
    if (!in.eof()) throw DataError("malformed ground-truth entry in " + path.string());
    GroundTruth gt;
    gt.true_support = SupportSet(std::move(idx), static_cast<Index>(p));
    gt.true_w = Vector::Zero(p);
    for (Index j : gt.true_support.indices) gt.true_w(static_cast<Eigen::Index>(j)) = effect_size;
    return gt;
}

}  // namespace rss
