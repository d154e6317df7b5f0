#include "rss/clustering.hpp"

#include "rss/parallel.hpp"
#include "rss/random.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace rss {

namespace {

double sq_dist(const Matrix& P, Eigen::Index i, const Matrix& C, Eigen::Index k) {
    return (P.col(i) - C.col(k)).squaredNorm();
}

Matrix kmeanspp_centers(const Matrix& P, int q, Rng& rng) {
    const Eigen::Index N = P.cols();
    Matrix C(P.rows(), q);
    std::vector<char> chosen(static_cast<std::size_t>(N), 0);
    std::uniform_int_distribution<Eigen::Index> first(0, N - 1);
    Eigen::Index pick = first(rng);
    C.col(0) = P.col(pick);
    chosen[static_cast<std::size_t>(pick)] = 1;

    std::vector<double> d2(static_cast<std::size_t>(N));
    for (Eigen::Index i = 0; i < N; ++i) d2[static_cast<std::size_t>(i)] = sq_dist(P, i, C, 0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 1; k < q; ++k) {
        double total = 0.0;
        for (double v : d2) total += v;
        if (total > 0.0) {
            const double target = U(rng) * total;
            double acc = 0.0;
            pick = N - 1;
            for (Eigen::Index i = 0; i < N; ++i) {
                acc += d2[static_cast<std::size_t>(i)];
                if (acc > target && d2[static_cast<std::size_t>(i)] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            // Every point coincides with a center: take any unchosen point.
            std::vector<Eigen::Index> rest;
            for (Eigen::Index i = 0; i < N; ++i)
                if (!chosen[static_cast<std::size_t>(i)]) rest.push_back(i);
            pick = rest[std::uniform_int_distribution<std::size_t>(0, rest.size() - 1)(rng)];
        }
        chosen[static_cast<std::size_t>(pick)] = 1;
        C.col(k) = P.col(pick);
        for (Eigen::Index i = 0; i < N; ++i)
            d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], sq_dist(P, i, C, k));
    }
    return C;
}

}  // namespace

std::vector<std::vector<Index>> Clustering::members() const {
    std::vector<std::vector<Index>> m(static_cast<std::size_t>(q));
    for (Index j = 0; j < assignment.size(); ++j) m[static_cast<std::size_t>(assignment[j])].push_back(j);
    return m;
}

void Clustering::validate(Index p) const {
    if (assignment.size() != p) throw DataError("clustering size does not match voxel count");
    if (q < 1) throw DataError("clustering has no clusters");
    std::vector<char> seen(static_cast<std::size_t>(q), 0);
    for (int a : assignment) {
        if (a < 0 || a >= q) throw DataError("cluster id out of range");
        seen[static_cast<std::size_t>(a)] = 1;
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw DataError("empty cluster");
}

bool same_partition(const Clustering& a, const Clustering& b) {
    if (a.assignment.size() != b.assignment.size() || a.q != b.q) return false;
    std::map<int, int> ab, ba;
    for (std::size_t j = 0; j < a.assignment.size(); ++j) {
        const auto [it1, new1] = ab.emplace(a.assignment[j], b.assignment[j]);
        const auto [it2, new2] = ba.emplace(b.assignment[j], a.assignment[j]);
        if (it1->second != b.assignment[j] || it2->second != a.assignment[j]) return false;
    }
    return true;
}

Clustering kmeans(const Matrix& points, int q, std::uint64_t seed, int max_iters, unsigned threads) {
    const Eigen::Index N = points.cols();
    if (q < 1) throw DataError("kmeans: q must be at least 1");
    if (q > N) throw DataError("kmeans: q (" + std::to_string(q) + ") exceeds point count (" + std::to_string(N) + ")");

    // Work on a canonical (lexicographic) point order so that the partition
    // does not depend on how the caller ordered the points.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index r = 0; r < points.rows(); ++r) {
            if (points(r, a) != points(r, b)) return points(r, a) < points(r, b);
        }
        return false;
    });
    Matrix sorted(points.rows(), N);
    for (Eigen::Index i = 0; i < N; ++i) sorted.col(i) = points.col(order[static_cast<std::size_t>(i)]);
    const Matrix& P = sorted;

    Rng rng = make_rng(seed, {stream::kCluster});
    Matrix C = kmeanspp_centers(P, q, rng);

    Clustering out;
    out.q = q;
    std::vector<int> assign(static_cast<std::size_t>(N), -1);
    std::vector<double> dist(static_cast<std::size_t>(N), 0.0);
    const std::size_t chunk = 512;
    const std::size_t n_chunks = (static_cast<std::size_t>(N) + chunk - 1) / chunk;

    for (int it = 0; it < max_iters; ++it) {
        // Assignment: nearest center by the expanded distance, confirmed with an
        // exact distance before leaving the current center.
        const Vector cnorm = C.colwise().squaredNorm().transpose();
        std::vector<char> changed(n_chunks, 0);
        parallel_for(n_chunks, threads, [&](std::size_t b) {
            const Eigen::Index lo = static_cast<Eigen::Index>(b * chunk);
            const Eigen::Index hi = std::min<Eigen::Index>(N, lo + static_cast<Eigen::Index>(chunk));
            const Matrix cross = P.middleCols(lo, hi - lo).transpose() * C;
            for (Eigen::Index i = lo; i < hi; ++i) {
                Eigen::Index best = 0;
                double bestv = std::numeric_limits<double>::infinity();
                for (Eigen::Index k = 0; k < q; ++k) {
                    const double v = cnorm(k) - 2.0 * cross(i - lo, k);
                    if (v < bestv) bestv = v, best = k;
                }
                int& a = assign[static_cast<std::size_t>(i)];
                const double d_best = sq_dist(P, i, C, best);
                if (a < 0) {
                    a = static_cast<int>(best);
                    changed[b] = 1;
                } else if (best != a && d_best < sq_dist(P, i, C, a)) {
                    a = static_cast<int>(best);
                    changed[b] = 1;
                }
            }
        });
        const bool any_change = std::find(changed.begin(), changed.end(), 1) != changed.end();
        if (!any_change && it > 0) break;

        // Empty clusters take the point farthest from its center.
        std::vector<Index> counts(static_cast<std::size_t>(q), 0);
        for (int a : assign) ++counts[static_cast<std::size_t>(a)];
        for (int k = 0; k < q; ++k) {
            if (counts[static_cast<std::size_t>(k)] > 0) continue;
            Eigen::Index far = -1;
            double fard = -1.0;
            for (Eigen::Index i = 0; i < N; ++i) {
                const int a = assign[static_cast<std::size_t>(i)];
                if (counts[static_cast<std::size_t>(a)] < 2) continue;
                const double d = sq_dist(P, i, C, a);
                if (d > fard) fard = d, far = i;
            }
            --counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(far)])];
            assign[static_cast<std::size_t>(far)] = k;
            ++counts[static_cast<std::size_t>(k)];
            C.col(k) = P.col(far);
        }

        C.setZero();
        for (Eigen::Index i = 0; i < N; ++i) C.col(assign[static_cast<std::size_t>(i)]) += P.col(i);
        for (int k = 0; k < q; ++k) C.col(k) /= static_cast<double>(counts[static_cast<std::size_t>(k)]);

        double inertia = 0.0;
        for (Eigen::Index i = 0; i < N; ++i) {
            dist[static_cast<std::size_t>(i)] = sq_dist(P, i, C, assign[static_cast<std::size_t>(i)]);
            inertia += dist[static_cast<std::size_t>(i)];
        }
        out.inertia_history.push_back(inertia);
        out.iterations = it + 1;
    }

    out.assignment.assign(static_cast<std::size_t>(N), 0);
    for (Eigen::Index i = 0; i < N; ++i)
        out.assignment[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = assign[static_cast<std::size_t>(i)];
    out.inertia = out.inertia_history.empty() ? 0.0 : out.inertia_history.back();
    return out;
}

Matrix standardize_columns(const Matrix& X) {
    Matrix Z(X.rows(), X.cols());
    const double n = static_cast<double>(X.rows());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double mean = X.col(j).sum() / n;
        const Vector centred = X.col(j).array() - mean;
        const double sd = std::sqrt(centred.squaredNorm() / n);
        if (sd > 0.0) Z.col(j) = centred / sd;
        else Z.col(j).setZero();
    }
    return Z;
}

Clustering cluster_voxels(const Dataset& dataset, int q, std::uint64_t seed, int max_iters, unsigned threads) {
    return kmeans(standardize_columns(dataset.X), q, seed, max_iters, threads);
}

void write_clustering(const Clustering& c, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << "RSSCLU 1 " << c.assignment.size() << ' ' << c.q << '\n';
    for (int a : c.assignment) out << a << '\n';
    if (!out) throw DataError("write failed: " + path.string());
}

Clustering read_clustering(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string() + " for reading");
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::string magic, version;
    long p = -1, q = -1;
    if (!(hs >> magic >> version >> p >> q) || magic != "RSSCLU" || version != "1" || p < 0 || q < 1)
        throw DataError("malformed header in " + path.string());
    Clustering c;
    c.q = static_cast<int>(q);
    for (long v; in >> v;) c.assignment.push_back(static_cast<int>(v));
    c.validate(static_cast<Index>(p));
    return c;
}

}  // namespace rss
