#include "rss/analysis.hpp"

#include "rss/parallel.hpp"
#include "rss/random.hpp"
#include "rss/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rss {

namespace {

std::vector<int> pick_labels(const std::vector<int>& y, const std::vector<Index>& rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (Index i : rows) out.push_back(y[i]);
    return out;
}

Matrix pick_rows(const Matrix& X, const std::vector<Index>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

bool both_classes(const std::vector<int>& y) {
    bool pos = false, neg = false;
    for (int v : y) (v == 1 ? pos : neg) = true;
    return pos && neg;
}

double accuracy(const ModelWeights& m, const Matrix& X, const std::vector<int>& y) {
    const Vector score = (X * m.w).array() + m.c;
    Index hit = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hit += (score(static_cast<Eigen::Index>(i)) >= 0.0 ? 1 : -1) == y[i];
    return static_cast<double>(hit) / static_cast<double>(y.size());
}

ModelWeights fit_l2(const Matrix& X, const std::vector<int>& y, double alpha, const PredictionConfig& cfg) {
    SolverConfig sc;
    sc.alpha = alpha;
    sc.tol = cfg.solver_tol;
    sc.max_iters = cfg.solver_max_iters;
    return solve_l2_logistic(X, y, sc).weights;
}

}  // namespace

LaplaceFit fit_laplace(const Vector& values, LaplaceMode mode) {
    const Eigen::Index n = values.size();
    if (n < 2) throw DataError("fit_laplace needs at least 2 values");
    if (!values.allFinite()) throw DataError("fit_laplace: non-finite value");
    LaplaceFit f;
    if (mode == LaplaceMode::moment) {
        f.mu = values.mean();
        const double var = (values.array() - f.mu).square().sum() / static_cast<double>(n);
        f.b = std::sqrt(var / 2.0);
    } else {
        std::vector<double> v(values.data(), values.data() + n);
        std::sort(v.begin(), v.end());
        const std::size_t h = v.size() / 2;
        f.mu = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
        f.b = (values.array() - f.mu).abs().sum() / static_cast<double>(n);
    }
    if (!(f.b > 0.0)) throw DataError("fit_laplace: zero scale");
    return f;
}

double laplace_cdf(double x, const LaplaceFit& fit) {
    const double z = (x - fit.mu) / fit.b;
    return z < 0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
}

double laplace_icdf(double p0, const LaplaceFit& fit) {
    if (!(p0 > 0.0 && p0 < 1.0)) throw DataError("laplace_icdf: p0 must be in (0, 1)");
    const double d = p0 - 0.5;
    const double s = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
    return fit.mu - fit.b * s * std::log1p(-2.0 * std::abs(d));
}

SupportSet threshold_support(const Vector& values, double theta) {
    std::vector<Index> idx;
    for (Eigen::Index j = 0; j < values.size(); ++j)
        if (std::abs(values(j)) > theta) idx.push_back(static_cast<Index>(j));
    return SupportSet(std::move(idx), static_cast<Index>(values.size()));
}

double gap_threshold(const Vector& values) {
    std::vector<double> v;
    for (Eigen::Index j = 0; j < values.size(); ++j)
        if (values(j) != 0.0) v.push_back(std::abs(values(j)));
    std::sort(v.rbegin(), v.rend());
    if (v.size() < 2 || v.front() == v.back()) throw DataError("gap_threshold needs at least 2 distinct nonzero magnitudes");
    const std::size_t half = (v.size() + 1) / 2;
    std::size_t best = 0;
    double best_ratio = 0.0;
    for (std::size_t k = 0; k < half && k + 1 < v.size(); ++k) {
        const double r = v[k] / v[k + 1];
        if (r > best_ratio) best_ratio = r, best = k;
    }
    return std::sqrt(v[best] * v[best + 1]);
}

OverlapResult overlap(const std::vector<SupportSet>& supports, int S) {
    const int m = static_cast<int>(supports.size());
    if (m < 1) throw DataError("overlap needs at least one support");
    if (S < 1 || S > m) throw DataError("overlap: S must be in [1, " + std::to_string(m) + "]");
    const Index p = supports.front().p;
    for (const auto& s : supports)
        if (s.p != p) throw DataError("overlap: supports have different universes");
    OverlapResult r;
    r.S = S;
    r.counts.assign(p, 0);
    for (const auto& s : supports)
        for (Index j : s.indices) ++r.counts[j];
    for (int level = 1; level <= m; ++level) {
        std::vector<Index> idx;
        for (Index j = 0; j < p; ++j)
            if (r.counts[j] >= level) idx.push_back(j);
        r.support_at.emplace(level, SupportSet(std::move(idx), p));
    }
    return r;
}

SupportSet random_support(Index p, Index size, std::uint64_t seed) {
    if (size > p) throw DataError("random_support: size exceeds p");
    Rng rng = make_rng(seed, {stream::kRandomSupport});
    std::vector<Index> pool(p);
    std::iota(pool.begin(), pool.end(), Index{0});
    for (Index i = 0; i < size; ++i) std::swap(pool[i], pool[std::uniform_int_distribution<Index>(i, p - 1)(rng)]);
    pool.resize(size);
    return SupportSet(std::move(pool), p);
}

PredictionResult evaluate_prediction(const CenterCollection& pooled, const SupportSet& support,
                                     const PredictionConfig& cfg) {
    if (support.empty()) throw DataError("evaluate_prediction: empty support");
    if (cfg.n_splits < 1 || cfg.cv_folds < 2 || cfg.alpha_grid.empty()) throw DataError("evaluate_prediction: bad config");
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) throw DataError("train_fraction must be in (0, 1)");

    Index N = 0;
    for (const auto& d : pooled.datasets) N += d.n();
    if (N < 10) throw DataError("evaluate_prediction needs at least 10 pooled samples");
    Matrix X(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(support.size()));
    std::vector<int> y;
    y.reserve(N);
    Eigen::Index row = 0;
    for (const auto& d : pooled.datasets) {
        for (Eigen::Index i = 0; i < d.X.rows(); ++i, ++row)
            for (std::size_t k = 0; k < support.size(); ++k)
                X(row, static_cast<Eigen::Index>(k)) = d.X(i, static_cast<Eigen::Index>(support.indices[k]));
        y.insert(y.end(), d.y.begin(), d.y.end());
    }
    const auto n_train = std::clamp<Index>(static_cast<Index>(std::llround(cfg.train_fraction * static_cast<double>(N))),
                                           static_cast<Index>(2 * cfg.cv_folds), N - 1);

    PredictionResult res;
    res.accuracies.assign(static_cast<std::size_t>(cfg.n_splits), 0.0);
    parallel_for(res.accuracies.size(), cfg.threads, [&](std::size_t s) {
        std::vector<Index> order(N);
        std::vector<Index> train, test;
        std::vector<int> ytr;
        for (std::uint64_t attempt = 0;; ++attempt) {
            if (attempt == 1000) throw DataError("evaluate_prediction: cannot draw a two-class training split");
            Rng rng = make_rng(cfg.seed, {stream::kSplit, s, attempt});
            std::iota(order.begin(), order.end(), Index{0});
            std::shuffle(order.begin(), order.end(), rng);
            train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
            test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
            ytr = pick_labels(y, train);
            // Each CV fold's training part must also hold both classes.
            bool ok = both_classes(ytr);
            for (int f = 0; ok && f < cfg.cv_folds; ++f) {
                std::vector<int> part;
                for (Index i = 0; i < train.size(); ++i)
                    if (static_cast<int>(i % static_cast<Index>(cfg.cv_folds)) != f) part.push_back(ytr[i]);
                ok = both_classes(part);
            }
            if (ok) break;
        }
        const Matrix Xtr = pick_rows(X, train);

        double best_alpha = cfg.alpha_grid.front(), best_acc = -1.0;
        for (double alpha : cfg.alpha_grid) {
            double acc = 0.0;
            for (int f = 0; f < cfg.cv_folds; ++f) {
                std::vector<Index> fit_rows, hold_rows;
                for (Index i = 0; i < train.size(); ++i)
                    (static_cast<int>(i % static_cast<Index>(cfg.cv_folds)) == f ? hold_rows : fit_rows).push_back(i);
                const ModelWeights m = fit_l2(pick_rows(Xtr, fit_rows), pick_labels(ytr, fit_rows), alpha, cfg);
                acc += accuracy(m, pick_rows(Xtr, hold_rows), pick_labels(ytr, hold_rows));
            }
            if (acc > best_acc) best_acc = acc, best_alpha = alpha;
        }
        const ModelWeights m = fit_l2(Xtr, ytr, best_alpha, cfg);
        res.accuracies[s] = accuracy(m, pick_rows(X, test), pick_labels(y, test));
    });

    const double n = static_cast<double>(res.accuracies.size());
    res.mean_acc = std::accumulate(res.accuracies.begin(), res.accuracies.end(), 0.0) / n;
    double ss = 0.0;
    for (double a : res.accuracies) ss += (a - res.mean_acc) * (a - res.mean_acc);
    res.std_acc = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    return res;
}

}  // namespace rss
