#include "rss/engine.hpp"

#include "rss/parallel.hpp"
#include "rss/random.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace rss {

namespace {

struct DrawOutcome {
    std::vector<Index> included;
    std::vector<Index> selected;
    bool converged = true;
};

DrawOutcome solve_draw(const Matrix& Xr, const std::vector<int>& yr, const std::vector<std::vector<Index>>& col_map,
                       const RSSConfig& cfg) {
    DrawOutcome out;
    for (const auto& cols : col_map) out.included.insert(out.included.end(), cols.begin(), cols.end());
    SolverConfig sc = cfg.solver;
    sc.alpha = cfg.alpha_fraction * compute_alpha_max(Xr, yr, sc.standardize);
    const SolveResult res = solve_l1_logistic(Xr, yr, sc);
    out.converged = res.converged;
    for (Index k : select_columns(res.weights.w, cfg))
        out.selected.insert(out.selected.end(), col_map[k].begin(), col_map[k].end());
    return out;
}

ScoreMap aggregate(Index p, const std::vector<DrawOutcome>& outcomes) {
    ScoreMap s;
    s.included.assign(p, 0);
    s.selected.assign(p, 0);
    s.draws = static_cast<int>(outcomes.size());
    for (const auto& o : outcomes) {
        for (Index j : o.included) ++s.included[j];
        for (Index j : o.selected) ++s.selected[j];
        s.nonconverged += !o.converged;
    }
    s.scores.resize(static_cast<Eigen::Index>(p));
    for (Index j = 0; j < p; ++j)
        s.scores(static_cast<Eigen::Index>(j)) =
            static_cast<double>(s.selected[j]) / static_cast<double>(std::max<Index>(s.included[j], 1));
    s.flagged = 10 * s.nonconverged > s.draws;
    return s;
}

std::vector<int> rows_of(const std::vector<int>& y, const std::vector<Index>& rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (Index i : rows) out.push_back(y[i]);
    return out;
}

}  // namespace

void ScoreMap::validate() const {
    const Index p = included.size();
    if (selected.size() != p || static_cast<Index>(scores.size()) != p) throw DataError("score map: length mismatch");
    for (Index j = 0; j < p; ++j) {
        if (selected[j] > included[j] || included[j] > static_cast<Index>(draws))
            throw DataError("score map: counts out of order at voxel " + std::to_string(j));
        if (scores(static_cast<Eigen::Index>(j)) < 0.0 || scores(static_cast<Eigen::Index>(j)) > 1.0)
            throw DataError("score map: score outside [0, 1]");
    }
}

void RSSConfig::validate() const {
    subsample.validate();
    solver.validate();
    if (!(alpha_fraction > 0.0 && alpha_fraction <= 1.0)) throw DataError("alpha_fraction must be in (0, 1]");
    if (select_rule == SelectRule::top_k && top_k < 1) throw DataError("top_k must be at least 1");
    if (!(magnitude_floor >= 0.0)) throw DataError("magnitude_floor must be nonnegative");
}

ReducedProblem build_reduced_problem(const Dataset& dataset, const SubsampleDraw& draw) {
    ReducedProblem r;
    for (const auto& g : draw.per_cluster)
        if (!g.empty()) r.col_map.push_back(g);
    if (r.col_map.empty()) throw DataError("reduced problem has no columns");
    const auto m = static_cast<Eigen::Index>(draw.rows.size());
    r.Xr.resize(m, static_cast<Eigen::Index>(r.col_map.size()));
    for (std::size_t k = 0; k < r.col_map.size(); ++k) {
        const auto& cols = r.col_map[k];
        for (Eigen::Index i = 0; i < m; ++i) {
            const Eigen::Index row = static_cast<Eigen::Index>(draw.rows[static_cast<std::size_t>(i)]);
            double sum = 0.0;
            for (Index j : cols) sum += dataset.X(row, static_cast<Eigen::Index>(j));
            r.Xr(i, static_cast<Eigen::Index>(k)) = sum / static_cast<double>(cols.size());
        }
    }
    r.yr = rows_of(dataset.y, draw.rows);
    return r;
}

std::vector<Index> select_columns(const Vector& w, const RSSConfig& cfg) {
    std::vector<Index> live;
    for (Eigen::Index k = 0; k < w.size(); ++k)
        if (std::abs(w(k)) > cfg.magnitude_floor) live.push_back(static_cast<Index>(k));
    if (cfg.select_rule == SelectRule::top_k && live.size() > static_cast<Index>(cfg.top_k)) {
        // Largest magnitudes first, lower index on ties.
        std::stable_sort(live.begin(), live.end(), [&](Index a, Index b) {
            return std::abs(w(static_cast<Eigen::Index>(a))) > std::abs(w(static_cast<Eigen::Index>(b)));
        });
        live.resize(static_cast<Index>(cfg.top_k));
        std::sort(live.begin(), live.end());
    }
    return live;
}

ScoreMap rss_run(const Dataset& dataset, const Clustering& clustering, const RSSConfig& cfg) {
    cfg.validate();
    dataset.validate();
    const BlockSampler sampler(dataset.mask, clustering);
    std::vector<DrawOutcome> outcomes(static_cast<std::size_t>(cfg.subsample.draws));
    parallel_for(outcomes.size(), cfg.threads, [&](std::size_t b) {
        const SubsampleDraw draw = make_draw(dataset, sampler, cfg.subsample, static_cast<int>(b));
        const ReducedProblem rp = build_reduced_problem(dataset, draw);
        outcomes[b] = solve_draw(rp.Xr, rp.yr, rp.col_map, cfg);
    });
    return aggregate(dataset.p(), outcomes);
}

ScoreMap randomized_l1_run(const Dataset& dataset, const RSSConfig& cfg) {
    cfg.validate();
    dataset.validate();
    const Index p = dataset.p();
    const auto keep = std::clamp<Index>(
        static_cast<Index>(std::llround(cfg.subsample.voxel_rate * static_cast<double>(p))), 1, p);
    std::vector<DrawOutcome> outcomes(static_cast<std::size_t>(cfg.subsample.draws));
    parallel_for(outcomes.size(), cfg.threads, [&](std::size_t b) {
        Rng rng = make_rng(cfg.subsample.seed, {stream::kDraw, b});
        const std::vector<Index> rows = draw_rows(dataset.y, cfg.subsample.row_rate, rng);
        std::vector<Index> pool(p);
        std::iota(pool.begin(), pool.end(), Index{0});
        for (Index i = 0; i < keep; ++i) {
            std::uniform_int_distribution<Index> pick(i, p - 1);
            std::swap(pool[i], pool[pick(rng)]);
        }
        pool.resize(keep);
        std::sort(pool.begin(), pool.end());

        Matrix Xs(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(keep));
        std::vector<std::vector<Index>> col_map(keep);
        for (Index k = 0; k < keep; ++k) {
            col_map[k] = {pool[k]};
            for (std::size_t i = 0; i < rows.size(); ++i)
                Xs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                    dataset.X(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(pool[k]));
        }
        outcomes[b] = solve_draw(Xs, rows_of(dataset.y, rows), col_map, cfg);
    });
    return aggregate(p, outcomes);
}

void write_score_map(const ScoreMap& s, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << "RSSSCORE 1 " << s.size() << '\n';
    out << std::setprecision(17);
    for (Index j = 0; j < s.size(); ++j)
        out << s.scores(static_cast<Eigen::Index>(j)) << ' ' << s.included[j] << ' ' << s.selected[j] << '\n';
    if (!out) throw DataError("write failed: " + path.string());
}

ScoreMap read_score_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string() + " for reading");
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::string magic, version;
    long p = -1;
    if (!(hs >> magic >> version >> p) || magic != "RSSSCORE" || version != "1" || p < 0)
        throw DataError("malformed header in " + path.string());
    ScoreMap s;
    s.scores.resize(p);
    s.included.resize(static_cast<Index>(p));
    s.selected.resize(static_cast<Index>(p));
    for (long j = 0; j < p; ++j) {
        if (!(in >> s.scores(j) >> s.included[static_cast<Index>(j)] >> s.selected[static_cast<Index>(j)]))
            throw DataError("truncated score map " + path.string());
        s.draws = std::max(s.draws, static_cast<int>(s.included[static_cast<Index>(j)]));
    }
    return s;
}

}  // namespace rss
