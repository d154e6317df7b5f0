#include "acceptance_common.hpp"
#include "rss/engine.hpp"
#include "rss/synthgen.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>

using namespace rss;

namespace {

Clustering singletons(Index p) {
    Clustering c;
    c.q = static_cast<int>(p);
    c.assignment.resize(p);
    std::iota(c.assignment.begin(), c.assignment.end(), 0);
    return c;
}

Clustering one_cluster(Index p) {
    Clustering c;
    c.q = 1;
    c.assignment.assign(p, 0);
    return c;
}

SynthConfig small_planted(double effect, std::uint64_t seed) {
    SynthConfig s;
    s.dims = {8, 8, 4};
    s.n_centers = 1;
    s.n_per_center = 60;
    s.true_clusters = {Box{{1, 1, 0}, {3, 3, 3}}};
    s.effect_size = effect;
    s.seed = seed;
    return s;
}

RSSConfig quick_config(std::uint64_t seed, int draws = 40) {
    RSSConfig cfg;
    cfg.subsample.draws = draws;
    cfg.subsample.block_edge = 3;
    cfg.subsample.voxel_rate = 0.2;
    cfg.subsample.seed = seed;
    return cfg;
}

Clustering tiles(const VoxelMask& mask, int edge) {
    const auto& d = mask.dims();
    const int tx = (d[0] + edge - 1) / edge, ty = (d[1] + edge - 1) / edge, tz = (d[2] + edge - 1) / edge;
    Clustering c;
    c.q = tx * ty * tz;
    for (Index j = 0; j < mask.size(); ++j) {
        const Coord v = mask.coord(j);
        c.assignment.push_back(v.x / edge + tx * (v.y / edge + ty * (v.z / edge)));
    }
    return c;
}

double mean_over(const Vector& s, const SupportSet& sup) {
    double m = 0;
    for (Index j : sup.indices) m += s(static_cast<Eigen::Index>(j));
    return m / static_cast<double>(sup.size());
}

}  // namespace

TEST_CASE("reduced problem averages drawn voxels over drawn rows") {
    Dataset d;
    d.mask = VoxelMask::full({3, 1, 1});
    d.X.resize(3, 3);
    d.X << 1, 3, 7,  //
        2, 6, 0,     //
        5, 5, 5;
    d.y = {1, -1, 1};
    SubsampleDraw draw;
    draw.rows = {0, 1};
    draw.per_cluster = {{0, 1}, {}, {2}};
    const ReducedProblem r = build_reduced_problem(d, draw);
    REQUIRE(r.Xr.rows() == 2);
    REQUIRE(r.Xr.cols() == 2);
    CHECK(r.Xr(0, 0) == doctest::Approx(2.0));
    CHECK(r.Xr(1, 0) == doctest::Approx(4.0));
    CHECK(r.Xr(0, 1) == 7.0);
    CHECK(r.Xr(1, 1) == 0.0);
    CHECK(r.yr == std::vector<int>{1, -1});
    CHECK(r.col_map == std::vector<std::vector<Index>>{{0, 1}, {2}});
}

TEST_CASE("reduced problem on random draws") {
    std::mt19937_64 rng(11);
    Dataset d;
    d.mask = VoxelMask::full({6, 6, 3});
    d.y = testing::random_labels(rng, 30, 3);
    d.X = testing::random_matrix(rng, 30, d.mask.size());
    const Clustering c = tiles(d.mask, 3);
    const BlockSampler sampler(d.mask, c);
    SubsampleConfig cfg;
    cfg.block_edge = 2;
    cfg.voxel_rate = 0.15;
    cfg.seed = 4;
    for (int b = 0; b < 20; ++b) {
        const SubsampleDraw draw = make_draw(d, sampler, cfg, b);
        const ReducedProblem r = build_reduced_problem(d, draw);
        Index nonempty = 0, total = 0;
        for (const auto& g : draw.per_cluster) {
            nonempty += !g.empty();
            total += g.size();
        }
        CHECK(static_cast<Index>(r.Xr.cols()) == nonempty);
        CHECK(static_cast<int>(r.Xr.cols()) <= c.q);
        Index mapped = 0;
        for (const auto& m : r.col_map) mapped += m.size();
        CHECK(mapped == total);
        for (Eigen::Index k = 0; k < r.Xr.cols(); ++k)
            for (Eigen::Index i = 0; i < r.Xr.rows(); ++i) {
                double m = 0;
                for (Index j : r.col_map[static_cast<std::size_t>(k)])
                    m += d.X(static_cast<Eigen::Index>(draw.rows[static_cast<std::size_t>(i)]), static_cast<Eigen::Index>(j));
                m /= static_cast<double>(r.col_map[static_cast<std::size_t>(k)].size());
                CHECK(r.Xr(i, k) == doctest::Approx(m).epsilon(1e-12));
            }
    }
}

TEST_CASE("select_columns rules") {
    Vector w(5);
    w << 0.0, -3.0, 1e-9, 2.0, -0.5;
    RSSConfig cfg;
    CHECK(select_columns(w, cfg) == std::vector<Index>{1, 3, 4});
    cfg.select_rule = SelectRule::top_k;
    cfg.top_k = 2;
    CHECK(select_columns(w, cfg) == std::vector<Index>{1, 3});
    cfg.top_k = 10;
    CHECK(select_columns(w, cfg) == std::vector<Index>{1, 3, 4});
}

TEST_CASE("config validation") {
    RSSConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.alpha_fraction = 0.0;
    CHECK_THROWS_AS(cfg.validate(), DataError);
    cfg.alpha_fraction = 1.5;
    CHECK_THROWS_AS(cfg.validate(), DataError);
    cfg.alpha_fraction = 1.0;
    cfg.select_rule = SelectRule::top_k;
    cfg.top_k = 0;
    CHECK_THROWS_AS(cfg.validate(), DataError);
}

TEST_CASE("single draw with one selected super-voxel") {
    const SynthOutput s = generate_multicenter(small_planted(3.0, 5));
    const Dataset& d = s.centers.datasets[0];
    RSSConfig cfg = quick_config(9, 1);
    cfg.subsample.block_edge = 1;
    cfg.alpha_fraction = 0.05;
    // Restrict to the planted box so the single super-voxel carries signal.
    Dataset box;
    box.mask = VoxelMask(d.mask.dims(), [&] {
        std::vector<Coord> v;
        for (Index j : s.truth.true_support.indices) v.push_back(d.mask.coord(j));
        return v;
    }());
    box.y = d.y;
    box.X.resize(d.X.rows(), static_cast<Eigen::Index>(box.mask.size()));
    for (Index k = 0; k < box.mask.size(); ++k)
        box.X.col(static_cast<Eigen::Index>(k)) = d.X.col(static_cast<Eigen::Index>(s.truth.true_support.indices[k]));
    const ScoreMap m = rss_run(box, one_cluster(box.mask.size()), cfg);
    CHECK(m.draws == 1);
    Index drawn = 0;
    for (Index j = 0; j < m.size(); ++j) {
        const double sc = m.scores(static_cast<Eigen::Index>(j));
        if (m.included[j] == 1) {
            ++drawn;
            CHECK(sc == 1.0);
        } else {
            CHECK(sc == 0.0);
        }
    }
    CHECK(drawn == cluster_quota(cfg.subsample.voxel_rate, box.mask.size()));
}

TEST_CASE("alpha at alpha_max selects nothing on null data") {
    const SynthOutput s = generate_multicenter(small_planted(0.0, 2));
    const Dataset& d = s.centers.datasets[0];
    RSSConfig cfg = quick_config(1, 20);
    cfg.alpha_fraction = 1.0;
    const ScoreMap m = rss_run(d, tiles(d.mask, 2), cfg);
    CHECK(m.scores.maxCoeff() == 0.0);
    const ScoreMap r = randomized_l1_run(d, cfg);
    CHECK(r.scores.maxCoeff() == 0.0);
}

TEST_CASE("score map accounting, determinism and thread invariance") {
    const SynthOutput s = generate_multicenter(small_planted(1.5, 3));
    const Dataset& d = s.centers.datasets[0];
    const Clustering c = tiles(d.mask, 2);
    RSSConfig cfg = quick_config(21, 30);
    const ScoreMap a = rss_run(d, c, cfg);
    CHECK_NOTHROW(a.validate());
    for (Index j = 0; j < a.size(); ++j)
        if (a.included[j] == 0) CHECK(a.scores(static_cast<Eigen::Index>(j)) == 0.0);
    CHECK(rss_run(d, c, cfg) == a);
    for (unsigned t : {2u, 3u, 8u}) {
        cfg.threads = t;
        CHECK(rss_run(d, c, cfg) == a);
    }
    cfg.threads = 1;
    const ScoreMap r = randomized_l1_run(d, cfg);
    CHECK_NOTHROW(r.validate());
    cfg.threads = 4;
    CHECK(randomized_l1_run(d, cfg) == r);
    cfg.subsample.seed = 22;
    CHECK_FALSE(rss_run(d, c, cfg) == a);
}

TEST_CASE("singleton clusters at full rates reduce to one L1 solve") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const SynthOutput s = generate_multicenter(small_planted(1.0, seed));
        const Dataset& d = s.centers.datasets[0];
        RSSConfig cfg = quick_config(seed, 1);
        cfg.subsample.voxel_rate = 1.0;
        cfg.subsample.row_rate = 1.0;
        cfg.subsample.block_edge = 1;
        const ScoreMap m = rss_run(d, singletons(d.p()), cfg);

        SolverConfig sc = cfg.solver;
        sc.alpha = cfg.alpha_fraction * compute_alpha_max(d.X, d.y, sc.standardize);
        const SolveResult full = solve_l1_logistic(d.X, d.y, sc);
        const auto expect = select_columns(full.weights.w, cfg);
        std::vector<Index> got;
        for (Index j = 0; j < m.size(); ++j)
            if (m.selected[j]) got.push_back(j);
        CHECK(got == expect);
        CHECK(!got.empty());

        const ScoreMap r = randomized_l1_run(d, cfg);
        std::vector<Index> got_r;
        for (Index j = 0; j < r.size(); ++j)
            if (r.selected[j]) got_r.push_back(j);
        CHECK(got_r == expect);
    }
}

TEST_CASE("mean score on the planted box grows with effect size") {
    const std::vector<double> effects{0.0, 2.0, 4.0};
    std::vector<double> mean(effects.size(), 0.0);
    for (std::uint64_t seed = 1; seed <= 5; ++seed)
        for (std::size_t e = 0; e < effects.size(); ++e) {
            const SynthOutput s = generate_multicenter(small_planted(effects[e], seed));
            const Dataset& d = s.centers.datasets[0];
            const ScoreMap m = rss_run(d, cluster_voxels(d, 40, seed), quick_config(seed));
            mean[e] += mean_over(m.scores, s.truth.true_support) / 5.0;
        }
    CHECK(mean[0] <= mean[1]);
    CHECK(mean[1] <= mean[2]);
    CHECK(mean[2] > 0.9);
}

TEST_CASE("planted voxels score above the null voxels at full scale") {
    // One center of the 20^3 acceptance data at default settings.
    const SynthOutput data = generate_multicenter(acceptance::planted_data(7));
    const Dataset& d = data.centers.datasets[0];
    const PipelineConfig cfg = acceptance::default_pipeline(7);
    RSSConfig rc = cfg.rss;
    rc.subsample.seed = 7;
    const ScoreMap m = rss_run(d, cluster_for(d, cfg), rc);
    double in = 0;
    std::vector<double> null;
    for (Index j = 0; j < d.p(); ++j) {
        const double s = m.scores(static_cast<Eigen::Index>(j));
        if (data.truth.true_support.contains(j)) in += s;
        else null.push_back(s);
    }
    in /= static_cast<double>(data.truth.true_support.size());
    std::sort(null.begin(), null.end());
    const double q99 = null[static_cast<std::size_t>(0.99 * static_cast<double>(null.size()))];
    CHECK(in >= 0.5);
    CHECK(in > q99);
}

TEST_CASE("score map round trip") {
    const SynthOutput s = generate_multicenter(small_planted(1.0, 8));
    const Dataset& d = s.centers.datasets[0];
    const ScoreMap m = rss_run(d, tiles(d.mask, 2), quick_config(3, 10));
    testing::TempDir dir("score");
    write_score_map(m, dir / "a.score");
    const ScoreMap back = read_score_map(dir / "a.score");
    CHECK(back.scores == m.scores);
    CHECK(back.included == m.included);
    CHECK(back.selected == m.selected);
    CHECK_NOTHROW(back.validate());

    std::ofstream(dir / "bad.score") << "RSSSCORE 1 2\n0.5 1 1\n";
    CHECK_THROWS_AS(read_score_map(dir / "bad.score"), DataError);
    std::ofstream(dir / "hdr.score") << "NOPE 1 1\n0 0 0\n";
    CHECK_THROWS_AS(read_score_map(dir / "hdr.score"), DataError);
}
