#include "rss/pipeline.hpp"

#include "rss/random.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace rss {

const std::vector<Method>& all_methods() {
    static const std::vector<Method> m{Method::ttest,        Method::l2_logistic, Method::l2_svm,
                                       Method::l1,           Method::randomized_l1, Method::rss};
    return m;
}

std::string method_name(Method m) {
    switch (m) {
        case Method::rss: return "rss";
        case Method::randomized_l1: return "randomized_l1";
        case Method::l1: return "l1";
        case Method::l2_logistic: return "l2_logistic";
        case Method::l2_svm: return "l2_svm";
        case Method::ttest: return "ttest";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    for (Method m : all_methods())
        if (method_name(m) == name) return m;
    throw ConfigError("unknown method '" + name + "'");
}

void PipelineConfig::validate() const {
    rss.validate();
    if (q < 1) throw ConfigError("q must be at least 1");
    if (!(p0 > 0.0 && p0 < 1.0)) throw ConfigError("p0 must be in (0, 1)");
    if (!(l1_alpha_fraction > 0.0 && l1_alpha_fraction <= 1.0)) throw ConfigError("l1_alpha_fraction must be in (0, 1]");
    if (!(l2_alpha > 0.0)) throw ConfigError("l2_alpha must be positive");
    if (!(svm_alpha > 0.0)) throw ConfigError("svm_alpha must be positive");
    if (!(ttest_level > 0.0 && ttest_level < 1.0)) throw ConfigError("ttest_level must be in (0, 1)");
    if (baseline_max_iters < 1) throw ConfigError("baseline_max_iters must be at least 1");
}

double choose_threshold(const Vector& values, const PipelineConfig& cfg) {
    if (cfg.threshold_rule == ThresholdRule::gap) return gap_threshold(values);
    return std::max(0.0, laplace_icdf(cfg.p0, fit_laplace(values, cfg.laplace_mode)));
}

MethodResult run_method(const Dataset& dataset, const PipelineConfig& cfg, const Clustering* clustering) {
    cfg.validate();
    MethodResult r;
    if (cfg.method == Method::ttest) {
        const TTestResult tt = two_sample_ttest(dataset.X, dataset.y);
        r.values = tt.t;
        std::vector<Index> idx;
        for (Eigen::Index j = 0; j < tt.p.size(); ++j)
            if (tt.p(j) < cfg.ttest_level) idx.push_back(static_cast<Index>(j));
        r.support = SupportSet(std::move(idx), dataset.p());
        r.theta = cfg.ttest_level;
        return r;
    }

    if (cfg.method == Method::rss || cfg.method == Method::randomized_l1) {
        RSSConfig rc = cfg.rss;
        rc.subsample.seed = cfg.seed;
        ScoreMap s;
        if (cfg.method == Method::rss) {
            if (!clustering) throw DataError("rss needs a clustering");
            s = rss_run(dataset, *clustering, rc);
        } else {
            s = randomized_l1_run(dataset, rc);
        }
        r.values = s.scores;
        r.flagged = s.flagged;
        r.scores = std::move(s);
    } else {
        SolverConfig sc = cfg.rss.solver;
        sc.max_iters = cfg.baseline_max_iters;
        SolveResult res;
        if (cfg.method == Method::l1) {
            sc.alpha = cfg.l1_alpha_fraction * compute_alpha_max(dataset.X, dataset.y, sc.standardize);
            res = solve_l1_logistic(dataset.X, dataset.y, sc);
        } else if (cfg.method == Method::l2_logistic) {
            sc.standardize = false;
            sc.alpha = cfg.l2_alpha;
            res = solve_l2_logistic(dataset.X, dataset.y, sc);
        } else {
            sc.standardize = false;
            sc.alpha = cfg.svm_alpha;
            res = solve_l2_svm(dataset.X, dataset.y, sc);
        }
        r.values = res.weights.w;
        r.flagged = !res.converged;
    }

    if (r.values.cwiseAbs().maxCoeff() == 0.0) {
        r.support = SupportSet({}, dataset.p());
        return r;
    }
    r.theta = choose_threshold(r.values, cfg);
    r.support = threshold_support(r.values, r.theta);
    return r;
}

FalsePositiveResult estimate_false_positives(const Dataset& dataset, const PipelineConfig& cfg,
                                             const Clustering* clustering, const SupportSet& final_support,
                                             const std::vector<std::vector<Index>>& permutations) {
    FalsePositiveResult out;
    if (final_support.empty()) return out;
    for (const auto& perm : permutations) {
        if (perm.size() != dataset.n()) throw DataError("permutation length does not match sample count");
        Dataset shuffled = dataset;
        for (Index i = 0; i < perm.size(); ++i) shuffled.y[i] = dataset.y[perm[i]];
        const MethodResult r = run_method(shuffled, cfg, clustering);
        out.inside.push_back(intersect(r.support, final_support).size());
        out.null_sizes.push_back(r.support.size());
    }
    if (!out.inside.empty()) {
        const double mean = static_cast<double>(std::accumulate(out.inside.begin(), out.inside.end(), Index{0})) /
                            static_cast<double>(out.inside.size());
        out.ratio = mean / static_cast<double>(final_support.size());
    }
    return out;
}

FalsePositiveResult estimate_false_positives(const Dataset& dataset, const PipelineConfig& cfg,
                                             const Clustering* clustering, const SupportSet& final_support, int n_perm,
                                             std::uint64_t seed) {
    if (n_perm < 1) throw DataError("n_perm must be at least 1");
    std::vector<std::vector<Index>> perms(static_cast<std::size_t>(n_perm));
    for (std::size_t k = 0; k < perms.size(); ++k) {
        Rng rng = make_rng(seed, {stream::kPermutation, k});
        perms[k].resize(dataset.n());
        std::iota(perms[k].begin(), perms[k].end(), Index{0});
        std::shuffle(perms[k].begin(), perms[k].end(), rng);
    }
    return estimate_false_positives(dataset, cfg, clustering, final_support, perms);
}

Clustering cluster_for(const Dataset& dataset, const PipelineConfig& cfg) {
    return cluster_voxels(dataset, cfg.q, cfg.seed, 300, cfg.rss.threads);
}

std::vector<MethodComparison> compare_methods(const CenterCollection& centers, const std::vector<Clustering>& clusterings,
                                              const PipelineConfig& base, const std::vector<Method>& methods) {
    std::vector<MethodComparison> out;
    for (Method m : methods) {
        PipelineConfig cfg = base;
        cfg.method = m;
        MethodComparison mc;
        mc.method = m;
        for (std::size_t c = 0; c < centers.datasets.size(); ++c) {
            const Clustering* cl = m == Method::rss ? &clusterings.at(c) : nullptr;
            mc.per_center.push_back(run_method(centers.datasets[c], cfg, cl));
            mc.supports.push_back(mc.per_center.back().support);
            mc.flagged = mc.flagged || mc.per_center.back().flagged;
        }
        mc.overlap = overlap(mc.supports, static_cast<int>(mc.supports.size()));
        out.push_back(std::move(mc));
    }
    return out;
}

namespace {

std::vector<Box> parse_boxes(const Config& c) {
    // "x,y,z:ex,ey,ez; ..." with edges optional (defaults to 1).
    std::vector<Box> boxes;
    std::istringstream all(c.str("true_clusters"));
    for (std::string item; std::getline(all, item, ';');) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        for (char& ch : item)
            if (ch == ',' || ch == ':') ch = ' ';
        std::istringstream in(item);
        Box b;
        if (!(in >> b.corner.x >> b.corner.y >> b.corner.z)) throw ConfigError("config key 'true_clusters': bad box '" + item + "'");
        in >> b.edges[0] >> b.edges[1] >> b.edges[2];
        boxes.push_back(b);
    }
    return boxes;
}

template <class T>
T checked_cast(const std::string& key, long v, long lo) {
    if (v < lo) throw ConfigError("config key '" + key + "' must be at least " + std::to_string(lo));
    return static_cast<T>(v);
}

}  // namespace

SynthConfig synth_config_from(const Config& c) {
    SynthConfig s;
    const auto dims = c.nums("dims");
    if (dims.size() != 3) throw ConfigError("config key 'dims' needs three integers");
    for (int k = 0; k < 3; ++k) s.dims[static_cast<std::size_t>(k)] = static_cast<int>(dims[static_cast<std::size_t>(k)]);
    s.n_centers = checked_cast<int>("n_centers", c.integer("n_centers"), 1);
    s.n_per_center = checked_cast<int>("n_per_center", c.integer("n_per_center"), 2);
    s.true_clusters = parse_boxes(c);
    s.effect_size = c.num_or("effect_size", s.effect_size);
    s.noise_sigma = c.num_or("noise_sigma", s.noise_sigma);
    if (c.has("center_scale_range")) {
        const auto r = c.nums("center_scale_range");
        if (r.size() != 2) throw ConfigError("config key 'center_scale_range' needs two numbers");
        s.center_scale_range = {r[0], r[1]};
    }
    s.center_shift_sigma = c.num_or("center_shift_sigma", s.center_shift_sigma);
    s.seed = static_cast<std::uint64_t>(c.integer_or("seed", 0));
    try {
        s.validate();
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    return s;
}

PipelineConfig pipeline_config_from(const Config& c) {
    PipelineConfig p;
    p.method = parse_method(c.str_or("method", "rss"));
    p.q = checked_cast<int>("q", c.integer_or("q", p.q), 1);
    auto& sub = p.rss.subsample;
    sub.row_rate = c.num_or("row_rate", sub.row_rate);
    sub.voxel_rate = c.num_or("voxel_rate", sub.voxel_rate);
    sub.block_edge = checked_cast<int>("block_edge", c.integer_or("block_edge", sub.block_edge), 1);
    sub.draws = checked_cast<int>("draws", c.integer_or("draws", sub.draws), 1);
    p.rss.alpha_fraction = c.num_or("alpha_fraction", p.rss.alpha_fraction);
    const std::string rule = c.str_or("select_rule", "nonzero");
    if (rule == "nonzero") {
        p.rss.select_rule = SelectRule::nonzero;
    } else if (rule == "top_k") {
        p.rss.select_rule = SelectRule::top_k;
        p.rss.top_k = checked_cast<int>("top_k", c.integer("top_k"), 1);
    } else {
        throw ConfigError("config key 'select_rule': expected nonzero or top_k");
    }
    p.rss.magnitude_floor = c.num_or("magnitude_floor", p.rss.magnitude_floor);
    p.rss.solver.max_iters = checked_cast<int>("max_iters", c.integer_or("max_iters", p.rss.solver.max_iters), 1);
    p.rss.solver.tol = c.num_or("tol", p.rss.solver.tol);
    p.rss.solver.kkt_tol = c.num_or("kkt_tol", p.rss.solver.kkt_tol);
    p.rss.solver.standardize = c.boolean_or("standardize", p.rss.solver.standardize);
    p.p0 = c.num_or("p0", p.p0);
    const std::string mode = c.str_or("laplace_fit", "moment");
    if (mode == "moment") p.laplace_mode = LaplaceMode::moment;
    else if (mode == "mle") p.laplace_mode = LaplaceMode::mle;
    else throw ConfigError("config key 'laplace_fit': expected moment or mle");
    const std::string thr = c.str_or("threshold", "laplace");
    if (thr == "laplace") p.threshold_rule = ThresholdRule::laplace;
    else if (thr == "gap") p.threshold_rule = ThresholdRule::gap;
    else throw ConfigError("config key 'threshold': expected laplace or gap");
    p.l1_alpha_fraction = c.num_or("l1_alpha_fraction", p.l1_alpha_fraction);
    p.l2_alpha = c.num_or("l2_alpha", p.l2_alpha);
    p.svm_alpha = c.num_or("svm_alpha", p.svm_alpha);
    p.ttest_level = c.num_or("ttest_level", p.ttest_level);
    p.baseline_max_iters =
        checked_cast<int>("baseline_max_iters", c.integer_or("baseline_max_iters", p.baseline_max_iters), 1);
    p.seed = static_cast<std::uint64_t>(c.integer_or("seed", 0));
    try {
        p.validate();
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    return p;
}

PredictionConfig prediction_config_from(const Config& c) {
    PredictionConfig p;
    p.n_splits = checked_cast<int>("n_splits", c.integer_or("n_splits", p.n_splits), 1);
    p.train_fraction = c.num_or("train_fraction", p.train_fraction);
    if (c.has("alpha_grid")) p.alpha_grid = c.nums("alpha_grid");
    p.seed = static_cast<std::uint64_t>(c.integer_or("seed", 0));
    return p;
}

}  // namespace rss
