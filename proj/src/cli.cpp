#include "rss/cli.hpp"

#include "rss/parallel.hpp"
#include "rss/pipeline.hpp"
#include "rss/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;

namespace rss {

namespace {

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    unsigned threads = 0;
};

Config load_config(const Globals& g, bool required) {
    Config c;
    if (!g.config_path.empty()) c = Config::load(g.config_path);
    else if (required) throw ConfigError("--config is required");
    if (g.seed) c.set("seed", std::to_string(*g.seed));
    return c;
}

fs::path out_dir(const Globals& g) {
    fs::path d(g.out_dir);
    fs::create_directories(d);
    return d;
}

PipelineConfig pipeline_from(const Config& c, const Globals& g) {
    PipelineConfig p = pipeline_config_from(c);
    p.rss.threads = resolve_threads(g.threads);
    return p;
}

std::vector<std::string> dataset_prefixes(const std::vector<std::string>& positional, const Config& c) {
    if (!positional.empty()) return positional;
    if (c.has("datasets")) return c.words("datasets");
    throw ConfigError("no datasets given (positional prefixes or config key 'datasets')");
}

CenterCollection load_centers(const std::vector<std::string>& prefixes) {
    CenterCollection cc;
    for (const auto& p : prefixes) cc.datasets.push_back(load_dataset(DatasetPaths::from_prefix(p)));
    cc.validate();
    return cc;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    return out;
}

int cmd_synth(const Globals& g, std::ostream& out) {
    const Config c = load_config(g, true);
    const SynthConfig sc = synth_config_from(c);
    const auto dir = out_dir(g);
    const SynthOutput s = generate_multicenter(sc);
    for (const auto& d : s.centers.datasets) {
        save_dataset(d, DatasetPaths::from_prefix(dir / d.center_id));
        out << (dir / d.center_id).string() << '\n';
    }
    write_ground_truth(s.truth, dir / "truth.gt");
    return kExitOk;
}

int cmd_cluster(const Globals& g, const std::vector<std::string>& datasets, std::ostream& out) {
    const Config c = load_config(g, false);
    const PipelineConfig pc = pipeline_from(c, g);
    const auto dir = out_dir(g);
    for (const auto& prefix : dataset_prefixes(datasets, c)) {
        const Dataset d = load_dataset(DatasetPaths::from_prefix(prefix));
        const Clustering cl = cluster_for(d, pc);
        const auto path = dir / (d.center_id + ".clu");
        write_clustering(cl, path);
        out << path.string() << " q=" << cl.q << " inertia=" << std::setprecision(10) << cl.inertia << '\n';
    }
    return kExitOk;
}

void emit_method(const Dataset& d, const MethodResult& r, Method m, const fs::path& dir, std::ostream& out) {
    const std::string stem = d.center_id + "." + method_name(m);
    write_support(r.support, dir / (stem + ".sup"));
    if (r.scores) write_score_map(*r.scores, dir / (stem + ".score"));
    auto csv = open_out(dir / (stem + ".csv"));
    write_voxel_csv(d.mask, r.values, r.support, csv);
    out << d.center_id << ' ' << method_name(m) << " selected=" << r.support.size() << " theta=" << r.theta
        << (r.flagged ? " FLAGGED" : "") << '\n';
}

int cmd_run(const Globals& g, const std::vector<std::string>& datasets, std::ostream& out) {
    const Config c = load_config(g, true);
    const PipelineConfig pc = pipeline_from(c, g);
    const auto dir = out_dir(g);
    bool flagged = false;
    for (const auto& prefix : dataset_prefixes(datasets, c)) {
        const Dataset d = load_dataset(DatasetPaths::from_prefix(prefix));
        std::optional<Clustering> cl;
        if (pc.method == Method::rss) {
            cl = cluster_for(d, pc);
            write_clustering(*cl, dir / (d.center_id + ".clu"));
        }
        const MethodResult r = run_method(d, pc, cl ? &*cl : nullptr);
        emit_method(d, r, pc.method, dir, out);
        flagged = flagged || r.flagged;
    }
    return flagged ? kExitNumerical : kExitOk;
}

int cmd_aggregate(const Globals& g, int S, const std::vector<std::string>& files, std::ostream& out) {
    if (files.empty()) throw ConfigError("aggregate needs at least one support file");
    std::vector<SupportSet> supports;
    for (const auto& f : files) supports.push_back(read_support(f));
    if (S < 1 || S > static_cast<int>(supports.size()))
        throw ConfigError("S must be in [1, " + std::to_string(supports.size()) + "]");
    const OverlapResult r = overlap(supports, S);
    const auto dir = out_dir(g);
    auto csv = open_out(dir / "overlap.csv");
    write_overlap_csv(r, csv);
    write_support(r.at_least(), dir / ("overlap_S" + std::to_string(S) + ".sup"));
    out << "overlapped(" << S << ") " << r.at_least().size() << '\n';
    for (Index j : r.at_least().indices) out << j << '\n';
    return kExitOk;
}

int cmd_compare(const Globals& g, const std::vector<std::string>& datasets, const std::string& truth_path,
                std::ostream& out) {
    const Config c = load_config(g, true);
    const PipelineConfig pc = pipeline_from(c, g);
    const CenterCollection cc = load_centers(dataset_prefixes(datasets, c));
    std::vector<Method> methods;
    if (c.has("methods"))
        for (const auto& w : c.words("methods")) methods.push_back(parse_method(w));
    else
        methods = all_methods();
    std::vector<Clustering> clusterings;
    if (std::find(methods.begin(), methods.end(), Method::rss) != methods.end())
        for (const auto& d : cc.datasets) clusterings.push_back(cluster_for(d, pc));

    const auto rows = compare_methods(cc, clusterings, pc, methods);
    const auto dir = out_dir(g);
    std::ostringstream table;
    table << "row";
    for (const auto& r : rows) table << ',' << method_name(r.method);
    table << '\n';
    for (std::size_t k = 0; k < cc.datasets.size(); ++k) {
        table << cc.datasets[k].center_id;
        for (const auto& r : rows) table << ',' << r.supports[k].size();
        table << '\n';
    }
    const int m = static_cast<int>(cc.datasets.size());
    for (int S = m; S >= 1; --S) {
        table << "overlapped(" << S << ")";
        for (const auto& r : rows) table << ',' << r.overlap.support_at.at(S).size();
        table << '\n';
    }
    for (const auto& r : rows)
        for (std::size_t k = 0; k < cc.datasets.size(); ++k)
            write_support(r.supports[k], dir / (cc.datasets[k].center_id + "." + method_name(r.method) + ".sup"));

    const std::string truth_file = !truth_path.empty() ? truth_path : c.str_or("ground_truth", "");
    if (!truth_file.empty() && fs::exists(truth_file)) {
        const GroundTruth gt = read_ground_truth(truth_file);
        auto metrics = open_out(dir / "metrics.csv");
        metrics << "method,S,selected,precision,recall,f1\n" << std::setprecision(6);
        for (const auto& r : rows)
            for (int S = m; S >= 1; --S) {
                const auto& s = r.overlap.support_at.at(S);
                const SupportScore sc = score_support(s, gt);
                metrics << method_name(r.method) << ',' << S << ',' << s.size() << ',' << sc.precision << ','
                        << sc.recall << ',' << sc.f1 << '\n';
            }
    }
    open_out(dir / "comparison.csv") << table.str();
    out << table.str();
    bool flagged = false;
    for (const auto& r : rows) flagged = flagged || r.flagged;
    return flagged ? kExitNumerical : kExitOk;
}

int cmd_fpr(const Globals& g, const std::vector<std::string>& datasets, const std::string& support_path, int n_perm,
            std::ostream& out) {
    const Config c = load_config(g, true);
    const PipelineConfig pc = pipeline_from(c, g);
    const SupportSet final_support = read_support(support_path);
    const int perms = n_perm > 0 ? n_perm : static_cast<int>(c.integer_or("n_perm", 20));
    const auto dir = out_dir(g);
    auto csv = open_out(dir / "fpr.csv");
    csv << "center,ratio,mean_inside,support_size\n" << std::setprecision(6);
    for (const auto& prefix : dataset_prefixes(datasets, c)) {
        const Dataset d = load_dataset(DatasetPaths::from_prefix(prefix));
        std::optional<Clustering> cl;
        if (pc.method == Method::rss) cl = cluster_for(d, pc);
        const auto r = estimate_false_positives(d, pc, cl ? &*cl : nullptr, final_support, perms, pc.seed);
        double mean_inside = 0;
        for (Index v : r.inside) mean_inside += static_cast<double>(v);
        if (!r.inside.empty()) mean_inside /= static_cast<double>(r.inside.size());
        csv << d.center_id << ',' << r.ratio << ',' << mean_inside << ',' << final_support.size() << '\n';
        out << d.center_id << " ratio=" << r.ratio << '\n';
    }
    return kExitOk;
}

int cmd_predict(const Globals& g, const std::vector<std::string>& datasets, const std::string& support_path,
                bool with_random, std::ostream& out) {
    const Config c = load_config(g, false);
    PredictionConfig pc = prediction_config_from(c);
    pc.threads = resolve_threads(g.threads);
    const CenterCollection cc = load_centers(dataset_prefixes(datasets, c));
    const SupportSet support = read_support(support_path);
    const auto r = evaluate_prediction(cc, support, pc);
    out << std::setprecision(6) << "support mean_acc=" << r.mean_acc << " std_acc=" << r.std_acc << '\n';
    if (with_random) {
        const SupportSet rnd = random_support(support.p, support.size(), pc.seed);
        const auto rr = evaluate_prediction(cc, rnd, pc);
        out << "random mean_acc=" << rr.mean_acc << " std_acc=" << rr.std_acc << '\n';
    }
    return kExitOk;
}

int cmd_report(const Globals& g, const std::string& scores_path, const std::string& dataset,
               const std::string& support_path, std::ostream& out) {
    const VoxelMask mask = read_mask(DatasetPaths::from_prefix(dataset).mask);
    const ScoreMap s = read_score_map(scores_path);
    if (s.size() != mask.size()) throw DataError("score map length does not match mask");
    const SupportSet sel = support_path.empty() ? SupportSet({}, mask.size()) : read_support(support_path);
    const auto dir = out_dir(g);
    const std::string stem = fs::path(scores_path).stem().string();
    auto csv = open_out(dir / (stem + ".voxels.csv"));
    write_voxel_csv(mask, s.scores, sel, csv);
    const auto slices = write_pgm_slices(mask, s.scores, dir, stem);
    out << (dir / (stem + ".voxels.csv")).string() << '\n' << slices.size() << " slices\n";
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Randomized structural sparsity: stability selection over clustered voxel blocks"};
    app.require_subcommand(1);
    Globals g;
    std::uint64_t seed_value = 0;
    auto add_globals = [&](CLI::App* sub) {
        sub->add_option("--config", g.config_path, "key = value config file");
        sub->add_option("--seed", seed_value, "overrides the config seed");
        sub->add_option("--out", g.out_dir, "output directory");
        sub->add_option("--threads", g.threads, "worker count (falls back to RSS_THREADS, then 1)");
    };

    std::vector<std::string> datasets, files;
    std::string support_path, truth_path, scores_path, dataset;
    int S = 0, n_perm = 0;
    bool with_random = false;

    auto* synth = app.add_subcommand("synth", "generate synthetic multi-center data");
    auto* cluster = app.add_subcommand("cluster", "k-means parcellation of each dataset");
    auto* run = app.add_subcommand("run", "run one method on each dataset");
    auto* aggregate = app.add_subcommand("aggregate", "overlap of support files across centers");
    auto* compare = app.add_subcommand("compare", "every method on every center, with overlap rows");
    auto* fpr = app.add_subcommand("fpr", "permutation false-positive ratio");
    auto* predict = app.add_subcommand("predict", "pooled train/test accuracy on a support");
    auto* report = app.add_subcommand("report", "per-voxel CSV and PGM slices from a score map");
    for (auto* sub : {synth, cluster, run, aggregate, compare, fpr, predict, report}) add_globals(sub);
    for (auto* sub : {cluster, run, compare, fpr, predict}) sub->add_option("datasets", datasets, "dataset prefixes");
    aggregate->add_option("-S", S, "minimum number of centers")->required();
    aggregate->add_option("supports", files, "support files")->required();
    compare->add_option("--truth", truth_path, "ground-truth file");
    fpr->add_option("--support", support_path, "reference support file")->required();
    fpr->add_option("--n-perm", n_perm, "permutations (default: config n_perm or 20)");
    predict->add_option("--support", support_path, "support file")->required();
    predict->add_flag("--random", with_random, "also score an equal-size random support");
    report->add_option("--scores", scores_path, "score map file")->required();
    report->add_option("--dataset", dataset, "dataset prefix supplying the mask")->required();
    report->add_option("--support", support_path, "selected support file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        for (auto* sub : app.get_subcommands()) out << sub->help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    for (auto* sub : {synth, cluster, run, aggregate, compare, fpr, predict, report})
        if (sub->parsed() && sub->count("--seed")) g.seed = seed_value;

    try {
        if (synth->parsed()) return cmd_synth(g, out);
        if (cluster->parsed()) return cmd_cluster(g, datasets, out);
        if (run->parsed()) return cmd_run(g, datasets, out);
        if (aggregate->parsed()) return cmd_aggregate(g, S, files, out);
        if (compare->parsed()) return cmd_compare(g, datasets, truth_path, out);
        if (fpr->parsed()) return cmd_fpr(g, datasets, support_path, n_perm, out);
        if (predict->parsed()) return cmd_predict(g, datasets, support_path, with_random, out);
        if (report->parsed()) return cmd_report(g, scores_path, dataset, support_path, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitUsage;
}

}  // namespace rss
