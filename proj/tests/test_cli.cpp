#include "rss/cli.hpp"
#include "rss/data_model.hpp"
#include "rss/engine.hpp"
#include "rss/synthgen.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <fstream>
#include <iterator>
#include <sstream>

using namespace rss;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome cli(std::vector<std::string> args) {
    args.insert(args.begin(), "rss");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kSynth =
    "dims = 8 8 4\n"
    "n_centers = 4\n"
    "n_per_center = 40\n"
    "true_clusters = 1,1,0:3,3,3; 5,5,1:2,2,2\n"
    "effect_size = 2\n"
    "seed = 5\n";

const char* kRun =
    "method = rss\n"
    "q = 30\n"
    "draws = 30\n"
    "block_edge = 3\n"
    "voxel_rate = 0.2\n"
    "seed = 2\n";

std::vector<std::string> centers(const fs::path& dir) {
    std::vector<std::string> out;
    for (int c = 0; c < 4; ++c) out.push_back((dir / center_name(c)).string());
    return out;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"frobnicate"}).code == kExitUsage);
    CHECK(cli({"run", "--no-such-flag"}).code == kExitUsage);
    CHECK(cli({"run", "--config", "/nonexistent/run.cfg", "x"}).code == kExitUsage);
    CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("synth writes one triple per center plus ground truth, reproducibly") {
    testing::TempDir dir("cli_synth");
    write_text(dir / "synth.cfg", kSynth);
    const auto a = cli({"synth", "--config", (dir / "synth.cfg").string(), "--out", (dir / "a").string()});
    REQUIRE(a.code == kExitOk);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir / "a")) files += e.is_regular_file();
    CHECK(files == 13);
    CHECK(fs::exists(dir / "a" / "truth.gt"));
    for (const auto& c : centers(dir / "a")) CHECK_NOTHROW(load_dataset(DatasetPaths::from_prefix(c)));

    REQUIRE(cli({"synth", "--config", (dir / "synth.cfg").string(), "--out", (dir / "b").string()}).code == kExitOk);
    for (const auto& e : fs::directory_iterator(dir / "a"))
        CHECK(slurp(e.path()) == slurp(dir / "b" / e.path().filename()));

    REQUIRE(cli({"synth", "--config", (dir / "synth.cfg").string(), "--seed", "6", "--out", (dir / "c").string()}).code ==
            kExitOk);
    CHECK(slurp(dir / "a" / "center00.mat") != slurp(dir / "c" / "center00.mat"));
}

TEST_CASE("synth reports the missing key") {
    testing::TempDir dir("cli_bad");
    write_text(dir / "bad.cfg", "n_centers = 2\nn_per_center = 4\ntrue_clusters = 1,1,1\n");
    const auto r = cli({"synth", "--config", (dir / "bad.cfg").string(), "--out", dir.path().string()});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("dims") != std::string::npos);
}

TEST_CASE("run, aggregate, report, compare") {
    testing::TempDir dir("cli_run");
    write_text(dir / "synth.cfg", kSynth);
    write_text(dir / "run.cfg", kRun);
    REQUIRE(cli({"synth", "--config", (dir / "synth.cfg").string(), "--out", (dir / "data").string()}).code == kExitOk);

    std::vector<std::string> args{"run", "--config", (dir / "run.cfg").string(), "--out", (dir / "r1").string()};
    for (const auto& c : centers(dir / "data")) args.push_back(c);
    REQUIRE(cli(args).code == kExitOk);
    args[4] = (dir / "r2").string();
    args.push_back("--threads");
    args.push_back("3");
    REQUIRE(cli(args).code == kExitOk);
    for (const auto& e : fs::directory_iterator(dir / "r1"))
        CHECK(slurp(e.path()) == slurp(dir / "r2" / e.path().filename()));
    CHECK(fs::exists(dir / "r1" / "center00.rss.score"));
    CHECK(fs::exists(dir / "r1" / "center00.rss.csv"));
    CHECK_NOTHROW(read_score_map(dir / "r1" / "center00.rss.score").validate());

    std::vector<std::string> agg{"aggregate", "-S", "4", "--out", (dir / "agg").string()};
    for (int c = 0; c < 4; ++c) agg.push_back((dir / "r1" / (center_name(c) + ".rss.sup")).string());
    const auto a = cli(agg);
    REQUIRE(a.code == kExitOk);
    CHECK(slurp(dir / "agg" / "overlap.csv").rfind("S,count\n1,", 0) == 0);
    agg[2] = "5";
    CHECK(cli(agg).code == kExitUsage);

    const auto rep = cli({"report", "--scores", (dir / "r1" / "center00.rss.score").string(), "--dataset",
                          centers(dir / "data")[0], "--out", (dir / "rep").string()});
    REQUIRE(rep.code == kExitOk);
    CHECK(fs::exists(dir / "rep" / "center00.rss.voxels.csv"));
    for (int z = 0; z < 4; ++z) CHECK(fs::exists(dir / "rep" / ("center00.rss_z00" + std::to_string(z) + ".pgm")));
    CHECK(slurp(dir / "rep" / "center00.rss_z000.pgm").rfind("P5\n8 8\n255\n", 0) == 0);
    CHECK(slurp(dir / "rep" / "center00.rss_z000.pgm").size() == std::string("P5\n8 8\n255\n").size() + 64);

    write_text(dir / "cmp.cfg", std::string(kRun) + "methods = ttest l1 rss\n");
    std::vector<std::string> cmp{"compare", "--config", (dir / "cmp.cfg").string(), "--out", (dir / "cmp").string()};
    for (const auto& c : centers(dir / "data")) cmp.push_back(c);
    const auto c1 = cli(cmp);
    REQUIRE(c1.code == kExitOk);
    CHECK_FALSE(fs::exists(dir / "cmp" / "metrics.csv"));
    std::istringstream table(c1.out);
    std::vector<std::string> lines;
    for (std::string l; std::getline(table, l);) lines.push_back(l);
    REQUIRE(lines.size() == 1 + 4 + 4);
    CHECK(lines[0] == "row,ttest,l1,rss");
    CHECK(lines[5].rfind("overlapped(4),", 0) == 0);
    cmp.push_back("--truth");
    cmp.push_back((dir / "data" / "truth.gt").string());
    REQUIRE(cli(cmp).code == kExitOk);
    CHECK(slurp(dir / "cmp" / "metrics.csv").rfind("method,S,selected,precision,recall,f1\n", 0) == 0);
}

TEST_CASE("aggregate on toy supports") {
    testing::TempDir dir("cli_agg");
    const std::vector<std::vector<Index>> toy{{1, 2, 3}, {2, 3, 4}, {3, 4, 5}};
    std::vector<std::string> files;
    for (std::size_t k = 0; k < toy.size(); ++k) {
        files.push_back((dir / ("s" + std::to_string(k) + ".sup")).string());
        write_support(SupportSet(toy[k], 6), files.back());
    }
    auto run = [&](int S) {
        std::vector<std::string> args{"aggregate", "-S", std::to_string(S), "--out", dir.path().string()};
        args.insert(args.end(), files.begin(), files.end());
        return cli(args);
    };
    const auto two = run(2);
    REQUIRE(two.code == kExitOk);
    CHECK(two.out == "overlapped(2) 3\n2\n3\n4\n");
    CHECK(read_support(dir / "overlap_S2.sup").indices == std::vector<Index>{2, 3, 4});
    CHECK(slurp(dir / "overlap.csv") == "S,count\n1,5\n2,3\n3,1\n");
    CHECK(run(1).out == "overlapped(1) 5\n1\n2\n3\n4\n5\n");
    CHECK(run(4).code == kExitUsage);
    CHECK(run(0).code == kExitUsage);
}

TEST_CASE("nonconverged draws exit 3") {
    testing::TempDir dir("cli_flag");
    write_text(dir / "synth.cfg", kSynth);
    write_text(dir / "run.cfg", std::string(kRun) + "max_iters = 1\n");
    REQUIRE(cli({"synth", "--config", (dir / "synth.cfg").string(), "--out", dir.path().string()}).code == kExitOk);
    const auto r = cli({"run", "--config", (dir / "run.cfg").string(), "--out", dir.path().string(), centers(dir.path())[0]});
    CHECK(r.code == kExitNumerical);
    CHECK(r.out.find("FLAGGED") != std::string::npos);
}

TEST_CASE("fpr and predict") {
    testing::TempDir dir("cli_fpr");
    write_text(dir / "synth.cfg", kSynth);
    write_text(dir / "run.cfg", std::string(kRun) + "n_splits = 5\n");
    REQUIRE(cli({"synth", "--config", (dir / "synth.cfg").string(), "--out", dir.path().string()}).code == kExitOk);
    write_support(SupportSet({}, 256), dir / "empty.sup");
    const auto f = cli({"fpr", "--config", (dir / "run.cfg").string(), "--support", (dir / "empty.sup").string(),
                        "--n-perm", "2", "--out", dir.path().string(), centers(dir.path())[0]});
    REQUIRE(f.code == kExitOk);
    CHECK(f.out == "center00 ratio=0\n");
    CHECK(fs::exists(dir / "fpr.csv"));

    write_support(SupportSet({9, 10, 11}, 256), dir / "three.sup");
    std::vector<std::string> p{"predict", "--config", (dir / "run.cfg").string(), "--support", (dir / "three.sup").string(),
                               "--random"};
    for (const auto& c : centers(dir.path())) p.push_back(c);
    const auto r = cli(p);
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.rfind("support mean_acc=", 0) == 0);
    CHECK(r.out.find("\nrandom mean_acc=") != std::string::npos);
    p[4] = (dir / "empty.sup").string();
    CHECK(cli(p).code == kExitUsage);
}
