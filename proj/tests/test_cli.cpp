#include <doctest.h>

#include <unistd.h>

#include <cstdlib>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "alner/cli.hpp"
#include "alner/corpus.hpp"
#include "alner/synth.hpp"

namespace fs = std::filesystem;
using namespace alner;

namespace {

int invoke_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"alner"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("alner-cli-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string s(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::size_t line_count(const std::string& text) {
    std::size_t n = 0;
    for (const char c : text) n += c == '\n';
    return n;
}

// Small fixture pair shared by the CLI cases.
struct Fixture {
    TempDir dir;
    std::string train, test;
    Fixture() {
        train = dir.s("train.conll");
        test = dir.s("test.conll");
        std::ofstream(train) << serialize_conll(synth_corpus({.sentences = 160, .seed = 31}));
        std::ofstream(test) << serialize_conll(synth_corpus({.sentences = 60, .seed = 32}));
    }
    std::vector<std::string> run_args(const std::string& out) const {
        return {"run",          "--train",      train,        "--test",     test,
                "--iterations", "2",            "--trials",   "2",          "--query-size",
                "5",            "--init-size",  "10",         "--epochs",   "6",
                "--hash-dim",   "4096",         "--seed",     "11",         "--out",
                out};
    }
};

}  // namespace

TEST_CASE("cmd_run writes the pinned curve schema") {
    Fixture fx;
    std::ostringstream captured;
    std::streambuf* old = std::cout.rdbuf(captured.rdbuf());
    const int rc = invoke_cli(fx.run_args(fx.dir.s("out")));
    std::cout.rdbuf(old);
    REQUIRE(rc == 0);
    CHECK(captured.str().find("final_f1_mean=") != std::string::npos);

    const std::string curve = slurp(fx.dir.s("out/curve.csv"));
    CHECK(curve.rfind("iteration,labeled_sentences,labeled_tokens,f1_mean,f1_ci95,gamma_mean,"
                      "gamma_ci95,gamma_flag\n",
                      0) == 0);
    CHECK(line_count(curve) == 1 + 3);  // header + iterations 0..2
    CHECK(curve.find('\r') == std::string::npos);
    CHECK(curve.back() == '\n');

    const std::string runs = slurp(fx.dir.s("out/runs.csv"));
    CHECK(line_count(runs) == 1 + 2 * 3);  // two trials, three records each

    const std::string cfg = slurp(fx.dir.s("out/effective_config"));
    CHECK(cfg.find("acquisition=lc\n") != std::string::npos);
    CHECK(cfg.find("query-size=5\n") != std::string::npos);
}

TEST_CASE("cmd_run refuses to overwrite without --force and is byte-deterministic") {
    Fixture fx;
    REQUIRE(invoke_cli(fx.run_args(fx.dir.s("out"))) == 0);
    const std::string first = slurp(fx.dir.s("out/curve.csv"));

    CHECK(invoke_cli(fx.run_args(fx.dir.s("out"))) == 1);  // refused

    auto args = fx.run_args(fx.dir.s("out"));
    args.push_back("--force");
    REQUIRE(invoke_cli(args) == 0);
    CHECK(slurp(fx.dir.s("out/curve.csv")) == first);
    CHECK(slurp(fx.dir.s("out/runs.csv")) == slurp(fx.dir.s("out/runs.csv")));
}

TEST_CASE("cmd_run exits 2 on missing data without partial outputs") {
    Fixture fx;
    auto args = fx.run_args(fx.dir.s("out-missing"));
    args[2] = fx.dir.s("absent.conll");
    CHECK(invoke_cli(args) == 2);
    CHECK(!fs::exists(fx.dir.s("out-missing")));
}

TEST_CASE("cmd_run rejects bad config with exit 1") {
    Fixture fx;
    auto args = fx.run_args(fx.dir.s("out-bad"));
    args.push_back("--acquisition");
    args.push_back("random");
    args.push_back("--reweight");
    CHECK(invoke_cli(args) == 1);
    CHECK(!fs::exists(fx.dir.s("out-bad")));
}

TEST_CASE("config file feeds defaults and flags win") {
    Fixture fx;
    const std::string cfg_path = fx.dir.s("exp.cfg");
    std::ofstream(cfg_path) << "beta=0.5\nquery-size=4\ntrials=2\niterations=1\ninit-size=10\n"
                            << "epochs=5\nhash-dim=4096\nreweight=true\n"
                            << "train=" << fx.train << "\ntest=" << fx.test << "\n";
    const int rc = invoke_cli({"run", "--config", cfg_path, "--beta", "0.25", "--out",
                        fx.dir.s("out-cfg")});
    REQUIRE(rc == 0);
    const std::string echoed = slurp(fx.dir.s("out-cfg/effective_config"));
    CHECK(echoed.find("beta=0.25\n") != std::string::npos);  // flag overrides file
    CHECK(echoed.find("query-size=4\n") != std::string::npos);
    CHECK(echoed.find("reweight=true\n") != std::string::npos);
}

TEST_CASE("cmd_grid marks the best beta") {
    Fixture fx;
    const int rc = invoke_cli({"grid", "--train", fx.train, "--test", fx.test, "--iterations", "1",
                        "--trials", "2", "--query-size", "5", "--init-size", "10", "--epochs",
                        "5", "--hash-dim", "4096", "--betas", "0.1,0.5", "--out",
                        fx.dir.s("grid-out")});
    REQUIRE(rc == 0);
    const std::string grid = slurp(fx.dir.s("grid-out/grid.csv"));
    CHECK(grid.rfind("beta,final_f1_mean,final_f1_ci95,best\n", 0) == 0);
    CHECK(line_count(grid) == 3);
    std::size_t best_markers = 0;
    for (std::size_t pos = 0; (pos = grid.find(",1\n", pos)) != std::string::npos; ++pos)
        ++best_markers;
    CHECK(best_markers == 1);

    const int single = invoke_cli({"grid", "--train", fx.train, "--test", fx.test, "--iterations", "1",
                            "--trials", "1", "--query-size", "5", "--init-size", "10", "--epochs",
                            "5", "--hash-dim", "4096", "--betas", "0.1", "--out",
                            fx.dir.s("grid-single")});
    REQUIRE(single == 0);
    const std::string one = slurp(fx.dir.s("grid-single/grid.csv"));
    CHECK(line_count(one) == 2);
    CHECK(one.find(",1\n") != std::string::npos);
}

TEST_CASE("cmd_ablation emits 2 variants x 3 iterations") {
    Fixture fx;
    const int rc = invoke_cli({"ablation", "--train", fx.train, "--test", fx.test, "--trials", "2",
                        "--query-size", "5", "--init-size", "12", "--epochs", "5", "--hash-dim",
                        "4096", "--out", fx.dir.s("abl-out")});
    REQUIRE(rc == 0);
    const std::string abl = slurp(fx.dir.s("abl-out/ablation.csv"));
    CHECK(abl.rfind("variant,beta,iteration,f1_mean,f1_ci95\n", 0) == 0);
    CHECK(line_count(abl) == 1 + 6);
    CHECK(abl.find("smoothed,0.100000,1,") != std::string::npos);
    CHECK(abl.find("non_smoothed,0.000000,3,") != std::string::npos);
}

TEST_CASE("cmd_stats matches the library computation") {
    Fixture fx;
    const int rc = invoke_cli({"stats", "--train", fx.train, "--out", fx.dir.s("stats-out")});
    REQUIRE(rc == 0);
    const std::string csv = slurp(fx.dir.s("stats-out/stats.csv"));
    const LabeledCorpus corpus = parse_conll_file(fx.train);
    const CorpusStats s = stats(corpus);
    CHECK(csv.find(std::to_string(s.sentence_count) + "," + std::to_string(s.token_count) + ",") !=
          std::string::npos);
}

TEST_CASE("cmd_validate") {
    Fixture fx;
    SUBCASE("clean fixture passes") {
        CHECK(invoke_cli({"validate", "--train", fx.train, "--test", fx.test}) == 0);
    }
    SUBCASE("reweight + random is reported") {
        CHECK(invoke_cli({"validate", "--train", fx.train, "--acquisition", "random", "--reweight"}) ==
              1);
    }
    SUBCASE("strict BIO violations are reported with line numbers") {
        const std::string bad = fx.dir.s("bad.conll");
        std::ofstream(bad) << "a O\nb I-PER\n\n";
        CHECK(invoke_cli({"validate", "--train", bad, "--init-size", "1", "--strict-bio"}) == 1);
        CHECK(invoke_cli({"validate", "--train", bad, "--init-size", "1"}) == 0);  // repaired
    }
    SUBCASE("missing file is reported") {
        CHECK(invoke_cli({"validate", "--train", fx.dir.s("nope.conll")}) == 1);
    }
}

TEST_CASE("cmd_synth is deterministic and respects --force") {
    TempDir dir;
    const std::string out = dir.s("synthetic.conll");
    REQUIRE(invoke_cli({"synth", "--sentences", "50", "--seed", "3", "--out", out}) == 0);
    const std::string first = slurp(out);
    CHECK(invoke_cli({"synth", "--sentences", "50", "--seed", "3", "--out", out}) == 1);
    REQUIRE(invoke_cli({"synth", "--sentences", "50", "--seed", "3", "--out", out, "--force"}) == 0);
    CHECK(slurp(out) == first);

    std::istringstream in(first);
    const LabeledCorpus parsed = parse_conll(in);
    CHECK(parsed.size() == 50);
}

TEST_CASE("unknown flags and missing subcommand fail with exit 1") {
    CHECK(invoke_cli({}) == 1);
    CHECK(invoke_cli({"run", "--nope"}) == 1);
}

TEST_CASE("ALNER_OUT supplies the default output directory") {
    Fixture fx;
    const std::string env_out = fx.dir.s("env-out");
    setenv("ALNER_OUT", env_out.c_str(), 1);
    const int rc = invoke_cli({"stats", "--train", fx.train});
    unsetenv("ALNER_OUT");
    REQUIRE(rc == 0);
    CHECK(fs::exists(env_out + "/stats.csv"));
}
