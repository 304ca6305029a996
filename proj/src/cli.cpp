#include "alner/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "alner/alloop.hpp"
#include "alner/errors.hpp"
#include "alner/synth.hpp"

namespace fs = std::filesystem;

namespace alner::cli {

namespace {

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string fmtg(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out.flush()) throw DataError("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

void refuse_overwrite(const fs::path& dir, const std::vector<std::string>& files, bool force) {
    if (force) return;
    for (const auto& f : files) {
        const fs::path p = dir / f;
        if (fs::exists(p))
            throw ConfigError("output '" + p.string() + "' exists; pass --force to overwrite");
    }
}

struct CommonOpts {
    std::string train;
    std::string test;
    int tag_column = -1;
    bool strict_bio = false;
    std::string acquisition = "lc";
    bool reweight = false;
    double beta = 0.1;
    std::size_t init_size = 30;
    std::size_t iterations = 10;
    std::size_t query_size = 15;
    std::size_t trials = 5;
    std::size_t mc_samples = 10;
    std::uint64_t seed = 42;
    std::size_t jobs = 1;
    std::string out = "out";
    bool force = false;
    bool mnlp_sum_weighted = false;
    std::size_t hash_dim = std::size_t{1} << 18;
    std::size_t hidden_units = 0;
    double dropout = 0.1;
    double learning_rate = 0.1;
    double weight_decay = 5e-5;
    std::size_t epochs = 30;
    std::size_t batch_size = 16;
};

void add_data_options(CLI::App* sub, CommonOpts& o, bool need_test) {
    sub->add_option("--train", o.train, "training data (CoNLL columns)")->required();
    auto* test = sub->add_option("--test", o.test, "test data (CoNLL columns)");
    if (need_test) test->required();
    sub->add_option("--tag-column", o.tag_column, "tag column index, -1 = last");
    sub->add_flag("--strict-bio", o.strict_bio, "reject BIO violations instead of repairing");
}

void add_experiment_options(CLI::App* sub, CommonOpts& o, std::size_t default_iterations) {
    o.iterations = default_iterations;
    sub->add_option("--acquisition", o.acquisition, "base acquisition function")
        ->check(CLI::IsMember({"random", "lc", "se", "mnlp", "bald"}));
    sub->add_flag("--reweight", o.reweight, "apply smoothed class reweighting");
    sub->add_option("--beta", o.beta, "smoothing hyperparameter");
    sub->add_option("--init-size", o.init_size, "initial labeled pool size");
    sub->add_option("--iterations", o.iterations, "active learning iterations");
    sub->add_option("--query-size", o.query_size, "sentences queried per iteration");
    sub->add_option("--trials", o.trials, "independent trials");
    sub->add_option("--mc-samples", o.mc_samples, "MC-dropout samples (bald)");
    sub->add_option("--seed", o.seed, "master seed; trial i uses seed + i");
    sub->add_option("--jobs", o.jobs, "concurrent trials");
    sub->add_flag("--mnlp-sum-weighted", o.mnlp_sum_weighted,
                  "drop the 1/T factor in weighted MNLP");
    sub->add_option("--hash-dim", o.hash_dim, "feature hash buckets");
    sub->add_option("--hidden-units", o.hidden_units, "hidden layer size, 0 = linear");
    sub->add_option("--dropout", o.dropout, "dropout rate");
    sub->add_option("--learning-rate", o.learning_rate, "SGD learning rate");
    sub->add_option("--weight-decay", o.weight_decay, "L2 weight decay");
    sub->add_option("--epochs", o.epochs, "training epochs per retraining");
    sub->add_option("--batch-size", o.batch_size, "mini-batch size, 0 = full batch");
}

void add_output_options(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--out", o.out, "output directory")->envname("ALNER_OUT");
    sub->add_flag("--force", o.force, "overwrite existing outputs");
}

void add_config_file(CLI::App* sub) {
    // Registered for --help only; the file is expanded into argv before
    // parsing (see expand_config_args) so flags always win over the file.
    sub->add_option("--config", "flat key=value config file; flags override it");
}

// Flat key=value config support: pull --config PATH out of argv, load the
// file, and append one --key=value per entry the user did not pass
// explicitly. Keys are named exactly like the flags.
std::vector<std::string> expand_config_args(const std::vector<std::string>& args) {
    std::string config_path;
    std::vector<std::string> out;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw ConfigError("--config needs a file path");
            config_path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
        } else {
            out.push_back(args[i]);
        }
    }
    if (config_path.empty()) return out;

    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file '" + config_path + "'");

    auto user_supplied = [&](const std::string& key) {
        const std::string flag = "--" + key;
        for (const auto& a : out)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#') continue;
        const std::size_t eq = line.find('=', start);
        if (eq == std::string::npos)
            throw ConfigError("config file line " + std::to_string(line_no) +
                              ": expected key=value");
        const std::string key = line.substr(start, eq - start);
        const std::string value = line.substr(eq + 1);
        if (key.empty() || value.empty()) continue;
        if (!user_supplied(key)) out.push_back("--" + key + "=" + value);
    }
    return out;
}

ExperimentConfig experiment_config(const CommonOpts& o) {
    ExperimentConfig c;
    c.acquisition = acquisition_from_string(o.acquisition);
    c.reweight = o.reweight;
    c.beta = o.beta;
    c.init_size = o.init_size;
    c.iterations = o.iterations;
    c.query_size = o.query_size;
    c.trials = o.trials;
    c.mc_samples = o.mc_samples;
    c.seed = o.seed;
    c.jobs = o.jobs;
    c.mnlp_sum_weighted = o.mnlp_sum_weighted;
    c.tagger.hash_dimension = o.hash_dim;
    c.tagger.hidden_units = o.hidden_units;
    c.tagger.dropout_rate = o.dropout;
    c.tagger.learning_rate = o.learning_rate;
    c.tagger.weight_decay = o.weight_decay;
    c.tagger.epochs = o.epochs;
    c.tagger.batch_size = o.batch_size;
    return c;
}

ParseOptions parse_options(const CommonOpts& o) {
    ParseOptions p;
    p.tag_column = o.tag_column;
    p.bio = o.strict_bio ? BioPolicy::Strict : BioPolicy::Repair;
    return p;
}

std::string effective_config_text(const CommonOpts& o, const std::string& subcommand,
                                  const std::string& extra = {}) {
    std::map<std::string, std::string> kv;
    kv["subcommand"] = subcommand;
    kv["train"] = o.train;
    kv["test"] = o.test;
    kv["tag-column"] = std::to_string(o.tag_column);
    kv["strict-bio"] = o.strict_bio ? "true" : "false";
    kv["acquisition"] = o.acquisition;
    kv["reweight"] = o.reweight ? "true" : "false";
    kv["beta"] = fmtg(o.beta);
    kv["init-size"] = std::to_string(o.init_size);
    kv["iterations"] = std::to_string(o.iterations);
    kv["query-size"] = std::to_string(o.query_size);
    kv["trials"] = std::to_string(o.trials);
    kv["mc-samples"] = std::to_string(o.mc_samples);
    kv["seed"] = std::to_string(o.seed);
    kv["jobs"] = std::to_string(o.jobs);
    kv["out"] = o.out;
    kv["mnlp-sum-weighted"] = o.mnlp_sum_weighted ? "true" : "false";
    kv["force"] = o.force ? "true" : "false";
    kv["hash-dim"] = std::to_string(o.hash_dim);
    kv["hidden-units"] = std::to_string(o.hidden_units);
    kv["dropout"] = fmtg(o.dropout);
    kv["learning-rate"] = fmtg(o.learning_rate);
    kv["weight-decay"] = fmtg(o.weight_decay);
    kv["epochs"] = std::to_string(o.epochs);
    kv["batch-size"] = std::to_string(o.batch_size);
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    out += extra;
    return out;
}

std::string curve_csv(const CurveSummary& curve) {
    std::string out =
        "iteration,labeled_sentences,labeled_tokens,f1_mean,f1_ci95,gamma_mean,gamma_ci95,"
        "gamma_flag\n";
    for (const CurvePoint& p : curve.points) {
        out += std::to_string(p.iteration) + ',' + std::to_string(p.labeled_sentences) + ',' +
               fmt6(p.labeled_tokens_mean) + ',' + fmt6(p.f1.mean) + ',' +
               fmt6(p.f1.ci_half_width) + ',' + fmt6(p.gamma.mean) + ',' +
               fmt6(p.gamma.ci_half_width) + ',' + (p.gamma_clamped ? "1" : "0") + '\n';
    }
    return out;
}

std::string runs_csv(const std::vector<RunRecord>& runs) {
    std::string out =
        "trial,seed,iteration,labeled_sentences,labeled_tokens,f1,gamma,gamma_flag,truncated,"
        "class_counts\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
        for (const IterationRecord& rec : runs[i].iterations) {
            std::string counts;
            for (std::size_t k = 0; k < rec.class_counts.size(); ++k) {
                if (k) counts += ';';
                counts += std::to_string(rec.class_counts[k]);
            }
            out += std::to_string(i) + ',' + std::to_string(runs[i].seed) + ',' +
                   std::to_string(rec.iteration) + ',' + std::to_string(rec.labeled_sentences) +
                   ',' + std::to_string(rec.labeled_tokens) + ',' + fmt6(rec.f1) + ',' +
                   fmt6(rec.gamma) + ',' + (rec.gamma_clamped ? "1" : "0") + ',' +
                   (runs[i].truncated ? "1" : "0") + ',' + counts + '\n';
        }
    }
    return out;
}

int cmd_run(const CommonOpts& o) {
    const ExperimentConfig config = experiment_config(o);
    config.validate();
    const fs::path dir(o.out);
    if (fs::exists(dir)) refuse_overwrite(dir, {"curve.csv", "runs.csv", "effective_config"}, o.force);

    const ExperimentResult result =
        run_experiment_files(config, o.train, o.test, parse_options(o));

    fs::create_directories(dir);
    write_file_atomic(dir / "curve.csv", curve_csv(result.curve));
    write_file_atomic(dir / "runs.csv", runs_csv(result.runs));
    write_file_atomic(dir / "effective_config", effective_config_text(o, "run"));

    if (result.curve.single_trial)
        std::cerr << "warning: single trial; confidence intervals are 0\n";
    const CurvePoint& last = result.curve.points.back();
    std::cout << "final_f1_mean=" << fmt6(last.f1.mean) << "\n"
              << "final_f1_ci95=" << fmt6(last.f1.ci_half_width) << "\n";
    return 0;
}

int cmd_grid(CommonOpts& o, const std::vector<double>& betas) {
    if (betas.empty()) throw ConfigError("grid: empty beta list");
    o.reweight = true;  // the grid tunes the reweighted variant
    const fs::path dir(o.out);
    if (fs::exists(dir)) refuse_overwrite(dir, {"grid.csv", "effective_config"}, o.force);

    const LabeledCorpus train = parse_conll_file(o.train, parse_options(o));
    ParseOptions test_opts = parse_options(o);
    const TagSet tagset = train.tagset();
    test_opts.tagset = &tagset;
    const LabeledCorpus test = parse_conll_file(o.test, test_opts);

    struct Row {
        double beta;
        MeanCi final_f1;
    };
    std::vector<Row> rows;
    for (const double beta : betas) {
        ExperimentConfig config = experiment_config(o);
        config.beta = beta;
        config.validate();
        const ExperimentResult result = run_experiment(config, train, test);
        rows.push_back({beta, result.curve.points.back().f1});
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].final_f1.mean > rows[best].final_f1.mean) best = i;

    std::string csv = "beta,final_f1_mean,final_f1_ci95,best\n";
    for (std::size_t i = 0; i < rows.size(); ++i)
        csv += fmt6(rows[i].beta) + ',' + fmt6(rows[i].final_f1.mean) + ',' +
               fmt6(rows[i].final_f1.ci_half_width) + ',' + (i == best ? "1" : "0") + '\n';

    std::string betas_line = "betas=";
    for (std::size_t i = 0; i < betas.size(); ++i)
        betas_line += (i ? "," : "") + fmtg(betas[i]);
    betas_line += "\n";

    fs::create_directories(dir);
    write_file_atomic(dir / "grid.csv", csv);
    write_file_atomic(dir / "effective_config", effective_config_text(o, "grid", betas_line));

    std::cout << "beta\tfinal_f1_mean\tfinal_f1_ci95\n";
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::cout << fmtg(rows[i].beta) << '\t' << fmt6(rows[i].final_f1.mean) << '\t'
                  << fmt6(rows[i].final_f1.ci_half_width) << (i == best ? "\t<- best" : "")
                  << '\n';
    return 0;
}

int cmd_ablation(const CommonOpts& o) {
    AblationConfig config;
    config.base = experiment_config(o);
    config.smoothed_beta = o.beta;
    config.base.validate();
    const fs::path dir(o.out);
    if (fs::exists(dir)) refuse_overwrite(dir, {"ablation.csv", "effective_config"}, o.force);

    const LabeledCorpus train = parse_conll_file(o.train, parse_options(o));
    ParseOptions test_opts = parse_options(o);
    const TagSet tagset = train.tagset();
    test_opts.tagset = &tagset;
    const LabeledCorpus test = parse_conll_file(o.test, test_opts);

    const AblationResult result = run_ablation(config, train, test);

    std::string csv = "variant,beta,iteration,f1_mean,f1_ci95\n";
    auto emit = [&](const char* name, const AblationVariant& v) {
        for (std::size_t i = 0; i < v.f1_by_iteration.size(); ++i)
            csv += std::string(name) + ',' + fmt6(v.beta) + ',' + std::to_string(i + 1) + ',' +
                   fmt6(v.f1_by_iteration[i].mean) + ',' +
                   fmt6(v.f1_by_iteration[i].ci_half_width) + '\n';
    };
    emit("smoothed", result.smoothed);
    emit("non_smoothed", result.unsmoothed);

    fs::create_directories(dir);
    write_file_atomic(dir / "ablation.csv", csv);
    write_file_atomic(dir / "effective_config", effective_config_text(o, "ablation"));

    for (const std::string& note : result.notes) std::cerr << "note: " << note << '\n';
    std::cout << "iteration";
    for (std::size_t i = 0; i < result.smoothed.f1_by_iteration.size(); ++i)
        std::cout << '\t' << (i + 1);
    std::cout << "\nsmoothed(beta=" << fmtg(result.smoothed.beta) << ")";
    for (const MeanCi& m : result.smoothed.f1_by_iteration)
        std::cout << '\t' << fmt6(m.mean) << "+-" << fmt6(m.ci_half_width);
    std::cout << "\nnon_smoothed";
    for (const MeanCi& m : result.unsmoothed.f1_by_iteration)
        std::cout << '\t' << fmt6(m.mean) << "+-" << fmt6(m.ci_half_width);
    std::cout << '\n';
    return 0;
}

int cmd_stats(const CommonOpts& o) {
    const fs::path dir(o.out);
    if (fs::exists(dir)) refuse_overwrite(dir, {"stats.csv"}, o.force);

    const LabeledCorpus corpus = parse_conll_file(o.train, parse_options(o));
    const CorpusStats s = stats(corpus);

    std::string csv =
        "sentences,tokens,average_length,b_fraction,i_fraction,o_fraction,imbalance_ratio,"
        "imbalance_clamped\n";
    csv += std::to_string(s.sentence_count) + ',' + std::to_string(s.token_count) + ',' +
           fmt6(s.average_length) + ',' + fmt6(s.b_fraction) + ',' + fmt6(s.i_fraction) + ',' +
           fmt6(s.o_fraction) + ',' + fmt6(s.imbalance_ratio) + ',' +
           (s.imbalance_clamped ? "1" : "0") + '\n';

    fs::create_directories(dir);
    write_file_atomic(dir / "stats.csv", csv);

    std::cout << "sentences " << s.sentence_count << "\ntokens " << s.token_count
              << "\naverage_length " << fmt6(s.average_length) << "\nclass_proportions B/I/O "
              << fmt6(s.b_fraction) << '/' << fmt6(s.i_fraction) << '/' << fmt6(s.o_fraction)
              << "\nimbalance_ratio " << fmt6(s.imbalance_ratio)
              << (s.imbalance_clamped ? " (clamped: absent class)" : "") << '\n';
    for (std::size_t k = 0; k < s.per_class.size(); ++k)
        std::cout << "count " << corpus.tagset().name(static_cast<int>(k)) << ' '
                  << s.per_class[k] << '\n';
    return 0;
}

int cmd_validate(const CommonOpts& o) {
    std::vector<std::string> violations;

    const auto check = [&](const char* what, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            violations.push_back(std::string(what) + ": " + e.what());
        }
    };

    ExperimentConfig config;
    check("config", [&] { config = experiment_config(o); });
    check("config", [&] { config.validate(); });
    if (acquisition_from_string(o.acquisition) == AcquisitionKind::BALD && o.dropout == 0.0)
        std::cerr << "warning: BALD with dropout 0 makes every MC sample identical\n";

    const TagSet* train_tagset = nullptr;
    TagSet tagset_storage = TagSet::for_entity_types({});
    check("train", [&] {
        const LabeledCorpus train = parse_conll_file(o.train, parse_options(o));
        tagset_storage = train.tagset();
        train_tagset = &tagset_storage;
        if (o.init_size > train.size())
            violations.push_back("config: init size exceeds training corpus size");
    });
    if (!o.test.empty())
        check("test", [&] {
            ParseOptions opts = parse_options(o);
            opts.tagset = train_tagset;  // null = infer independently
            parse_conll_file(o.test, opts);
        });

    if (violations.empty()) {
        std::cout << "ok\n";
        return 0;
    }
    for (const std::string& v : violations) std::cerr << "violation: " << v << '\n';
    return 1;
}

int cmd_synth(const SynthConfig& config, const std::string& out, bool force) {
    config.validate();
    const fs::path path(out);
    if (!force && fs::exists(path))
        throw ConfigError("output '" + path.string() + "' exists; pass --force to overwrite");
    const LabeledCorpus corpus = synth_corpus(config);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file_atomic(path, serialize_conll(corpus));
    std::cout << "wrote " << corpus.size() << " sentences, " << corpus.token_count()
              << " tokens to " << path.string() << '\n';
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"re-weighted active learning harness for BIO sequence tagging"};
    app.require_subcommand(1);

    CommonOpts run_opts, grid_opts, abl_opts, stats_opts, val_opts;
    std::vector<double> betas = {0.01, 0.1, 0.2, 0.5, 1.0};
    SynthConfig synth_config;
    std::string synth_out = "synth.conll";
    bool synth_force = false;
    std::string synth_types = "PER,LOC,RAR";
    std::string synth_weights = "0.7,0.22,0.08";

    CLI::App* c_run = app.add_subcommand("run", "run one experiment, write curve.csv + runs.csv");
    add_data_options(c_run, run_opts, true);
    add_experiment_options(c_run, run_opts, 10);
    add_output_options(c_run, run_opts);
    add_config_file(c_run);

    CLI::App* c_grid = app.add_subcommand("grid", "beta grid search for the reweighted variant");
    add_data_options(c_grid, grid_opts, true);
    add_experiment_options(c_grid, grid_opts, 10);
    add_output_options(c_grid, grid_opts);
    c_grid->add_option("--betas", betas, "beta values to sweep")->delimiter(',');
    add_config_file(c_grid);

    CLI::App* c_abl = app.add_subcommand(
        "ablation", "smoothed (--beta) vs non-smoothed (beta=0) over the first iterations");
    add_data_options(c_abl, abl_opts, true);
    add_experiment_options(c_abl, abl_opts, 3);
    add_output_options(c_abl, abl_opts);
    add_config_file(c_abl);

    CLI::App* c_stats = app.add_subcommand("stats", "dataset statistics, write stats.csv");
    add_data_options(c_stats, stats_opts, false);
    add_output_options(c_stats, stats_opts);
    add_config_file(c_stats);

    CLI::App* c_val = app.add_subcommand("validate", "check config and data, write nothing");
    add_data_options(c_val, val_opts, false);
    add_experiment_options(c_val, val_opts, 10);
    add_config_file(c_val);

    CLI::App* c_synth =
        app.add_subcommand("synth", "generate a synthetic imbalanced BIO corpus (test tooling)");
    c_synth->add_option("--sentences", synth_config.sentences, "sentence count");
    c_synth->add_option("--entity-types", synth_types, "comma-separated entity type names");
    c_synth->add_option("--type-weights", synth_weights, "comma-separated span frequency weights");
    c_synth->add_option("--o-fraction", synth_config.o_fraction, "target O token fraction");
    c_synth->add_option("--seed", synth_config.seed, "generator seed");
    c_synth->add_option("--out", synth_out, "output file")->envname("ALNER_OUT");
    c_synth->add_flag("--force", synth_force, "overwrite existing output");

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = expand_config_args(args);
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));  // CLI11 consumes args back to front
        if (c_run->parsed()) return cmd_run(run_opts);
        if (c_grid->parsed()) return cmd_grid(grid_opts, betas);
        if (c_abl->parsed()) return cmd_ablation(abl_opts);
        if (c_stats->parsed()) return cmd_stats(stats_opts);
        if (c_val->parsed()) return cmd_validate(val_opts);
        if (c_synth->parsed()) {
            synth_config.entity_types.clear();
            std::stringstream types(synth_types);
            std::string piece;
            while (std::getline(types, piece, ','))
                if (!piece.empty()) synth_config.entity_types.push_back(piece);
            synth_config.type_weights.clear();
            std::stringstream weights(synth_weights);
            while (std::getline(weights, piece, ','))
                if (!piece.empty()) synth_config.type_weights.push_back(std::stod(piece));
            return cmd_synth(synth_config, synth_out, synth_force);
        }
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace alner::cli
