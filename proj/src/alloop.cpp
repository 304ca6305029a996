#include "alner/alloop.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include "alner/errors.hpp"
#include "alner/reweight.hpp"
#include "alner/rng.hpp"

namespace alner {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double evaluate_f1(const TaggerModel& model, const LabeledCorpus& test) {
    std::vector<std::vector<int>> predictions;
    std::vector<std::vector<int>> gold;
    predictions.reserve(test.size());
    gold.reserve(test.size());
    for (const auto& item : test.items()) {
        const ProbMatrix probs = model.predict_proba(item.sentence);
        std::vector<int> tags(probs.tokens());
        for (std::size_t t = 0; t < probs.tokens(); ++t) tags[t] = argmax_row(probs.row(t));
        predictions.push_back(std::move(tags));
        gold.push_back(item.tags);
    }
    return span_f1(predictions, gold, test.tagset()).f1;
}

IterationRecord measure(std::size_t iteration, const LabeledCorpus& labeled,
                        const TaggerModel& model, const LabeledCorpus& test,
                        const std::vector<unsigned char>* gamma_mask, Clock::time_point start) {
    IterationRecord rec;
    rec.iteration = iteration;
    rec.labeled_sentences = labeled.size();
    rec.labeled_tokens = labeled.token_count();
    rec.class_counts = class_counts(labeled).per_class;
    rec.f1 = evaluate_f1(model, test);

    std::vector<long long> gamma_counts;
    for (std::size_t k = 0; k < rec.class_counts.size(); ++k)
        if (!gamma_mask || (*gamma_mask)[k]) gamma_counts.push_back(rec.class_counts[k]);
    const GammaResult g = imbalance_ratio_clamped(gamma_counts);
    rec.gamma = g.gamma;
    rec.gamma_clamped = g.clamped;
    rec.elapsed_seconds = seconds_since(start);
    return rec;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (iterations < 1) throw ConfigError("config: iterations must be >= 1");
    if (query_size < 1) throw ConfigError("config: query size must be >= 1");
    if (trials < 1) throw ConfigError("config: trials must be >= 1");
    if (init_size < 1) throw ConfigError("config: init size must be >= 1 (cold start unsupported)");
    if (reweight && acquisition == AcquisitionKind::Random)
        throw ConfigError("config: reweighting random querying is meaningless; rejected");
    if (acquisition == AcquisitionKind::BALD && mc_samples < 2)
        throw ConfigError("config: BALD needs at least 2 MC samples");
    if (!(beta >= 0.0)) throw ConfigError("config: beta must be >= 0");
    tagger.validate();
}

RunRecord run_trial(const ExperimentConfig& config, LabeledCorpus labeled, UnlabeledPool pool,
                    const LabeledCorpus& test, std::uint64_t seed,
                    const std::vector<unsigned char>* gamma_class_mask) {
    config.validate();
    if (labeled.empty()) throw ConfigError("run: initial labeled pool is empty");
    if (gamma_class_mask && gamma_class_mask->size() != labeled.tagset().size())
        throw ConfigError("run: gamma class mask size mismatch");

    RunRecord run;
    run.seed = seed;

    auto fresh_model = [&](std::size_t iteration) {
        TaggerConfig tc = config.tagger;
        tc.seed = mix_seed(seed, 1000 + iteration);
        return train(labeled, tc);
    };

    Clock::time_point tick = Clock::now();
    TaggerModel model = fresh_model(0);
    run.iterations.push_back(measure(0, labeled, model, test, gamma_class_mask, tick));

    for (std::size_t iter = 1; iter <= config.iterations; ++iter) {
        if (pool.size() == 0) {
            run.truncated = true;
            break;
        }
        tick = Clock::now();
        const std::size_t batch = std::min(config.query_size, pool.size());
        if (batch < config.query_size) run.truncated = true;

        std::vector<std::size_t> selected;
        if (config.acquisition == AcquisitionKind::Random) {
            const auto scores = score_random(pool.size(), mix_seed(seed, 2000 + iter));
            selected = select_top_b(scores, batch);
        } else {
            const McOptions mc{config.mc_samples, mix_seed(seed, 3000 + iter)};
            const auto scored = score_pool(pool.sentences(), model, config.acquisition, mc);
            if (config.reweight) {
                const ClassWeights weights = compute_weights(labeled, config.beta);
                selected = reweighted_query(scored, config.acquisition, weights, batch,
                                            config.mnlp_sum_weighted);
            } else {
                std::vector<double> scores;
                scores.reserve(scored.size());
                const bool normalize = length_normalized(config.acquisition);
                for (const TokenScores& ts : scored)
                    scores.push_back(aggregate(ts, {}, normalize));
                selected = select_top_b(scores, batch);
            }
        }

        labeled.add(pool.take(selected));  // the oracle is the gold labels
        model = fresh_model(iter);
        run.iterations.push_back(measure(iter, labeled, model, test, gamma_class_mask, tick));
    }
    return run;
}

CurveSummary summarize(std::span<const RunRecord> runs) {
    CurveSummary summary;
    if (runs.empty()) return summary;
    summary.single_trial = runs.size() == 1;

    std::size_t max_iterations = 0;
    for (const RunRecord& r : runs) max_iterations = std::max(max_iterations, r.iterations.size());

    for (std::size_t i = 0; i < max_iterations; ++i) {
        CurvePoint point;
        std::vector<double> f1s, gammas;
        double token_sum = 0.0;
        std::size_t n = 0;
        for (const RunRecord& r : runs) {
            if (i >= r.iterations.size()) continue;
            const IterationRecord& rec = r.iterations[i];
            point.iteration = rec.iteration;
            point.labeled_sentences = rec.labeled_sentences;
            point.gamma_clamped = point.gamma_clamped || rec.gamma_clamped;
            f1s.push_back(rec.f1);
            gammas.push_back(rec.gamma);
            token_sum += static_cast<double>(rec.labeled_tokens);
            ++n;
        }
        point.labeled_tokens_mean = token_sum / static_cast<double>(n);
        point.f1 = mean_ci95(f1s);
        point.gamma = mean_ci95(gammas);
        summary.points.push_back(std::move(point));
    }
    return summary;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const LabeledCorpus& train,
                                const LabeledCorpus& test) {
    config.validate();
    if (!(test.tagset() == train.tagset()))
        throw DataError("experiment: train and test tagsets differ");

    // gamma is tracked over the classes present in the full training set.
    const ClassCounts full = class_counts(train);
    std::vector<unsigned char> gamma_mask(full.per_class.size());
    for (std::size_t k = 0; k < full.per_class.size(); ++k)
        gamma_mask[k] = full.per_class[k] > 0 ? 1 : 0;

    ExperimentResult result;
    result.runs.resize(config.trials);

    auto one_trial = [&](std::size_t i) {
        const std::uint64_t trial_seed = config.seed + i;
        auto [labeled, pool] = split_pools(train, config.init_size, trial_seed);
        result.runs[i] = run_trial(config, std::move(labeled), std::move(pool), test, trial_seed,
                                   &gamma_mask);
    };

    const std::size_t jobs = std::max<std::size_t>(1, std::min(config.jobs, config.trials));
    if (jobs == 1) {
        for (std::size_t i = 0; i < config.trials; ++i) one_trial(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        std::vector<std::thread> workers;
        workers.reserve(jobs);
        for (std::size_t w = 0; w < jobs; ++w) {
            workers.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= config.trials) return;
                    try {
                        one_trial(i);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (!error) error = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (std::thread& t : workers) t.join();
        if (error) std::rethrow_exception(error);
    }

    result.curve = summarize(result.runs);
    return result;
}

ExperimentResult run_experiment_files(const ExperimentConfig& config,
                                      const std::string& train_path, const std::string& test_path,
                                      const ParseOptions& parse_options) {
    const LabeledCorpus train = parse_conll_file(train_path, parse_options);
    ParseOptions test_options = parse_options;
    const TagSet tagset = train.tagset();
    test_options.tagset = &tagset;
    const LabeledCorpus test = parse_conll_file(test_path, test_options);
    return run_experiment(config, train, test);
}

AblationResult run_ablation(const AblationConfig& config, const LabeledCorpus& train,
                            const LabeledCorpus& test) {
    ExperimentConfig base = config.base;
    base.reweight = true;
    if (base.acquisition == AcquisitionKind::Random)
        throw ConfigError("ablation: random querying cannot be reweighted");
    base.beta = config.smoothed_beta;
    base.validate();
    if (!(config.smoothed_beta > 0.0))
        throw ConfigError("ablation: smoothed beta must be > 0");

    const std::size_t classes = train.tagset().size();
    const ClassCounts full = class_counts(train);
    std::vector<unsigned char> gamma_mask(classes);
    for (std::size_t k = 0; k < classes; ++k) gamma_mask[k] = full.per_class[k] > 0 ? 1 : 0;

    AblationResult result;
    result.smoothed.beta = config.smoothed_beta;
    result.unsmoothed.beta = 0.0;
    result.smoothed.trial_f1.assign(base.iterations, {});
    result.unsmoothed.trial_f1.assign(base.iterations, {});

    for (std::size_t i = 0; i < base.trials; ++i) {
        const std::uint64_t trial_seed = base.seed + i;

        // beta = 0 needs every class in the initial pool; resample the split
        // until it covers all classes present in the full training set.
        std::optional<std::pair<LabeledCorpus, UnlabeledPool>> split;
        for (std::size_t attempt = 0; attempt < config.max_split_attempts; ++attempt) {
            const std::uint64_t split_seed =
                attempt == 0 ? trial_seed : mix_seed(trial_seed, 7000 + attempt);
            auto candidate = split_pools(train, base.init_size, split_seed);
            const ClassCounts counts = class_counts(candidate.first);
            bool covered = true;
            for (std::size_t k = 0; k < classes; ++k)
                if (gamma_mask[k] && counts.per_class[k] == 0) covered = false;
            if (covered) {
                if (attempt > 0)
                    result.notes.push_back("trial " + std::to_string(i) + ": resampled split " +
                                           std::to_string(attempt) + " time(s)");
                split = std::move(candidate);
                break;
            }
        }
        if (!split) {
            result.notes.push_back("trial " + std::to_string(i) + ": no split with all classes after " +
                                   std::to_string(config.max_split_attempts) + " attempts; skipped");
            continue;
        }

        ExperimentConfig smoothed = base;
        ExperimentConfig unsmoothed = base;
        unsmoothed.beta = 0.0;
        const RunRecord rs = run_trial(smoothed, split->first, split->second, test, trial_seed,
                                       &gamma_mask);
        const RunRecord ru = run_trial(unsmoothed, split->first, split->second, test, trial_seed,
                                       &gamma_mask);
        for (std::size_t it = 1; it <= base.iterations; ++it) {
            if (it < rs.iterations.size())
                result.smoothed.trial_f1[it - 1].push_back(rs.iterations[it].f1);
            if (it < ru.iterations.size())
                result.unsmoothed.trial_f1[it - 1].push_back(ru.iterations[it].f1);
        }
        ++result.trials_run;
    }

    if (result.trials_run == 0)
        throw DataError("ablation: every trial failed to draw an initial pool covering all classes");

    for (std::size_t it = 0; it < base.iterations; ++it) {
        result.smoothed.f1_by_iteration.push_back(mean_ci95(result.smoothed.trial_f1[it]));
        result.unsmoothed.f1_by_iteration.push_back(mean_ci95(result.unsmoothed.trial_f1[it]));
    }
    return result;
}

}  // namespace alner
