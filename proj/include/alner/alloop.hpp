#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alner/acquisition.hpp"
#include "alner/corpus.hpp"
#include "alner/metrics.hpp"
#include "alner/tagger.hpp"

namespace alner {

struct ExperimentConfig {
    AcquisitionKind acquisition = AcquisitionKind::LC;
    bool reweight = false;
    double beta = 0.1;
    std::size_t init_size = 30;
    std::size_t iterations = 10;
    std::size_t query_size = 15;
    std::size_t trials = 5;
    std::size_t mc_samples = 10;  // BALD only
    std::uint64_t seed = 42;      // master seed; trial i uses seed + i
    std::size_t jobs = 1;         // concurrent trials
    bool mnlp_sum_weighted = false;  // drop the 1/T factor in weighted MNLP
    TaggerConfig tagger;

    void validate() const;
};

/// One measurement row. Wall time is informational and excluded from
/// equality so determinism contracts stay checkable.
struct IterationRecord {
    std::size_t iteration = 0;
    std::size_t labeled_sentences = 0;
    std::size_t labeled_tokens = 0;
    std::vector<long long> class_counts;
    double f1 = 0.0;
    double gamma = 0.0;
    bool gamma_clamped = false;
    double elapsed_seconds = 0.0;

    bool operator==(const IterationRecord& o) const {
        return iteration == o.iteration && labeled_sentences == o.labeled_sentences &&
               labeled_tokens == o.labeled_tokens && class_counts == o.class_counts &&
               f1 == o.f1 && gamma == o.gamma && gamma_clamped == o.gamma_clamped;
    }
};

struct RunRecord {
    std::uint64_t seed = 0;
    bool truncated = false;  // pool exhausted before all iterations
    std::vector<IterationRecord> iterations;

    bool operator==(const RunRecord& o) const {
        return seed == o.seed && truncated == o.truncated && iterations == o.iterations;
    }
};

struct CurvePoint {
    std::size_t iteration = 0;
    std::size_t labeled_sentences = 0;
    double labeled_tokens_mean = 0.0;
    MeanCi f1;
    MeanCi gamma;
    bool gamma_clamped = false;  // any trial clamped here
};

struct CurveSummary {
    std::vector<CurvePoint> points;
    bool single_trial = false;  // CI half-widths reported as 0
};

struct ExperimentResult {
    CurveSummary curve;
    std::vector<RunRecord> runs;
};

/// One active-learning trial: an iteration-0 record for the initial pool,
/// then per round: score the pool with the current model (recomputing class
/// weights from the labeled pool when reweighting), select top-B, let the
/// oracle reveal gold tags, move them over, retrain from scratch, evaluate
/// span F1 on the test set and the labeled pool's imbalance ratio.
/// gamma_class_mask selects the classes entering gamma (default: all).
RunRecord run_trial(const ExperimentConfig& config, LabeledCorpus labeled, UnlabeledPool pool,
                    const LabeledCorpus& test, std::uint64_t seed,
                    const std::vector<unsigned char>* gamma_class_mask = nullptr);

/// Student-t aggregation of trial curves (95% CI, df = trials - 1).
CurveSummary summarize(std::span<const RunRecord> runs);

/// Runs `trials` trials with seeds config.seed + i, each on its own random
/// split of `train`; gamma is computed over the classes present in the full
/// training set. Trials run concurrently when config.jobs > 1.
ExperimentResult run_experiment(const ExperimentConfig& config, const LabeledCorpus& train,
                                const LabeledCorpus& test);

ExperimentResult run_experiment_files(const ExperimentConfig& config,
                                      const std::string& train_path,
                                      const std::string& test_path,
                                      const ParseOptions& parse_options = {});

/// Smoothed (beta > 0) vs non-smoothed (beta = 0) comparison over the first
/// iterations, LC-style (Table-1 shape). beta = 0 needs every class in the
/// initial pool, so splits are resampled per trial up to
/// max_split_attempts; both variants run on the same accepted split.
struct AblationConfig {
    ExperimentConfig base;  // base.iterations = the early window (default 3)
    double smoothed_beta = 0.1;
    std::size_t max_split_attempts = 25;
};

struct AblationVariant {
    double beta = 0.0;
    std::vector<MeanCi> f1_by_iteration;  // index 0 = iteration 1
    std::vector<std::vector<double>> trial_f1;  // per iteration, per trial
};

struct AblationResult {
    AblationVariant smoothed;
    AblationVariant unsmoothed;
    std::size_t trials_run = 0;
    std::vector<std::string> notes;  // resampled splits, skipped trials
};

AblationResult run_ablation(const AblationConfig& config, const LabeledCorpus& train,
                            const LabeledCorpus& test);

}  // namespace alner
