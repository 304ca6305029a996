#include <doctest.h>

#include <cmath>
#include <sstream>

#include "alner/errors.hpp"
#include "alner/prob_matrix.hpp"
#include "alner/rng.hpp"
#include "alner/tagger.hpp"
#include "helpers.hpp"

using namespace alner;
using alner::testing::make_corpus;
using alner::testing::tiny_tagger;

namespace {

// Linearly separable 2-class data: token identity determines the label.
LabeledCorpus separable_corpus(std::size_t sentences = 20) {
    std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> data;
    for (std::size_t i = 0; i < sentences; ++i) {
        if (i % 2 == 0)
            data.push_back({{"aaa", "aaa", "bbb"}, {"O", "O", "B-X"}});
        else
            data.push_back({{"bbb", "aaa"}, {"B-X", "O"}});
    }
    return make_corpus({"O", "B-X", "I-X"}, data);
}

double train_accuracy(const TaggerModel& model, const LabeledCorpus& corpus) {
    std::size_t hit = 0, total = 0;
    for (const auto& item : corpus.items()) {
        const ProbMatrix probs = model.predict_proba(item.sentence);
        for (std::size_t t = 0; t < probs.tokens(); ++t) {
            hit += argmax_row(probs.row(t)) == item.tags[t];
            ++total;
        }
    }
    return static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace

TEST_CASE("config validation") {
    TaggerConfig c;
    c.epochs = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TaggerConfig{};
    c.dropout_rate = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TaggerConfig{};
    c.hash_dimension = 1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = TaggerConfig{};
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("featurize is deterministic and positional") {
    const Sentence s{{"EU", "rejects"}, 0};
    const auto f1 = featurize(s, 0, 1u << 16);
    const auto f2 = featurize(s, 0, 1u << 16);
    CHECK(f1.indices == f2.indices);
    const auto f3 = featurize(s, 1, 1u << 16);
    CHECK(f1.indices != f3.indices);

    // Single-token sentence: neighbors come out as sentinels, not crashes.
    const Sentence one{{"x"}, 1};
    const auto f4 = featurize(one, 0, 1u << 16);
    CHECK(f4.indices.size() >= 8);
}

TEST_CASE("zero-weight model predicts uniform rows") {
    const TagSet ts = TagSet::from_classes({"O", "B-A", "I-A", "B-B", "I-B"});
    TaggerConfig cfg = tiny_tagger();
    const TaggerModel model(ts, cfg);
    const ProbMatrix probs = model.predict_proba(Sentence{{"hello", "world"}, 0});
    for (std::size_t t = 0; t < probs.tokens(); ++t)
        for (std::size_t c = 0; c < probs.classes(); ++c)
            CHECK(probs.at(t, c) == doctest::Approx(1.0 / 5.0).epsilon(1e-12));
}

TEST_CASE("training reaches 100% accuracy on separable data") {
    const LabeledCorpus corpus = separable_corpus();
    TaggerConfig cfg = tiny_tagger();
    cfg.epochs = 30;
    const TaggerModel model = train(corpus, cfg);
    CHECK(train_accuracy(model, corpus) == doctest::Approx(1.0));
    CHECK(model.predict_proba(corpus.items()[0].sentence).row_stochastic(1e-6));
}

TEST_CASE("seen token gets more than uniform probability") {
    const LabeledCorpus corpus = separable_corpus(50);
    const TaggerModel model = train(corpus, tiny_tagger());
    const ProbMatrix probs = model.predict_proba(Sentence{{"bbb"}, 0});
    CHECK(probs.at(0, 1) > 1.0 / 3.0);  // B-X
}

TEST_CASE("training is bitwise deterministic in the seed") {
    const LabeledCorpus corpus = separable_corpus();
    TaggerConfig cfg = tiny_tagger();
    cfg.dropout_rate = 0.3;  // exercise the stochastic path too
    const TaggerModel a = train(corpus, cfg);
    const TaggerModel b = train(corpus, cfg);
    CHECK(a.input_weights() == b.input_weights());
    CHECK(a.epoch_losses() == b.epoch_losses());

    cfg.seed += 1;
    const TaggerModel c = train(corpus, cfg);
    CHECK(a.input_weights() != c.input_weights());
}

TEST_CASE("empty corpus and bad config are rejected") {
    const LabeledCorpus empty(TagSet::from_classes({"O", "B-X", "I-X"}), {});
    CHECK_THROWS_AS(train(empty, tiny_tagger()), DataError);
    TaggerConfig bad = tiny_tagger();
    bad.epochs = 0;
    CHECK_THROWS_AS(train(separable_corpus(), bad), ConfigError);
}

TEST_CASE("one full-batch epoch equals the canonical gradient step") {
    // Ties the sparse scaled-update training path to the dense objective
    // that the finite-difference check validates.
    const LabeledCorpus corpus = separable_corpus(4);
    TaggerConfig cfg = tiny_tagger();
    cfg.hash_dimension = 512;
    cfg.epochs = 1;
    cfg.batch_size = 0;
    cfg.learning_rate = 0.25;
    cfg.weight_decay = 0.01;
    const TaggerModel model = train(corpus, cfg);

    std::vector<TokenExample> batch;
    for (const auto& item : corpus.items())
        for (std::size_t t = 0; t < item.sentence.tokens.size(); ++t)
            batch.push_back({featurize(item.sentence, t, cfg.hash_dimension), item.tags[t]});
    const std::vector<double> w0(cfg.hash_dimension * 3, 0.0);
    const std::vector<double> grad = softmax_ce_grad(w0, 3, batch, cfg.weight_decay);

    REQUIRE(model.input_weights().size() == grad.size());
    for (std::size_t i = 0; i < grad.size(); ++i)
        CHECK(model.input_weights()[i] ==
              doctest::Approx(-cfg.learning_rate * grad[i]).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches central finite differences") {
    Rng rng(99);
    const std::size_t dim = 5, classes = 3;
    for (int instance = 0; instance < 10; ++instance) {
        std::vector<double> w(dim * classes);
        for (double& v : w) v = 2.0 * rng.uniform() - 1.0;
        std::vector<TokenExample> batch;
        for (int e = 0; e < 6; ++e) {
            TokenExample ex;
            const std::size_t nnz = 1 + rng.bounded(3);
            for (std::size_t k = 0; k < nnz; ++k)
                ex.features.indices.push_back(static_cast<std::uint32_t>(rng.bounded(dim)));
            ex.label = static_cast<int>(rng.bounded(classes));
            batch.push_back(std::move(ex));
        }
        const double l2 = instance % 2 == 0 ? 0.0 : 0.05;
        const std::vector<double> grad = softmax_ce_grad(w, classes, batch, l2);
        const double h = 1e-5;
        for (std::size_t i = 0; i < w.size(); ++i) {
            std::vector<double> wp = w, wm = w;
            wp[i] += h;
            wm[i] -= h;
            const double fd =
                (softmax_ce_loss(wp, classes, batch, l2) - softmax_ce_loss(wm, classes, batch, l2)) /
                (2.0 * h);
            const double rel =
                std::abs(grad[i] - fd) / std::max({std::abs(grad[i]), std::abs(fd), 1e-8});
            CHECK(rel < 1e-4);
        }
    }
}

TEST_CASE("full-batch loss is non-increasing at small learning rate") {
    const LabeledCorpus corpus = separable_corpus(8);
    TaggerConfig cfg = tiny_tagger();
    cfg.batch_size = 0;
    cfg.learning_rate = 0.01;
    cfg.dropout_rate = 0.0;
    cfg.epochs = 40;
    const TaggerModel model = train(corpus, cfg);
    const auto& losses = model.epoch_losses();
    REQUIRE(losses.size() == cfg.epochs + 1);
    for (std::size_t e = 1; e < losses.size(); ++e) CHECK(losses[e] <= losses[e - 1] + 1e-6);
}

TEST_CASE("mc prediction") {
    LabeledCorpus corpus = separable_corpus();
    const Sentence probe{{"aaa", "bbb", "ccc"}, 0};

    SUBCASE("dropout 0 gives identical samples equal to predict_proba") {
        TaggerConfig cfg = tiny_tagger();
        cfg.dropout_rate = 0.0;
        const TaggerModel model = train(corpus, cfg);
        const ProbMatrix expected = model.predict_proba(probe);
        const auto samples = model.predict_proba_mc(probe, 5, 17);
        REQUIRE(samples.size() == 5);
        for (const ProbMatrix& m : samples) CHECK(m == expected);
    }
    SUBCASE("same seed reproduces the sample list") {
        TaggerConfig cfg = tiny_tagger();
        cfg.dropout_rate = 0.5;
        const TaggerModel model = train(corpus, cfg);
        const auto a = model.predict_proba_mc(probe, 10, 17);
        const auto b = model.predict_proba_mc(probe, 10, 17);
        CHECK(a == b);
        const auto c = model.predict_proba_mc(probe, 10, 18);
        CHECK(a != c);
    }
    SUBCASE("dropout 0.5 samples differ and stay stochastic") {
        TaggerConfig cfg = tiny_tagger();
        cfg.dropout_rate = 0.5;
        const TaggerModel model = train(corpus, cfg);
        const auto samples = model.predict_proba_mc(probe, 10, 21);
        bool any_different = false;
        ProbMatrix mean(samples[0].tokens(), samples[0].classes());
        for (const ProbMatrix& m : samples) {
            CHECK(m.row_stochastic(1e-6));
            any_different = any_different || !(m == samples[0]);
            for (std::size_t t = 0; t < m.tokens(); ++t)
                for (std::size_t c = 0; c < m.classes(); ++c)
                    mean.at(t, c) += m.at(t, c) / static_cast<double>(samples.size());
        }
        CHECK(any_different);
        CHECK(mean.row_stochastic(1e-6));
    }
    SUBCASE("fewer than 2 samples is an error") {
        const TaggerModel model = train(corpus, tiny_tagger());
        CHECK_THROWS_AS(model.predict_proba_mc(probe, 1, 3), ConfigError);
    }
}

TEST_CASE("hidden layer mode learns the separable set") {
    const LabeledCorpus corpus = separable_corpus();
    TaggerConfig cfg = tiny_tagger();
    cfg.hidden_units = 16;
    cfg.epochs = 40;
    cfg.learning_rate = 0.05;
    const TaggerModel model = train(corpus, cfg);
    CHECK(train_accuracy(model, corpus) > 0.95);
    CHECK(model.predict_proba(corpus.items()[0].sentence).row_stochastic(1e-6));

    // Deterministic here too.
    const TaggerModel again = train(corpus, cfg);
    CHECK(model.input_weights() == again.input_weights());
    CHECK(model.output_weights() == again.output_weights());
}

TEST_CASE("probability interchange round-trip") {
    const TagSet ts = TagSet::from_classes({"O", "B-PER", "I-PER"});
    Rng rng(5);
    std::vector<ProbMatrix> matrices;
    for (int s = 0; s < 3; ++s) {
        ProbMatrix m(2 + rng.bounded(3), ts.size());
        for (std::size_t t = 0; t < m.tokens(); ++t) {
            double sum = 0.0;
            for (std::size_t c = 0; c < m.classes(); ++c) {
                m.at(t, c) = -std::log(1.0 - rng.uniform());
                sum += m.at(t, c);
            }
            for (std::size_t c = 0; c < m.classes(); ++c) m.at(t, c) /= sum;
        }
        matrices.push_back(std::move(m));
    }

    std::ostringstream out;
    export_probs(matrices, ts, out);
    std::istringstream in(out.str());
    const auto back = import_probs(in, ts);
    REQUIRE(back.size() == matrices.size());
    for (std::size_t s = 0; s < back.size(); ++s) {
        REQUIRE(back[s].tokens() == matrices[s].tokens());
        for (std::size_t t = 0; t < back[s].tokens(); ++t)
            for (std::size_t c = 0; c < back[s].classes(); ++c)
                CHECK(std::abs(back[s].at(t, c) - matrices[s].at(t, c)) <= 1e-9);
    }
}

TEST_CASE("interchange validation") {
    const TagSet ts = TagSet::from_classes({"O", "B-LOC", "I-LOC"});
    SUBCASE("class header mismatch") {
        std::istringstream in("#classes: O,B-PER,I-PER\n1.0 0.0 0.0\n\n");
        CHECK_THROWS_AS(import_probs(in, ts), DataError);
    }
    SUBCASE("non-stochastic row") {
        std::istringstream in("#classes: O,B-LOC,I-LOC\n0.5 0.6 0.1\n\n");
        CHECK_THROWS_AS(import_probs(in, ts), DataError);
    }
    SUBCASE("wrong column count") {
        std::istringstream in("#classes: O,B-LOC,I-LOC\n0.5 0.5\n\n");
        CHECK_THROWS_AS(import_probs(in, ts), DataError);
    }
    SUBCASE("slightly off rows are renormalized") {
        std::istringstream in("#classes: O,B-LOC,I-LOC\n0.500005 0.25 0.25\n\n");
        const auto m = import_probs(in, ts);
        CHECK(m[0].row_stochastic(1e-9));
    }
}
