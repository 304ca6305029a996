#include <doctest.h>

#include <cmath>
#include <set>

#include "alner/acquisition.hpp"
#include "alner/errors.hpp"
#include "alner/rng.hpp"

using namespace alner;

namespace {

ProbMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    ProbMatrix m(rows.size(), rows[0].size());
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t c = 0; c < rows[t].size(); ++c) m.at(t, c) = rows[t][c];
    return m;
}

ProbMatrix random_stochastic(Rng& rng, std::size_t tokens, std::size_t classes) {
    ProbMatrix m(tokens, classes);
    for (std::size_t t = 0; t < tokens; ++t) {
        double sum = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            m.at(t, c) = -std::log(1.0 - rng.uniform());
            sum += m.at(t, c);
        }
        for (std::size_t c = 0; c < classes; ++c) m.at(t, c) /= sum;
    }
    return m;
}

}  // namespace

TEST_CASE("acquisition kind parsing") {
    CHECK(acquisition_from_string("lc") == AcquisitionKind::LC);
    CHECK(acquisition_from_string("bald") == AcquisitionKind::BALD);
    CHECK(to_string(AcquisitionKind::MNLP) == "mnlp");
    CHECK_THROWS_AS(acquisition_from_string("margin"), ConfigError);
    CHECK(needs_mc_samples(AcquisitionKind::BALD));
    CHECK(!needs_mc_samples(AcquisitionKind::LC));
    CHECK(length_normalized(AcquisitionKind::MNLP));
}

TEST_CASE("least confidence") {
    const auto certain = score_lc(from_rows({{1.0, 0.0, 0.0}}));
    CHECK(certain.scores[0] == doctest::Approx(0.0));
    CHECK(certain.pseudo_labels[0] == 0);

    const auto uniform = score_lc(from_rows({{0.25, 0.25, 0.25, 0.25}}));
    CHECK(uniform.scores[0] == doctest::Approx(0.75));

    const auto two = score_lc(from_rows({{0.9, 0.1}, {0.6, 0.4}}));
    CHECK(two.scores[0] == doctest::Approx(0.1));
    CHECK(two.scores[1] == doctest::Approx(0.4));
    CHECK(aggregate(two) == doctest::Approx(0.5));
}

TEST_CASE("sequence entropy") {
    const auto certain = score_se(from_rows({{0.0, 1.0, 0.0}}));
    CHECK(certain.scores[0] == doctest::Approx(0.0));

    std::vector<double> uniform9(9, 1.0 / 9.0);
    const auto nine = score_se(from_rows({uniform9}));
    CHECK(nine.scores[0] == doctest::Approx(std::log(9.0)).epsilon(1e-12));
    CHECK(nine.scores[0] == doctest::Approx(2.1972245773362196).epsilon(1e-12));

    const auto half = score_se(from_rows({{0.5, 0.5}}));
    CHECK(half.scores[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("mnlp") {
    const auto confident = score_mnlp(from_rows({{1.0, 0.0}, {1.0, 0.0}}));
    CHECK(aggregate(confident, {}, true) == doctest::Approx(0.0));

    const auto pair = score_mnlp(from_rows({{0.5, 0.5}, {0.25, 0.75}}));
    CHECK(pair.scores[0] == doctest::Approx(-std::log(0.5)));
    CHECK(pair.scores[1] == doctest::Approx(-std::log(0.75)));

    // Max-probs (0.5, 0.25) over two tokens.
    const ProbMatrix m =
        from_rows({{0.5, 0.2, 0.2, 0.1}, {0.25, 0.25, 0.25, 0.25}});
    const auto both = score_mnlp(m);
    CHECK(aggregate(both, {}, true) ==
          doctest::Approx(-(std::log(0.5) + std::log(0.25)) / 2.0).epsilon(1e-12));
    CHECK(aggregate(both, {}, true) == doctest::Approx(1.0397207708399179).epsilon(1e-12));

    // Raw signed value before negation.
    CHECK(mnlp_raw(m) == doctest::Approx((std::log(0.5) + std::log(0.25)) / 2.0));
}

TEST_CASE("mnlp is invariant to token duplication") {
    // Duplicating a single-token sentence is exact in floating point.
    const ProbMatrix one = from_rows({{0.37, 0.63}});
    const ProbMatrix two = from_rows({{0.37, 0.63}, {0.37, 0.63}});
    CHECK(aggregate(score_mnlp(one), {}, true) == aggregate(score_mnlp(two), {}, true));

    // General duplication stays within rounding noise.
    const ProbMatrix base = from_rows({{0.5, 0.5}, {0.25, 0.75}, {0.9, 0.1}});
    const ProbMatrix doubled = from_rows(
        {{0.5, 0.5}, {0.25, 0.75}, {0.9, 0.1}, {0.5, 0.5}, {0.25, 0.75}, {0.9, 0.1}});
    CHECK(aggregate(score_mnlp(doubled), {}, true) ==
          doctest::Approx(aggregate(score_mnlp(base), {}, true)).epsilon(1e-12));
}

TEST_CASE("bald") {
    SUBCASE("identical samples give zero information") {
        Rng rng(3);
        const ProbMatrix m = random_stochastic(rng, 4, 3);
        const std::vector<ProbMatrix> samples(5, m);
        const auto ts = score_bald(samples);
        for (const double s : ts.scores) CHECK(std::abs(s) <= 1e-9);
    }
    SUBCASE("maximal disagreement gives ln 2") {
        const std::vector<ProbMatrix> samples{from_rows({{1.0, 0.0}}), from_rows({{0.0, 1.0}})};
        const auto ts = score_bald(samples);
        CHECK(ts.scores[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("pseudo-label comes from the mean distribution") {
        const std::vector<ProbMatrix> samples{from_rows({{0.9, 0.1}}), from_rows({{0.0, 1.0}})};
        const auto ts = score_bald(samples);
        CHECK(ts.pseudo_labels[0] == 1);  // mean = (0.45, 0.55)
    }
    SUBCASE("non-negative on random samples") {
        Rng rng(7);
        for (int trial = 0; trial < 500; ++trial) {
            const std::size_t tokens = 1 + rng.bounded(3);
            const std::size_t classes = 2 + rng.bounded(4);
            std::vector<ProbMatrix> samples;
            const std::size_t m = 2 + rng.bounded(4);
            for (std::size_t i = 0; i < m; ++i)
                samples.push_back(random_stochastic(rng, tokens, classes));
            for (const double s : score_bald(samples).scores) CHECK(s >= -1e-9);
        }
    }
    SUBCASE("shape mismatch and sample count errors") {
        const std::vector<ProbMatrix> bad{from_rows({{1.0, 0.0}}), from_rows({{1.0, 0.0, 0.0}})};
        CHECK_THROWS_AS(score_bald(bad), ConfigError);
        const std::vector<ProbMatrix> single{from_rows({{1.0, 0.0}})};
        CHECK_THROWS_AS(score_bald(single), ConfigError);
    }
}

TEST_CASE("token scores are non-negative and SE is bounded by ln C") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t classes = 2 + rng.bounded(8);
        const ProbMatrix m = random_stochastic(rng, 1 + rng.bounded(5), classes);
        for (const double s : score_lc(m).scores) CHECK(s >= -1e-9);
        for (const double s : score_se(m).scores) {
            CHECK(s >= -1e-9);
            CHECK(s <= std::log(static_cast<double>(classes)) + 1e-9);
        }
        for (const double s : score_mnlp(m).scores) CHECK(s >= -1e-9);
    }
}

TEST_CASE("pseudo-labels break ties toward the lowest class index") {
    const auto ts = score_lc(from_rows({{0.4, 0.4, 0.2}}));
    CHECK(ts.pseudo_labels[0] == 0);
}

TEST_CASE("aggregate") {
    TokenScores ts;
    ts.scores = {0.1, 0.4};
    ts.pseudo_labels = {0, 1};

    CHECK(aggregate(ts) == doctest::Approx(0.5));

    const std::vector<double> uniform{1.0, 1.0};
    CHECK(aggregate(ts, uniform) == doctest::Approx(0.5));

    // pseudo-labels (O, B-PER) with w_O = 0.2, w_B-PER = 2.0.
    const std::vector<double> w{0.2, 2.0};
    CHECK(aggregate(ts, w) == doctest::Approx(0.82).epsilon(1e-12));

    const std::vector<double> short_w{0.2};
    CHECK_THROWS_AS(aggregate(ts, short_w), ConfigError);

    TokenScores no_labels;
    no_labels.scores = {0.1};
    CHECK_THROWS_AS(aggregate(no_labels, w), ConfigError);
    CHECK(aggregate(no_labels) == doctest::Approx(0.1));
}

TEST_CASE("select_top_b ranks by score then earliest index") {
    const std::vector<double> scores{0.5, 0.9, 0.5, 0.1};
    const auto top = select_top_b(scores, 3);
    CHECK(top == std::vector<std::size_t>{1, 0, 2});
    CHECK_THROWS_AS(select_top_b(scores, 5), ConfigError);
    CHECK(select_top_b(scores, 0).empty());
}

TEST_CASE("random scores are seed-deterministic and uniform-ish") {
    const auto a = score_random(50, 123);
    const auto b = score_random(50, 123);
    CHECK(a == b);
    const auto c = score_random(50, 124);
    CHECK(a != c);

    // 4 sentences, B = 1, 10000 seeded draws: each about 2500 +- 150.
    std::vector<int> hits(4, 0);
    for (std::uint64_t seed = 0; seed < 10000; ++seed)
        ++hits[select_top_b(score_random(4, seed), 1)[0]];
    for (const int h : hits) {
        CHECK(h > 2350);
        CHECK(h < 2650);
    }
}
