#include "surveyrank/rank_agg.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace surveyrank;

namespace {

std::vector<std::string> labels_of(std::size_t a) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < a; ++i) out.push_back("item" + std::to_string(i + 1));
    return out;
}

Ranking random_ranking(std::size_t a, std::mt19937_64& rng) {
    Ranking r(a);
    std::iota(r.begin(), r.end(), 1);
    std::shuffle(r.begin(), r.end(), rng);
    return r;
}

RankingEnsemble random_ensemble(std::size_t a, std::size_t k, std::mt19937_64& rng) {
    std::vector<Ranking> rs;
    for (std::size_t i = 0; i < k; ++i) rs.push_back(random_ranking(a, rng));
    return make_ensemble(labels_of(a), rs);
}

// Rankings per item, one column per method, for the first class of each attribute set.
RankingEnsemble motivators_lc1() {
    return make_ensemble({"Flexibility", "Travel time", "Reliability", "Availability", "Safety", "Low health risk"},
                         {{1, 3, 2, 4, 5, 6}, {1, 4, 2, 3, 5, 6}, {1, 3, 2, 4, 5, 6}}, {}, {"MOORA", "TOPSIS", "VIKOR"});
}

RankingEnsemble deterrents_lc1() {
    return make_ensemble({"Travel cost", "Waiting time", "Driver behaviour", "Online payment issues", "Customer support", "App interface"},
                         {{1, 2, 3, 4, 5, 6}, {1, 2, 3, 4, 5, 6}, {2, 1, 3, 4, 5, 6}}, {}, {"MOORA", "TOPSIS", "VIKOR"});
}

}  // namespace

TEST(Distance, Footrule) {
    EXPECT_EQ(footrule_distance({1, 2, 3, 4, 5, 6}, {1, 2, 3, 4, 5, 6}), 0);
    EXPECT_EQ(footrule_distance({1, 2, 3, 4, 5, 6}, {6, 5, 4, 3, 2, 1}), 18);
    EXPECT_EQ(footrule_distance({1, 3, 2, 4, 5, 6}, {1, 3, 2, 4, 5, 6}), 0);
    EXPECT_EQ(footrule_distance({1, 3, 2, 4, 5, 6}, {1, 4, 2, 3, 5, 6}), 2);
    EXPECT_THROW(footrule_distance({1, 2}, {1, 2, 3}), PreconditionError);
}

TEST(Distance, Kendall) {
    EXPECT_EQ(kendall_distance({1, 2, 3, 4, 5, 6}, {1, 2, 3, 4, 5, 6}), 0);
    EXPECT_EQ(kendall_distance({1, 2, 3, 4, 5, 6}, {6, 5, 4, 3, 2, 1}), 15);
    EXPECT_EQ(kendall_distance({1, 2, 3}, {2, 1, 3}), 1);
}

TEST(Distance, MetricAxiomsOnRandomPairs) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 500; ++t) {
        const std::size_t a = 2 + static_cast<std::size_t>(t % 9);
        const auto x = random_ranking(a, rng), y = random_ranking(a, rng), z = random_ranking(a, rng);
        for (auto m : {Metric::footrule, Metric::kendall}) {
            EXPECT_EQ(distance(m, x, y), distance(m, y, x));
            EXPECT_LE(distance(m, x, z), distance(m, x, y) + distance(m, y, z));
        }
        // Diaconis-Graham: K <= F <= 2K.
        EXPECT_LE(kendall_distance(x, y), footrule_distance(x, y));
        EXPECT_LE(footrule_distance(x, y), 2 * kendall_distance(x, y));
        EXPECT_EQ(footrule_distance(x, y), oracle::footrule(x, y));
    }
}

TEST(Distance, LabeledAlignment) {
    EXPECT_EQ(distance(Metric::footrule, {"a", "b", "c"}, {1, 2, 3}, {"c", "b", "a"}, {3, 2, 1}), 0);
    EXPECT_EQ(distance(Metric::kendall, {"a", "b", "c"}, {1, 2, 3}, {"b", "a", "c"}, {1, 2, 3}), 1);
}

TEST(Ensemble, Validation) {
    EXPECT_THROW(make_ensemble({"a"}, {{1}}), PreconditionError);
    EXPECT_THROW(make_ensemble({"a", "b"}, {{1, 1}}), PreconditionError);
    EXPECT_THROW(make_ensemble({"a", "b"}, {{1, 2, 3}}), PreconditionError);
    EXPECT_THROW(make_ensemble({"a", "b"}, {{1, 2}}, {0.0}), PreconditionError);
}

TEST(BruteForce, ReferenceDeterrentsFirstClass) {
    const auto res = aggregate_bruteforce(deterrents_lc1());
    EXPECT_EQ(res.meta, (Ranking{1, 2, 3, 4, 5, 6}));
    EXPECT_EQ(res.objective, 2.0);
    EXPECT_TRUE(res.optimal);
}

TEST(BruteForce, ReferenceMotivatorsFirstClass) {
    const auto res = aggregate_bruteforce(motivators_lc1());
    EXPECT_EQ(res.meta, (Ranking{1, 3, 2, 4, 5, 6}));
    EXPECT_EQ(res.objective, 2.0);
}

TEST(BruteForce, Unanimity) {
    const Ranking r{3, 1, 4, 2, 5};
    const auto res = aggregate_bruteforce(make_ensemble(labels_of(5), {r, r, r}));
    EXPECT_EQ(res.meta, r);
    EXPECT_EQ(res.objective, 0.0);
    EXPECT_EQ(res.optimal_count, 1u);
}

TEST(BruteForce, TiesResolvedLexicographically) {
    const auto res = aggregate_bruteforce(make_ensemble(labels_of(2), {{1, 2}, {2, 1}}));
    EXPECT_EQ(res.meta, (Ranking{1, 2}));
    EXPECT_EQ(res.optimal_count, 2u);
    EXPECT_FALSE(res.warnings.empty());
}

TEST(BruteForce, NeutralityUnderRelabeling) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 30; ++t) {
        const auto e = random_ensemble(5, 3, rng);
        const auto base = aggregate_bruteforce(e);
        if (base.optimal_count != 1) continue;  // relabeling changes the lexicographic tie-break
        std::vector<std::size_t> perm(5);
        std::iota(perm.begin(), perm.end(), 0u);
        std::shuffle(perm.begin(), perm.end(), rng);
        RankingEnsemble moved = e;
        for (std::size_t k = 0; k < e.rankings.size(); ++k)
            for (std::size_t i = 0; i < 5; ++i) moved.rankings[k][i] = e.rankings[k][perm[i]];
        for (std::size_t i = 0; i < 5; ++i) moved.labels[i] = e.labels[perm[i]];
        const auto res = aggregate_bruteforce(moved);
        EXPECT_EQ(res.objective, base.objective);
        for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(res.meta[i], base.meta[perm[i]]);
    }
}

TEST(BruteForce, GlobalMinimumAgainstProbesAndOracle) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 10; ++t) {
        const std::size_t a = 4 + static_cast<std::size_t>(t % 4);
        const auto e = random_ensemble(a, 3, rng);
        for (auto m : {Metric::footrule, Metric::kendall}) {
            const auto res = aggregate_bruteforce(e, m);
            EXPECT_EQ(res.objective, objective(e, res.meta, m));  // re-verifiable from raw inputs
            for (int probe = 0; probe < 10000; ++probe) EXPECT_GE(objective(e, random_ranking(a, rng), m), res.objective);
        }
        EXPECT_EQ(aggregate_bruteforce(e).objective, static_cast<double>(oracle::best_footrule(e.rankings)));
    }
}

TEST(BruteForce, ThreadCountDoesNotMatter) {
    std::mt19937_64 rng(6);
    const auto e = random_ensemble(8, 3, rng);
    const auto one = aggregate_bruteforce(e, Metric::footrule, 1);
    const auto four = aggregate_bruteforce(e, Metric::footrule, 4);
    EXPECT_EQ(one.to_json().dump(), four.to_json().dump());
    EXPECT_THROW(aggregate_bruteforce(random_ensemble(9, 3, rng)), PreconditionError);
}

TEST(CrossEntropy, MatchesBruteForceOnSmallFixtures) {
    std::mt19937_64 rng(7);
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const std::size_t a = 3 + seed % 4;
        const auto e = random_ensemble(a, 3, rng);
        CrossEntropyOptions opt;
        opt.seed = seed;
        const auto ce = aggregate_cross_entropy(e, Metric::footrule, opt);
        EXPECT_EQ(ce.objective, aggregate_bruteforce(e).objective) << "seed " << seed;
        EXPECT_EQ(ce.objective, objective(e, ce.meta, Metric::footrule));
        EXPECT_FALSE(ce.optimal);
    }
}

TEST(CrossEntropy, NeverWorseThanAnyInput) {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 5; ++t) {
        const auto e = random_ensemble(12, 3, rng);
        CrossEntropyOptions opt;
        opt.seed = static_cast<std::uint64_t>(t);
        const auto ce = aggregate_cross_entropy(e, Metric::footrule, opt);
        for (const auto& r : e.rankings) EXPECT_LE(ce.objective, objective(e, r, Metric::footrule));
        EXPECT_TRUE(is_permutation_ranking(ce.meta));
    }
}

TEST(CrossEntropy, DeterministicForSeed) {
    std::mt19937_64 rng(9);
    const auto e = random_ensemble(10, 4, rng);
    CrossEntropyOptions opt;
    opt.seed = 42;
    EXPECT_EQ(aggregate_cross_entropy(e, Metric::kendall, opt).to_json().dump(),
              aggregate_cross_entropy(e, Metric::kendall, opt).to_json().dump());
}

TEST(CrossEntropy, Unanimity) {
    std::mt19937_64 rng(10);
    const auto r = random_ranking(11, rng);
    const auto res = aggregate_cross_entropy(make_ensemble(labels_of(11), {r, r, r}));
    EXPECT_EQ(res.meta, r);
    EXPECT_EQ(res.objective, 0.0);
}

TEST(Aggregate, DispatchBoundary) {
    std::mt19937_64 rng(11);
    EXPECT_EQ(aggregate(random_ensemble(6, 3, rng)).method, AggregationMethod::brute_force);
    EXPECT_EQ(aggregate(random_ensemble(8, 3, rng)).method, AggregationMethod::brute_force);
    EXPECT_EQ(aggregate(random_ensemble(12, 3, rng)).method, AggregationMethod::cross_entropy);
    AggregationPolicy low;
    low.brute_force_max = 4;
    EXPECT_EQ(aggregate(random_ensemble(6, 3, rng), low).method, AggregationMethod::cross_entropy);
}

TEST(Aggregate, WeightsScaleTheObjective) {
    auto e = deterrents_lc1();
    e.weights = {2.0, 2.0, 2.0};
    EXPECT_EQ(aggregate(e).objective, 4.0);
    e.weights = {1.0, 1.0, 5.0};
    const auto res = aggregate(e);
    EXPECT_EQ(res.meta, (Ranking{2, 1, 3, 4, 5, 6}));
}
