#include "surveyrank/simulate.hpp"
#include "surveyrank/survey_data.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace surveyrank;
using surveyrank::testing::dataset_from;
using surveyrank::testing::items_schema;
using surveyrank::testing::read_csv_text;

namespace {

SurveySchema schema_with_covariates() {
    return items_schema(3, {{"gender", CovariateKind::categorical, {"female", "male"}, ""},
                            {"density", CovariateKind::continuous, {}, "person/km2"}},
                        {{"flat", ConsistencyRule::Type::straight_lining, {"I1", "I2", "I3"}, 6}});
}

}  // namespace

TEST(LikertValue, RejectsOutOfRange) {
    EXPECT_NO_THROW(LikertValue(1));
    EXPECT_NO_THROW(LikertValue(7));
    EXPECT_THROW(LikertValue(0), DataError);
    EXPECT_THROW(LikertValue(8), DataError);
}

TEST(LoadDataset, ThreeValidRows) {
    const auto ds = read_csv_text("respondent_id,I1,I2,I3,gender,density\n"
                                  "a,1,2,3,female,100\n"
                                  "b,4,5,6,male,200.5\n"
                                  "c,7,7,6,,\n",
                                  schema_with_covariates());
    EXPECT_EQ(ds.size(), 3u);
    EXPECT_TRUE(ds.provenance.load_errors.empty());
    EXPECT_EQ(*ds.response(1, "I2"), 5);
    EXPECT_EQ(std::get<double>(ds.records[1].covariates[1]), 200.5);
    EXPECT_TRUE(std::holds_alternative<std::monostate>(ds.records[2].covariates[0]));
}

TEST(LoadDataset, OutOfRangeCellIsRowError) {
    const auto ds = read_csv_text("respondent_id,I1,I2,I3,gender,density\n"
                                  "a,1,2,3,female,100\n"
                                  "b,4,8,6,male,200\n",
                                  schema_with_covariates());
    ASSERT_EQ(ds.size(), 1u);
    ASSERT_EQ(ds.provenance.load_errors.size(), 1u);
    const auto& e = ds.provenance.load_errors[0];
    EXPECT_EQ(e.row, 2u);
    EXPECT_EQ(e.column, "I2");
    EXPECT_NE(e.message.find('8'), std::string::npos);
}

TEST(LoadDataset, RowErrorsKeepTheRest) {
    // 1000 rows, 98 of them malformed in different ways.
    std::string text = "respondent_id,I1,I2,I3,gender,density\n";
    int bad = 0;
    for (int r = 0; r < 1000; ++r) {
        const std::string id = "R" + std::to_string(r);
        if (r % 10 == 3 && bad < 98) {
            switch (bad++ % 4) {
                case 0: text += id + ",9,1,1,female,1\n"; break;
                case 1: text += id + ",x,1,1,female,1\n"; break;
                case 2: text += id + ",1,1,1,other,1\n"; break;
                default: text += id + ",1,1\n"; break;
            }
        } else {
            text += id + ",1,2,3,male,5\n";
        }
    }
    const auto ds = read_csv_text(text, schema_with_covariates());
    EXPECT_EQ(ds.size(), 902u);
    EXPECT_EQ(ds.provenance.load_errors.size(), 98u);
}

TEST(LoadDataset, DuplicateIdRejected) {
    const auto ds = read_csv_text("respondent_id,I1,I2,I3,gender,density\na,1,2,3,female,1\na,1,2,3,female,1\n", schema_with_covariates());
    EXPECT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds.provenance.load_errors.size(), 1u);
}

TEST(LoadDataset, MissingColumnIsFatal) {
    EXPECT_THROW(read_csv_text("respondent_id,I1,I2,gender,density\na,1,2,female,1\n", schema_with_covariates()), DataError);
    EXPECT_THROW(read_csv_text("respondent_id,I1,I2,I3,gender,density,extra\na,1,2,3,female,1,1\n", schema_with_covariates()), DataError);
}

TEST(CleanDataset, DropReasons) {
    const auto raw = read_csv_text("respondent_id,I1,I2,I3,gender,density\n"
                                   "ok,1,2,3,female,1\n"
                                   "partial,1,,3,female,1\n"
                                   "empty,,,,female,1\n"
                                   "flat,5,5,5,male,1\n",
                                   schema_with_covariates());
    const auto [clean, report] = clean_dataset(raw);
    ASSERT_EQ(clean.size(), 1u);
    EXPECT_EQ(clean.records[0].respondent_id, "ok");
    ASSERT_EQ(report.dropped.size(), 3u);
    EXPECT_EQ(report.dropped[0].reason, "partially-filled");
    EXPECT_EQ(report.dropped[1].reason, "un-filled");
    EXPECT_EQ(report.dropped[2].reason, "inconsistent");
    EXPECT_EQ(report.input, 4u);
    EXPECT_EQ(report.kept, 1u);
}

TEST(CleanDataset, ReferenceFlowShape) {
    // 902 loadable rows, 63 of them straight-lined.
    std::vector<std::vector<int>> rows;
    for (int r = 0; r < 902; ++r) rows.push_back(r < 63 ? std::vector<int>{4, 4, 4} : std::vector<int>{1 + r % 7, 2, 3});
    const auto raw = dataset_from(schema_with_covariates(), rows);
    const auto [clean, report] = clean_dataset(raw);
    EXPECT_EQ(clean.size(), 839u);
    EXPECT_EQ(report.dropped.size(), 63u);
}

TEST(CleanDataset, MaxDifferenceRule) {
    const auto schema = items_schema(2, {}, {{"contradiction", ConsistencyRule::Type::max_difference, {"I1", "I2"}, 4}});
    const auto [clean, report] = clean_dataset(dataset_from(schema, {{1, 7}, {2, 6}, {3, 3}}));
    EXPECT_EQ(clean.size(), 2u);
    ASSERT_EQ(report.dropped.size(), 1u);
    EXPECT_EQ(report.dropped[0].respondent_id, "R1");
}

TEST(CleanDataset, Idempotent) {
    const auto sim = simulate_survey([] {
        auto g = reference_generator_preset(600, 3);
        g.unfilled_rate = 0.05;
        g.partial_rate = 0.05;
        return g;
    }());
    const auto [once, r1] = clean_dataset(sim.dataset);
    EXPECT_GT(r1.dropped.size(), 0u);
    const auto [twice, r2] = clean_dataset(once);
    EXPECT_EQ(r2.dropped.size(), 0u);
    EXPECT_TRUE(once.same_data(twice));
}

TEST(Dataset, RoundTripThroughCsvAndJson) {
    const auto sim = simulate_survey(reference_generator_preset(200, 11));
    std::ostringstream os;
    write_dataset(os, sim.dataset);
    const auto schema = SurveySchema::from_json(sim.dataset.schema.to_json());
    const auto back = read_csv_text(os.str(), schema);
    EXPECT_TRUE(back.provenance.load_errors.empty());
    EXPECT_TRUE(back.same_data(sim.dataset));
    std::ostringstream again;
    write_dataset(again, back);
    EXPECT_EQ(os.str(), again.str());
}

TEST(Distribution, SmallExamples) {
    const auto schema = items_schema(2);
    const auto row = likert_distribution(dataset_from(schema, {{5, 1}, {5, 1}, {6, 1}, {7, 1}}), "I1");
    const std::array<double, 7> expected{0, 0, 0, 0, 50, 25, 25};
    for (int k = 0; k < 7; ++k) EXPECT_DOUBLE_EQ(row.shares[k], expected[k]);
    const auto flat = likert_distribution(dataset_from(schema, {{4, 1}, {4, 2}, {4, 3}}), "I1");
    EXPECT_DOUBLE_EQ(flat.shares[3], 100.0);
    EXPECT_DOUBLE_EQ(weighted_mean(flat), 4.0);
}

TEST(Distribution, SampledToReferenceRow) {
    // Draw from I5's reference distribution; shares track it within sampling error.
    const std::array<double, 7> target{0.2, 0.6, 0.7, 2.1, 11.7, 56.4, 28.2};
    std::mt19937_64 rng(5);
    std::discrete_distribution<int> pick(target.begin(), target.end());
    std::vector<std::vector<int>> rows;
    const int n = 20000;
    for (int i = 0; i < n; ++i) rows.push_back({pick(rng) + 1, 1});
    const auto row = likert_distribution(dataset_from(items_schema(2), rows), "I1");
    for (int k = 0; k < 7; ++k) {
        const double p = target[k] / 100.0;
        const double se = 100.0 * std::sqrt(p * (1 - p) / n);
        EXPECT_NEAR(row.shares[k], target[k], 4.0 * se + 1e-9) << "level " << k + 1;
    }
}

TEST(WeightedMean, ReferenceRows) {
    DistributionRow i5{"I5", {0.2, 0.6, 0.7, 2.1, 11.7, 56.4, 28.2}, 0};
    DistributionRow i7{"I7", {0.4, 0.1, 0.1, 2.1, 7.5, 55.8, 34.0}, 0};
    EXPECT_NEAR(weighted_mean(i5), 6.062, 1e-9);
    EXPECT_NEAR(weighted_mean(i7), 6.196, 1e-9);
    DistributionRow uniform{"U", {}, 0};
    uniform.shares.fill(100.0 / 7.0);
    EXPECT_NEAR(weighted_mean(uniform), 4.0, 1e-12);
}

TEST(WeightedMean, RejectsBadTotals) {
    DistributionRow bad{"X", {10, 10, 10, 10, 10, 10, 10}, 0};
    EXPECT_THROW(weighted_mean(bad), DataError);
}

TEST(WeightedMean, MeanInRangeForComputedRows) {
    const auto sim = simulate_survey(reference_generator_preset(300, 2));
    for (const auto& item : sim.dataset.schema.items()) {
        const auto row = likert_distribution(sim.dataset, item.code);
        EXPECT_NEAR(row.total(), 100.0, 0.1);
        const double m = weighted_mean(row);
        EXPECT_GE(m, 1.0);
        EXPECT_LE(m, 7.0);
    }
}

TEST(SampleSize, Values) {
    EXPECT_EQ(required_sample_size(1.96, 0.5, 0.05), 384);
    EXPECT_EQ(required_sample_size(1.96, 0.5, 0.10), 96);
    EXPECT_EQ(required_sample_size(2.5758, 0.5, 0.05), 663);
    EXPECT_THROW(required_sample_size(1.96, 0.0, 0.05), PreconditionError);
    EXPECT_THROW(required_sample_size(1.96, 0.5, 0.0), PreconditionError);
}

TEST(SampleSize, Monotone) {
    long long prev = required_sample_size(1.96, 0.5, 0.01);
    for (double e = 0.02; e < 0.3; e += 0.01) {
        const long long cur = required_sample_size(1.96, 0.5, e);
        EXPECT_LE(cur, prev);
        prev = cur;
    }
    prev = required_sample_size(0.5, 0.3, 0.05);
    for (double z = 0.6; z < 4.0; z += 0.1) {
        const long long cur = required_sample_size(z, 0.3, 0.05);
        EXPECT_GE(cur, prev);
        prev = cur;
    }
}

TEST(Schema, RejectsBadDefinitions) {
    EXPECT_THROW(SurveySchema({{"I1", "", ""}}, {{"A", "", ScaleKind::attitude, {"I2"}}}, {}), DataError);
    EXPECT_THROW(SurveySchema({{"I1", "", ""}, {"I1", "", ""}}, {}, {}), DataError);
    EXPECT_THROW(SurveySchema({{"I1", "", ""}}, {}, {{"c", CovariateKind::categorical, {}, ""}}), DataError);
}
