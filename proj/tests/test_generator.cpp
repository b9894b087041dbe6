#include <gtest/gtest.h>

#include "cjmap/error.hpp"
#include "cjmap/generator.hpp"
#include "cjmap/trend.hpp"

namespace cjmap {
namespace {

const Design kDesigns[] = {Design::kGeneric, Design::kWasabi2, Design::kWasabi1,
                           Design::kWhirlpool, Design::kJoinMarket};

EnumerationResult enumerate_truth(const GroundTruth& gt) {
  auto ntx = normalize_fees(gt.tx, build_policy(gt.design, gt.policy));
  EnumerateOptions opt;
  opt.threads = 1;
  return enumerate_mappings(ntx, default_constraints(gt.design), opt);
}

TEST(Generator, SeedDeterminism) {
  for (Design d : kDesigns) {
    auto a = generate(d, 3, 99);
    auto b = generate(d, 3, 99);
    EXPECT_EQ(a.tx.inputs.size(), b.tx.inputs.size());
    for (std::size_t i = 0; i < a.tx.inputs.size(); ++i) {
      EXPECT_EQ(a.tx.inputs[i].value, b.tx.inputs[i].value);
    }
    EXPECT_EQ(a.true_mapping, b.true_mapping);
    auto c = generate(d, 3, 100);
    EXPECT_FALSE(c.true_mapping == a.true_mapping && c.tx.input_sum() == a.tx.input_sum());
  }
}

TEST(Generator, SingleGenericUserHasOneMapping) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto gt = generate(Design::kGeneric, 1, seed);
    auto res = enumerate_truth(gt);
    ASSERT_GE(res.mappings.size(), 1u);
    ASSERT_TRUE(find_numeric(res, gt.true_mapping));
    if (res.mappings.size() == 1) {
      EXPECT_EQ(res.mappings[0].submappings.size(), 1u);
    }
  }
}

TEST(Generator, Wasabi2InclusionExample) {
  auto gt = generate(Design::kWasabi2, 3, 42);
  EXPECT_TRUE(find_numeric(enumerate_truth(gt), gt.true_mapping));
}

TEST(Generator, WhirlpoolFiveUsers) {
  auto gt = generate(Design::kWhirlpool, 5, 7);
  ASSERT_EQ(gt.tx.inputs.size(), 5u);
  ASSERT_EQ(gt.tx.outputs.size(), 5u);
  GeneratorParams p;
  for (const auto& c : gt.tx.outputs) EXPECT_EQ(c.value, p.pool_value);
  for (const auto& c : gt.tx.inputs) {
    if (c.is_remix()) EXPECT_EQ(c.value, p.pool_value);
    else EXPECT_GT(c.value, p.pool_value);
  }
}

TEST(Generator, TrueMappingPartitionsTx) {
  for (Design d : kDesigns) {
    auto gt = generate(d, 4, 5);
    std::size_t ins = 0, outs = 0;
    for (const auto& s : gt.true_mapping.submappings) {
      ins += s.input_ids.size();
      outs += s.output_ids.size();
      EXPECT_FALSE(s.input_ids.empty());
    }
    EXPECT_EQ(ins, gt.tx.inputs.size());
    EXPECT_EQ(outs, gt.tx.outputs.size());
  }
}

TEST(Generator, GroundTruthInclusionAllDesigns) {
  std::size_t checked = 0;
  for (Design d : kDesigns) {
    for (std::size_t size = 6; size <= 16; ++size) {
      if (d == Design::kWhirlpool && size % 2) continue;
      for (std::uint64_t k = 0; k < 4; ++k) {
        auto gt = generate_sized(d, size, 2024, k);
        ASSERT_EQ(gt.tx.inputs.size() + gt.tx.outputs.size(), size);
        ASSERT_TRUE(find_numeric(enumerate_truth(gt), gt.true_mapping))
            << design_name(d) << " size " << size << " index " << k;
        ++checked;
      }
    }
  }
  EXPECT_GE(checked, 200u);
}

TEST(Generator, Wasabi2ResidualsInWindow) {
  for (std::uint64_t k = 0; k < 50; ++k) {
    auto gt = generate_sized(Design::kWasabi2, 6 + k % 11, 3, k);
    auto policy = build_policy(Design::kWasabi2, gt.policy);
    for (const auto& s : gt.true_mapping.submappings) {
      EXPECT_GE(s.residual, 0);
      EXPECT_LE(s.residual, policy.residual_max);
    }
  }
}

TEST(Generator, InfeasibleParams) {
  GeneratorParams p;
  p.min_inputs_per_user = 4;
  p.max_inputs_per_user = 2;
  EXPECT_THROW(generate(Design::kGeneric, 2, 1, p), Error);
  p = {};
  p.mining_feerate = 100;
  EXPECT_THROW(generate(Design::kWasabi2, 2, 1, p), Error);
  EXPECT_THROW(generate(Design::kJoinMarket, 1, 1), Error);
  EXPECT_THROW(generate_sized(Design::kWhirlpool, 7, 1, 0), Error);
}

TEST(Generator, SizeTwoHasOneMapping) {
  auto rows = trend_dataset(Design::kGeneric, {2}, 3, 8, {}, 1);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) EXPECT_EQ(r.numeric_mappings, 1u);
}

TEST(Generator, TrendDatasetShape) {
  std::vector<std::size_t> sizes;
  for (std::size_t s = 6; s <= 14; ++s) sizes.push_back(s);
  auto a = trend_dataset(Design::kGeneric, sizes, 10, 5, {}, 1);
  auto b = trend_dataset(Design::kGeneric, sizes, 10, 5, {}, 3);
  ASSERT_EQ(a.size(), 90u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].size, sizes[i / 10]);
    EXPECT_GE(a[i].numeric_mappings, 1u);
    EXPECT_EQ(a[i].numeric_mappings, b[i].numeric_mappings);
    EXPECT_EQ(a[i].concrete_mappings, b[i].concrete_mappings);
  }
}

TEST(Trend, ExactExponential) {
  std::vector<TrendPoint> rows;
  for (int s = 4; s <= 20; s += 2) rows.push_back({double(s), 0.5 * s});
  auto fit = fit_trend(rows);
  EXPECT_NEAR(fit.slope, 0.5, 1e-12);
  EXPECT_NEAR(fit.intercept, 0.0, 1e-12);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
}

TEST(Trend, FlatCounts) {
  std::vector<TrendPoint> rows;
  for (int s = 4; s <= 10; ++s) rows.push_back({double(s), 0.0});
  auto fit = fit_trend(rows, TrendAggregate::kNone);
  EXPECT_EQ(fit.slope, 0.0);
  EXPECT_EQ(fit.intercept, 0.0);
  EXPECT_EQ(fit.r_squared, 1.0);
}

TEST(Trend, PredictWithLoss) {
  std::vector<TrendPoint> rows{{1, 1}, {2, 2}, {3, 3}};
  auto fit = fit_trend(rows);
  EXPECT_NEAR(fit.predict(400, 0.2), 320, 1e-9);
  EXPECT_THROW(fit.predict(400, 1.5), Error);
}

TEST(Trend, Degenerate) {
  std::vector<TrendPoint> rows{{5, 1}, {5, 2}, {5, 3}};
  try {
    fit_trend(rows);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateData);
  }
}

TEST(Trend, MeanAndRawShareSlope) {
  std::vector<TrendPoint> rows{{1, 0}, {1, 2}, {2, 2}, {2, 3}, {3, 5}, {3, 4}};
  auto a = fit_trend(rows, TrendAggregate::kMean);
  auto b = fit_trend(rows, TrendAggregate::kNone);
  EXPECT_NEAR(a.slope, b.slope, 1e-12);
  EXPECT_NEAR(a.intercept, b.intercept, 1e-12);
  EXPECT_GE(a.r_squared, b.r_squared);
}

}  // namespace
}  // namespace cjmap
