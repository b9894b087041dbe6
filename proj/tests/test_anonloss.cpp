#include <gtest/gtest.h>

#include "cjmap/anonloss.hpp"
#include "cjmap/error.hpp"

namespace cjmap {
namespace {

constexpr std::int64_t kDay = 86'400;

GraphInput external(const std::string& tag, Amount value, const std::string& addr) {
  return GraphInput{{"ext-" + tag, 0}, value, addr};
}

GraphInput spend(const std::string& txid, std::uint32_t index) {
  return GraphInput{{txid, index}, std::nullopt, std::nullopt};
}

// One coinjoin "cj" at t=0: 4 outputs of 100 and 2 of 250.
TxGraph base_graph() {
  TxGraph g;
  GraphTx cj{"cj", 0, 100, {}, {}};
  for (int i = 0; i < 6; ++i) cj.inputs.push_back(external(std::to_string(i), 200, "a" + std::to_string(i)));
  for (int i = 0; i < 4; ++i) cj.outputs.push_back({100, "o" + std::to_string(i)});
  cj.outputs.push_back({250, "o4"});
  cj.outputs.push_back({250, "o5"});
  g.transactions.push_back(cj);
  g.coinjoin_ids = {"cj"};
  return g;
}

void add_spender(TxGraph& g, const std::string& txid, std::int64_t ts,
                 std::vector<GraphInput> ins, std::optional<std::int64_t> height = {}) {
  GraphTx t{txid, ts, height, std::move(ins), {{1, "dest-" + txid}}};
  g.transactions.push_back(std::move(t));
}

TEST(AnonLoss, NoPostMixSpendsMeansNoLoss) {
  auto g = base_graph();
  auto r = compute_loss(g, {0, 1, 7, kInfiniteHorizon}, {});
  for (double v : r.overall.loss) EXPECT_EQ(v, 0.0);
  for (const auto& o : r.per_output) {
    for (double v : o.loss) EXPECT_EQ(v, 0.0);
  }
}

TEST(AnonLoss, TwoOfFourConsolidatedIsHalf) {
  auto g = base_graph();
  add_spender(g, "merge", 3600, {spend("cj", 0), spend("cj", 1)});
  auto r = compute_loss(g, {0, 1, kInfiniteHorizon}, {});
  // Every 100-valued output sees 2 of its 4-element anonymity set gone.
  for (const auto& o : r.per_output) {
    if (o.value == 100) {
      EXPECT_EQ(o.loss[0], 0.0);
      EXPECT_EQ(o.loss[1], 0.5);
      EXPECT_EQ(o.loss[2], 0.5);
    } else {
      EXPECT_EQ(o.loss[1], 0.0);
    }
  }
  // Average over 6 outputs: 4 * 0.5 / 6.
  ASSERT_EQ(r.per_tx.size(), 1u);
  EXPECT_DOUBLE_EQ(r.per_tx[0].loss[1], 2.0 / 6.0);
  EXPECT_DOUBLE_EQ(r.overall.loss[1], 2.0 / 6.0);
}

TEST(AnonLoss, HorizonsAreMonotoneAndBounded) {
  auto g = base_graph();
  add_spender(g, "early", kDay / 2, {spend("cj", 0), spend("cj", 1)});
  add_spender(g, "week", 5 * kDay, {spend("cj", 2), spend("cj", 4)});
  add_spender(g, "late", 400 * kDay, {spend("cj", 3), spend("cj", 5)});
  const std::vector<double> hs{0, 1, 7, 31, 365, kInfiniteHorizon};
  auto r = compute_loss(g, hs, {});
  for (std::size_t h = 1; h < hs.size(); ++h) {
    EXPECT_GE(r.overall.loss[h], r.overall.loss[h - 1]);
    for (const auto& o : r.per_output) EXPECT_GE(o.loss[h], o.loss[h - 1]);
  }
  EXPECT_EQ(r.overall.loss[0], 0.0);
  // Everything is consolidated eventually.
  EXPECT_EQ(r.overall.loss.back(), 1.0);
  // Hand values: day 1 -> 100s at 2/4, 250s at 0; day 7 -> 100s 3/4, 250s 1/2.
  EXPECT_DOUBLE_EQ(r.overall.loss[1], (4 * 0.5) / 6.0);
  EXPECT_DOUBLE_EQ(r.overall.loss[2], (4 * 0.75 + 2 * 0.5) / 6.0);
  EXPECT_DOUBLE_EQ(r.overall.loss[4], (4 * 0.75 + 2 * 0.5) / 6.0);
}

TEST(AnonLoss, SingleCoinjoinInputIsNotConsolidation) {
  auto g = base_graph();
  add_spender(g, "pay", 10, {spend("cj", 0), external("x", 50, "zz"), external("y", 50, "zy")});
  GraphIndex index(g);
  EXPECT_TRUE(find_consolidations(index, "cj", kInfiniteHorizon).empty());
}

TEST(AnonLoss, CrossCoinjoinConsolidation) {
  auto g = base_graph();
  GraphTx other{"cj2", 0, 100, {}, {{300, "p0"}, {300, "p1"}}};
  other.inputs = {external("q", 400, "q0"), external("r", 400, "r0")};
  g.transactions.push_back(other);
  g.coinjoin_ids.insert("cj2");
  add_spender(g, "mix", 100, {spend("cj", 4), spend("cj2", 0)});
  GraphIndex index(g);
  EXPECT_EQ(find_consolidations(index, "cj", 1), (std::set<std::uint32_t>{4}));
  EXPECT_EQ(find_consolidations(index, "cj2", 1), (std::set<std::uint32_t>{0}));
}

TEST(AnonLoss, RemixIsNotConsolidation) {
  auto g = base_graph();
  GraphTx remix{"cj2", 100, 101, {spend("cj", 0), spend("cj", 1)}, {{100, "r0"}, {100, "r1"}}};
  g.transactions.push_back(remix);
  g.coinjoin_ids.insert("cj2");
  GraphIndex index(g);
  EXPECT_TRUE(find_consolidations(index, "cj", kInfiniteHorizon).empty());
}

TEST(AnonLoss, BlockHeightClock) {
  auto g = base_graph();
  // Timestamp says a year later, height says within a day.
  add_spender(g, "merge", 365 * kDay, {spend("cj", 0), spend("cj", 1)}, 100 + 143);
  GraphIndex index(g);
  LossOptions by_height;
  by_height.clock = HorizonClock::kBlockHeight;
  EXPECT_EQ(find_consolidations(index, "cj", 1, by_height).size(), 2u);
  EXPECT_TRUE(find_consolidations(index, "cj", 1).empty());
}

TEST(AnonLoss, BucketsIncludeOther) {
  auto g = base_graph();
  add_spender(g, "merge", 10, {spend("cj", 4), spend("cj", 5)});
  auto r = compute_loss(g, {1}, buckets_from_edges({0, 100, 200}));
  std::map<std::string, double> by;
  for (const auto& b : r.per_bucket) by[b.bucket] = b.loss[0];
  EXPECT_EQ(by.at("[0, 100]"), 0.0);
  EXPECT_EQ(by.at(std::string(kOtherBucket)), 1.0);
  EXPECT_EQ(by.count("(100, 200]"), 0u);
  EXPECT_EQ(r.per_tx_bucket.size(), 2u);
}

TEST(AnonLoss, NamedBuckets) {
  EXPECT_EQ(named_buckets("default").size(), 4u);
  EXPECT_EQ(named_buckets("whirlpool")[0].label, "0.001 pool");
  auto w1 = named_buckets("wasabi1");
  EXPECT_TRUE(w1[0].contains(10'000'000));
  EXPECT_FALSE(w1[1].contains(19'000'000));
  EXPECT_THROW(named_buckets("nope"), Error);
}

TEST(AnonLoss, ThreadsDoNotChangeReport) {
  auto g = base_graph();
  for (int c = 2; c < 6; ++c) {
    auto id = "cj" + std::to_string(c);
    GraphTx t{id, 0, 100, {external(id, 400, id), external(id + "b", 400, id + "b")},
              {{300, "x" + id}, {300, "y" + id}}};
    g.transactions.push_back(t);
    g.coinjoin_ids.insert(id);
    add_spender(g, "m" + id, c * kDay, {spend(id, 0), spend(id, 1)});
  }
  LossOptions one, four;
  four.threads = 4;
  const std::vector<double> hs{1, 3, 7};
  auto a = compute_loss(g, hs, named_buckets("default"), one);
  auto b = compute_loss(g, hs, named_buckets("default"), four);
  EXPECT_EQ(a.overall.loss, b.overall.loss);
  ASSERT_EQ(a.per_tx.size(), b.per_tx.size());
  for (std::size_t i = 0; i < a.per_tx.size(); ++i) EXPECT_EQ(a.per_tx[i].loss, b.per_tx[i].loss);
}

TEST(AnonLoss, Errors) {
  auto g = base_graph();
  EXPECT_THROW(compute_loss(g, {-1}, {}), Error);
  g.coinjoin_ids.clear();
  EXPECT_THROW(compute_loss(g, {1}, {}), Error);
  auto bad = base_graph();
  add_spender(bad, "x", 10, {spend("cj", 0)});
  add_spender(bad, "y", 10, {spend("cj", 0)});
  try {
    validate_graph(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidGraph);
  }
  auto back = base_graph();
  add_spender(back, "x", -10, {spend("cj", 0)});
  EXPECT_THROW(validate_graph(back), Error);
}

Coinjoin detection_tx(std::size_t inputs, std::size_t distinct) {
  Coinjoin tx;
  tx.txid = "d";
  for (std::size_t i = 0; i < inputs; ++i) {
    tx.inputs.push_back({"i" + std::to_string(i), 10, "a" + std::to_string(i % distinct)});
    tx.outputs.push_back({"o" + std::to_string(i), 9, "b" + std::to_string(i % distinct)});
  }
  return tx;
}

TEST(Detection, Screens) {
  EXPECT_TRUE(detect_coinjoin(detection_tx(60, 60)));
  EXPECT_FALSE(detect_coinjoin(detection_tx(60, 3)));
  EXPECT_FALSE(detect_coinjoin(detection_tx(10, 10)));
  DetectionParams p;
  p.exclusion_list = {"d"};
  EXPECT_FALSE(detect_coinjoin(detection_tx(60, 60), p));
  // 40 coins, 10 distinct addresses: reuse 0.75 > 0.70.
  EXPECT_FALSE(detect_coinjoin(detection_tx(20, 5)));
}

TEST(Detection, AnonymitySet) {
  Coinjoin tx;
  tx.txid = "f";
  tx.inputs = {{"i0", 8}, {"i1", 6}, {"i2", 3}, {"i3", 3}};
  tx.outputs = {{"o0", 6}, {"o1", 6}, {"o2", 4}, {"o3", 2}, {"o4", 2}};
  EXPECT_EQ(anonymity_set(tx, "o0"), (std::vector<std::string>{"o0", "o1"}));
  EXPECT_EQ(anonymity_set(tx, "o2"), (std::vector<std::string>{"o2"}));
  EXPECT_THROW(anonymity_set(tx, "zz"), Error);
}

}  // namespace
}  // namespace cjmap
