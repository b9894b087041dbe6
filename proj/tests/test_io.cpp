#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "cjmap/error.hpp"
#include "cjmap/io.hpp"
#include "instances.hpp"

namespace cjmap {
namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kInvalidArgument;
}

bool same_coins(const std::vector<Coin>& a, const std::vector<Coin>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].id != b[i].id || a[i].value != b[i].value || a[i].address != b[i].address ||
        a[i].origin != b[i].origin || a[i].tag != b[i].tag) {
      return false;
    }
  }
  return true;
}

bool same_tx(const Coinjoin& a, const Coinjoin& b) {
  return a.txid == b.txid && a.design == b.design &&
         a.declared_mining_feerate == b.declared_mining_feerate &&
         same_coins(a.inputs, b.inputs) && same_coins(a.outputs, b.outputs);
}

TEST(Io, TxRoundTrip) {
  TxDocument doc;
  doc.tx = testing::worked_example_tx();
  doc.tx.declared_mining_feerate = 3;
  doc.tx.inputs[0].address = "bc1q";
  doc.tx.inputs[1].origin = Origin::kRemix;
  doc.tx.outputs[2].tag = "t";
  PolicyParams p;
  p.delta_max = 7;
  p.coordination_rate_ppm = 3000;
  doc.policy = p;
  Knowledge k;
  k.same_owner_input_groups = {{"i2", "i3"}};
  k.linked_pairs = {{"i0", "o0"}};
  k.distinct_owner_pairs = {{"i0", "i1"}};
  doc.knowledge = k;
  doc.ground_truth = GroundTruthRecord{9, Mapping{{{{"i0"}, {"o0"}, 2}}}};
  const std::string text = dump_tx(doc);
  auto back = parse_tx(text);
  EXPECT_TRUE(same_tx(doc.tx, back.tx));
  ASSERT_TRUE(back.policy);
  EXPECT_EQ(back.policy->delta_max, 7);
  EXPECT_EQ(back.policy->coordination_rate_ppm, 3000);
  EXPECT_FALSE(back.policy->feerate);
  ASSERT_TRUE(back.knowledge);
  EXPECT_EQ(back.knowledge->same_owner_input_groups, k.same_owner_input_groups);
  EXPECT_EQ(back.knowledge->linked_pairs, k.linked_pairs);
  EXPECT_EQ(back.knowledge->distinct_owner_pairs, k.distinct_owner_pairs);
  EXPECT_EQ(back.ground_truth, doc.ground_truth);
  EXPECT_EQ(dump_tx(back), text);
}

TEST(Io, TxParseErrors) {
  EXPECT_EQ(code_of([] { parse_tx("{"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse_tx(R"({"txid":"a","inputs":[]})"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] {
              parse_tx(R"({"txid":"a","inputs":[{"id":"x","value":1.5}],"outputs":[]})");
            }),
            ErrorCode::kParseError);
  EXPECT_EQ(code_of([] {
              parse_tx(R"({"txid":"a","design":"nope","inputs":[],"outputs":[]})");
            }),
            ErrorCode::kUnknownDesign);
}

TEST(Io, ResultRoundTrip) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 20; ++i) {
    auto inst = testing::random_instance(rng, i % 2 ? Design::kJoinMarket : Design::kGeneric);
    auto res = enumerate_mappings(inst.ntx, inst.constraints);
    ResultDumpOptions opt;
    opt.stats = i % 3 == 0;
    const std::string text = dump_result(res, opt);
    auto back = parse_result(text);
    EXPECT_EQ(back.txid, res.txid);
    EXPECT_EQ(back.design, res.design);
    EXPECT_EQ(back.window, res.window);
    EXPECT_EQ(back.layout, res.layout);
    EXPECT_EQ(back.submappings, res.submappings);
    EXPECT_EQ(back.mappings, res.mappings);
    EXPECT_EQ(back.total_concrete, res.total_concrete);
    EXPECT_EQ(back.submapping_count, res.submapping_count);
    EXPECT_EQ(dump_result(back, opt), text);
  }
}

TEST(Io, ResultRejectsTampering) {
  PolicyParams p;
  auto res = enumerate_mappings(normalize_fees(testing::worked_example_tx(), build_policy(Design::kGeneric, p)),
                                default_constraints(Design::kGeneric));
  std::string text = dump_result(res);
  auto pos = text.find("\"total_concrete\": \"24\"");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 22, "\"total_concrete\": \"25\"");
  EXPECT_EQ(code_of([&] { parse_result(text); }), ErrorCode::kParseError);
}

TEST(Io, ConcreteExpansionInResult) {
  PolicyParams p;
  auto res = enumerate_mappings(normalize_fees(testing::worked_example_tx(), build_policy(Design::kGeneric, p)),
                                default_constraints(Design::kGeneric));
  ResultDumpOptions opt;
  opt.concrete = true;
  const std::string text = dump_result(res, opt);
  EXPECT_NE(text.find("\"concrete\""), std::string::npos);
  EXPECT_EQ(parse_result(text).mappings, res.mappings);
}

TEST(Io, WeightsRoundTrip) {
  WeightTable w;
  w.default_weight = 0.25;
  w.entries[SignatureKey{{3, 8}, {4, 6}}] = 2.5;
  w.entries[SignatureKey{{6}, {6}}] = 0;
  auto back = parse_weights(dump_weights(w));
  EXPECT_EQ(back.default_weight, w.default_weight);
  EXPECT_EQ(back.entries, w.entries);
  EXPECT_EQ(code_of([] { parse_weights(R"({"default_weight":-1})"); }), ErrorCode::kParseError);
}

TEST(Io, GraphRoundTrip) {
  TxGraph g;
  g.transactions.push_back({"a", 10, 5, {{{"ext", 0}, 100, "x"}}, {{60, "y"}, {40, std::nullopt}}});
  g.transactions.push_back({"b", 20, std::nullopt, {{{"a", 0}, std::nullopt, std::nullopt}}, {{59, "z"}}});
  g.coinjoin_ids = {"a"};
  const std::string text = dump_graph(g);
  auto back = parse_graph(text);
  ASSERT_EQ(back.transactions.size(), 2u);
  EXPECT_EQ(back.coinjoin_ids, g.coinjoin_ids);
  EXPECT_EQ(back.transactions[0].height, 5);
  EXPECT_EQ(back.transactions[0].inputs[0].value, 100);
  EXPECT_EQ(back.transactions[1].inputs[0].prev, (OutPoint{"a", 0}));
  EXPECT_EQ(back.transactions[0].outputs[1].address, std::nullopt);
  EXPECT_EQ(dump_graph(back), text);
}

TEST(Io, ConfigRoundTrip) {
  Config c;
  c.policy.feerate = 4;
  c.policy.delta_max = 10;
  c.max_inputs_per_user = 5;
  c.max_positive_residual_submappings = 1;
  c.common_denominations = {5000, 10000};
  c.design = "wasabi2";
  c.threads = 2;
  const std::string text = dump_config(c);
  auto back = parse_config(text);
  EXPECT_EQ(dump_config(back), text);
  auto cons = apply_config(default_constraints(Design::kWasabi2), back);
  EXPECT_EQ(cons.max_inputs_per_user, 5u);
  EXPECT_EQ(cons.max_positive_residual_submappings, 1u);
  PolicyParams over;
  over.feerate = 9;
  auto merged = merge_policy(back.policy, over);
  EXPECT_EQ(merged.feerate, 9);
  EXPECT_EQ(merged.delta_max, 10);
}

TEST(Io, LinkedRoundTripAndFileMembers) {
  LinkedDocument doc;
  Coinjoin a = testing::worked_example_tx();
  a.txid = "a";
  Coinjoin b;
  b.txid = "b";
  b.inputs = {{"i0", 6}, {"i1", 1}};
  b.outputs = {{"o0", 7}};
  doc.set.txs = {a, b};
  doc.set.internal_coins = {{"a", "o0", "b", "i0"}};
  doc.set.links = {{"a", "b", 6}};
  PolicyParams p;
  p.delta_max = 1;
  doc.params["b"] = p;
  const std::string text = dump_linked(doc);
  auto back = parse_linked(text);
  EXPECT_EQ(dump_linked(back), text);
  ASSERT_EQ(back.set.txs.size(), 2u);
  EXPECT_TRUE(same_tx(back.set.txs[1], b));
  EXPECT_EQ(back.params.at("b").delta_max, 1);

  auto dir = std::filesystem::temp_directory_path() / "cjmap_io_linked";
  std::filesystem::create_directories(dir);
  write_file((dir / "a.json").string(), dump_tx(TxDocument{a, {}, {}, {}}));
  write_file((dir / "b.json").string(), dump_tx(TxDocument{b, p, {}, {}}));
  auto from_files = parse_linked(
      R"({"members":["a.json","b.json"],"links":[{"from":"a","to":"b","capacity":6}],)"
      R"("internal_coins":[{"from":"a","output":"o0","to":"b","input":"i0"}]})",
      dir.string());
  EXPECT_EQ(dump_linked(from_files), text);
  std::filesystem::remove_all(dir);
}

TEST(Io, TrendCsvAndFit) {
  std::vector<TrendRow> rows;
  for (std::size_t s = 4; s <= 12; s += 2) {
    rows.push_back({s, std::uint64_t(1) << (s / 2), BigCount(1) << s, 0});
  }
  auto pts = parse_trend_csv(trend_csv(rows));
  ASSERT_EQ(pts.size(), rows.size());
  auto fit = fit_trend(pts);
  EXPECT_NEAR(fit.slope, 0.5, 1e-12);
  const std::string text = dump_fit(fit, 400, 0.2);
  EXPECT_NE(text.find("\"effective_size\": 320"), std::string::npos);
  EXPECT_EQ(code_of([] { parse_trend_csv("size,count\n4,abc\n"); }), ErrorCode::kParseError);
  auto plain = parse_trend_csv("1,2\n2,4\n3,8\n");
  EXPECT_EQ(plain.size(), 3u);
}

TEST(Io, Horizons) {
  EXPECT_TRUE(std::isinf(parse_horizon("inf")));
  EXPECT_EQ(parse_horizon("7"), 7.0);
  EXPECT_EQ(format_horizon(kInfiniteHorizon), "inf");
  EXPECT_EQ(format_horizon(31), "31");
  EXPECT_EQ(code_of([] { parse_horizon("-1"); }), ErrorCode::kParseError);
  EXPECT_EQ(code_of([] { parse_horizon("7x"); }), ErrorCode::kParseError);
}

TEST(Io, FileErrors) {
  EXPECT_EQ(code_of([] { read_file("/nonexistent/cjmap.json"); }), ErrorCode::kIoError);
  EXPECT_EQ(code_of([] { write_file("/nonexistent/dir/x.json", "x"); }), ErrorCode::kIoError);
}

}  // namespace
}  // namespace cjmap
