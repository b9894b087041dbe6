#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <string>

#include "cjmap/cjmap.h"

namespace {

const char* kWorked = R"({"txid":"worked","design":"generic",
 "inputs":[{"id":"i0","value":8},{"id":"i1","value":6},{"id":"i2","value":3},{"id":"i3","value":3}],
 "outputs":[{"id":"o0","value":6},{"id":"o1","value":6},{"id":"o2","value":4},
            {"id":"o3","value":2},{"id":"o4","value":2}]})";

struct Ctx {
  cjmap_context* c = cjmap_context_new();
  ~Ctx() { cjmap_context_free(c); }
};

std::string take(char* s) {
  std::string out = s ? s : "";
  cjmap_string_free(s);
  return out;
}

TEST(CApi, EnumerateWorkedExample) {
  Ctx ctx;
  cjmap_context_set_threads(ctx.c, 2);
  cjmap_result* r = nullptr;
  ASSERT_EQ(cjmap_enumerate(ctx.c, kWorked, nullptr, &r), CJMAP_OK) << cjmap_last_error(ctx.c);
  EXPECT_EQ(cjmap_result_numeric_count(r), 10u);
  EXPECT_NEAR(cjmap_result_log2_total(r), std::log2(24.0), 1e-12);
  char* total = nullptr;
  ASSERT_EQ(cjmap_result_total(ctx.c, r, &total), CJMAP_OK);
  EXPECT_EQ(take(total), "24");

  char* dumped = nullptr;
  ASSERT_EQ(cjmap_result_dump(ctx.c, r, 0, &dumped), CJMAP_OK);
  const std::string text = take(dumped);
  cjmap_result* back = nullptr;
  ASSERT_EQ(cjmap_result_load(ctx.c, text.c_str(), &back), CJMAP_OK);
  char* again = nullptr;
  ASSERT_EQ(cjmap_result_dump(ctx.c, back, 0, &again), CJMAP_OK);
  EXPECT_EQ(take(again), text);

  double p = 0;
  ASSERT_EQ(cjmap_link_probability(ctx.c, back, nullptr, "i0", "o0", &p), CJMAP_OK);
  EXPECT_GT(p, 0);
  EXPECT_EQ(cjmap_link_probability(ctx.c, back, nullptr, "zz", "o0", &p), CJMAP_UNKNOWN_ID);
  EXPECT_STRNE(cjmap_last_error(ctx.c), "");

  char* report = nullptr;
  char* csv = nullptr;
  ASSERT_EQ(cjmap_metrics(ctx.c, r, nullptr, R"([["i2","i3"]])", &report, &csv), CJMAP_OK);
  EXPECT_NE(take(report).find("entropy_bits"), std::string::npos);
  EXPECT_EQ(take(csv).rfind("input,", 0), 0u);
  cjmap_result_free(back);
  cjmap_result_free(r);
}

TEST(CApi, ErrorsCarryNames) {
  Ctx ctx;
  cjmap_result* r = nullptr;
  EXPECT_EQ(cjmap_enumerate(ctx.c, "{", nullptr, &r), CJMAP_PARSE_ERROR);
  EXPECT_EQ(r, nullptr);
  EXPECT_STREQ(cjmap_status_name(CJMAP_PARSE_ERROR), "ParseError");
  EXPECT_EQ(cjmap_enumerate(ctx.c, R"({"txid":"x","inputs":[{"id":"a","value":1}],
      "outputs":[{"id":"b","value":2}]})", nullptr, &r), CJMAP_OUTPUTS_EXCEED_INPUTS);
  EXPECT_STREQ(cjmap_status_name(CJMAP_OUTPUTS_EXCEED_INPUTS), "OutputsExceedInputs");
  EXPECT_EQ(cjmap_enumerate(ctx.c, kWorked, R"({"design":"wasabi2"})", &r), CJMAP_MISSING_FEERATE);
  EXPECT_EQ(cjmap_enumerate(ctx.c, nullptr, nullptr, &r), CJMAP_INVALID_ARGUMENT);
  EXPECT_EQ(cjmap_enumerate(ctx.c, kWorked, R"({"mapping_cap":3})", &r), CJMAP_INSTANCE_TOO_LARGE);
  EXPECT_STREQ(cjmap_status_name(CJMAP_INTERNAL_ERROR), "InternalError");
  EXPECT_STREQ(cjmap_status_name(CJMAP_INVALID_ARGUMENT), "InvalidArgument");
  // A successful call clears the message.
  ASSERT_EQ(cjmap_enumerate(ctx.c, kWorked, nullptr, &r), CJMAP_OK);
  EXPECT_STREQ(cjmap_last_error(ctx.c), "");
  cjmap_result_free(r);
  // Null context is tolerated.
  EXPECT_EQ(cjmap_enumerate(nullptr, "{", nullptr, &r), CJMAP_PARSE_ERROR);
}

TEST(CApi, GenerateEnumerateTruth) {
  Ctx ctx;
  char* tx = nullptr;
  ASSERT_EQ(cjmap_generate(ctx.c, "wasabi2", 3, 42, nullptr, &tx), CJMAP_OK) << cjmap_last_error(ctx.c);
  const std::string text = take(tx);
  cjmap_result* r = nullptr;
  ASSERT_EQ(cjmap_enumerate(ctx.c, text.c_str(), nullptr, &r), CJMAP_OK) << cjmap_last_error(ctx.c);
  int has = 0;
  int64_t idx = -1;
  ASSERT_EQ(cjmap_result_truth_index(ctx.c, r, text.c_str(), &has, &idx), CJMAP_OK);
  EXPECT_EQ(has, 1);
  EXPECT_GE(idx, 0);
  cjmap_result_free(r);
  EXPECT_EQ(cjmap_generate(ctx.c, "nope", 3, 1, nullptr, &tx), CJMAP_UNKNOWN_DESIGN);
  EXPECT_EQ(cjmap_generate(ctx.c, "joinmarket", 1, 1, nullptr, &tx), CJMAP_INFEASIBLE_PARAMS);
}

TEST(CApi, TrendAndFit) {
  Ctx ctx;
  const uint64_t sizes[] = {6, 8, 10, 12};
  char* csv = nullptr;
  ASSERT_EQ(cjmap_trend(ctx.c, "generic", sizes, 4, 3, 7, nullptr, &csv), CJMAP_OK);
  const std::string text = take(csv);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 13);
  char* fit = nullptr;
  ASSERT_EQ(cjmap_fit(ctx.c, text.c_str(), 1, 400, 0.2, &fit), CJMAP_OK);
  EXPECT_NE(take(fit).find("\"effective_size\": 320"), std::string::npos);
  EXPECT_EQ(cjmap_fit(ctx.c, "size,count\n5,1\n5,2\n", 1, -1, 0, &fit), CJMAP_DEGENERATE_DATA);
}

TEST(CApi, AnonLoss) {
  Ctx ctx;
  const char* graph = R"({"coinjoins":["cj"],"transactions":[
    {"txid":"cj","timestamp":0,"inputs":[{"txid":"e","index":0,"value":500}],
     "outputs":[{"value":100},{"value":100},{"value":100},{"value":100}]},
    {"txid":"m","timestamp":60,"inputs":[{"txid":"cj","index":0},{"txid":"cj","index":1}],
     "outputs":[{"value":190}]}]})";
  char* report = nullptr;
  char* tx_csv = nullptr;
  ASSERT_EQ(cjmap_anonloss(ctx.c, graph, R"({"horizons":[0,1,"inf"]})", &report, &tx_csv, nullptr),
            CJMAP_OK)
      << cjmap_last_error(ctx.c);
  take(report);
  EXPECT_EQ(take(tx_csv), "txid,horizon,loss\ncj,0,0\ncj,1,0.5\ncj,inf,0.5\n*,0,0\n*,1,0.5\n*,inf,0.5\n");
  EXPECT_EQ(cjmap_anonloss(ctx.c, "{\"transactions\":[]}", nullptr, &report, nullptr, nullptr),
            CJMAP_INVALID_ARGUMENT);
}

TEST(CApi, Linked) {
  Ctx ctx;
  const char* set = R"({"members":[
    {"txid":"a","inputs":[{"id":"i0","value":2},{"id":"i1","value":3}],
     "outputs":[{"id":"o0","value":2},{"id":"o1","value":3}]},
    {"txid":"b","inputs":[{"id":"i0","value":2},{"id":"i1","value":3}],
     "outputs":[{"id":"o0","value":1},{"id":"o1","value":1},{"id":"o2","value":3}]}],
    "links":[{"from":"a","to":"b","capacity":5}],
    "internal_coins":[{"from":"a","output":"o0","to":"b","input":"i0"},
                      {"from":"a","output":"o1","to":"b","input":"i1"}]})";
  cjmap_result* r = nullptr;
  ASSERT_EQ(cjmap_enumerate_linked(ctx.c, set, ".", nullptr, &r), CJMAP_OK) << cjmap_last_error(ctx.c);
  EXPECT_GT(cjmap_result_numeric_count(r), 0u);
  cjmap_result_free(r);
  EXPECT_EQ(cjmap_enumerate_linked(ctx.c, R"({"members":[
    {"txid":"a","inputs":[{"id":"i0","value":2}],"outputs":[{"id":"o0","value":2}]}],
    "links":[{"from":"a","to":"b","capacity":1}]})",
                                   ".", nullptr, &r),
            CJMAP_DANGLING_LINK);
}

}  // namespace
