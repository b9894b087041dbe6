#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "cjmap/error.hpp"
#include "cjmap/metrics.hpp"
#include "instances.hpp"
#include "oracle.hpp"

namespace cjmap {
namespace {

EnumerationResult worked_result() {
  PolicyParams p;
  auto ntx = normalize_fees(testing::worked_example_tx(), build_policy(Design::kGeneric, p));
  return enumerate_mappings(ntx, default_constraints(Design::kGeneric));
}

// Brute-force link probabilities over concrete mappings, each weighted by
// the product of its sub-mapping weights.
std::map<std::pair<std::string, std::string>, double> concrete_links(
    const NormalizedCoinjoin& ntx, const std::vector<Mapping>& concrete,
    const WeightTable* weights) {
  std::map<std::string, Amount> in_value, out_value;
  for (const auto& c : ntx.base.inputs) in_value[c.id] = c.value;
  for (const auto& c : ntx.base.outputs) out_value[c.id] = c.value;
  std::map<std::pair<std::string, std::string>, double> acc;
  double total = 0;
  for (const auto& m : concrete) {
    double w = 1;
    for (const auto& s : m.submappings) {
      SignatureKey key;
      for (const auto& id : s.input_ids) key.inputs.push_back(in_value[id]);
      for (const auto& id : s.output_ids) key.outputs.push_back(out_value[id]);
      std::sort(key.inputs.begin(), key.inputs.end());
      std::sort(key.outputs.begin(), key.outputs.end());
      if (weights) w *= weights->weight(key);
    }
    total += w;
    for (const auto& s : m.submappings) {
      for (const auto& i : s.input_ids) {
        for (const auto& o : s.output_ids) acc[{i, o}] += w;
      }
    }
  }
  for (auto& [k, v] : acc) v /= total;
  return acc;
}

TEST(Metrics, WorkedExampleUniformEntropy) {
  auto res = worked_result();
  auto dist = mapping_distribution(res);
  EXPECT_NEAR(entropy(dist), std::log2(24.0), 1e-9);
  double sum = 0;
  for (double m : dist.mass) sum += m;
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Metrics, CountingIdentityOnOracleInstances) {
  const Design designs[] = {Design::kGeneric, Design::kWhirlpool, Design::kWasabi1,
                            Design::kWasabi2, Design::kJoinMarket};
  std::mt19937_64 rng(31337);
  for (Design d : designs) {
    for (int i = 0; i < 20; ++i) {
      auto inst = testing::random_instance(rng, d);
      auto res = enumerate_mappings(inst.ntx, inst.constraints);
      auto oracle = testing::brute_force_oracle(inst.ntx, inst.constraints);
      BigCount sum = 0;
      for (const auto& m : res.mappings) sum += m.multiplicity;
      ASSERT_EQ(sum, BigCount(oracle.concrete.size()));
      if (res.mappings.empty()) continue;
      EXPECT_NEAR(entropy(mapping_distribution(res)), log2_count(sum), 1e-9);
    }
  }
}

TEST(Metrics, UniformLinksMatchConcreteTally) {
  std::mt19937_64 rng(555);
  for (int i = 0; i < 60; ++i) {
    auto inst = testing::random_instance(rng, i % 2 ? Design::kGeneric : Design::kWasabi2);
    auto res = enumerate_mappings(inst.ntx, inst.constraints);
    if (res.mappings.empty()) continue;
    auto oracle = testing::brute_force_oracle(inst.ntx, inst.constraints);
    std::map<std::pair<std::string, std::string>, BigCount> tally;
    for (const auto& m : oracle.concrete) {
      for (const auto& s : m.submappings) {
        for (const auto& a : s.input_ids) {
          for (const auto& b : s.output_ids) tally[{a, b}] += 1;
        }
      }
    }
    auto counts = uniform_link_counts(res);
    auto dist = mapping_distribution(res);
    auto links = link_probability(res, dist, 1 + i % 3);
    const double total = static_cast<double>(oracle.concrete.size());
    for (std::size_t a = 0; a < links.input_ids.size(); ++a) {
      for (std::size_t b = 0; b < links.output_ids.size(); ++b) {
        const auto key = std::make_pair(links.input_ids[a], links.output_ids[b]);
        const BigCount expect = tally.count(key) ? tally[key] : BigCount(0);
        ASSERT_EQ(counts[a * links.output_ids.size() + b], expect) << "instance " << i;
        EXPECT_NEAR(links.at(a, b), static_cast<double>(expect) / total, 1e-12);
      }
    }
  }
}

TEST(Metrics, WeightedLinksMatchConcrete) {
  std::mt19937_64 rng(808);
  for (int i = 0; i < 30; ++i) {
    auto inst = testing::random_instance(rng, Design::kGeneric);
    auto res = enumerate_mappings(inst.ntx, inst.constraints);
    if (res.mappings.empty()) continue;
    WeightTable w;
    for (const auto& sig : res.submappings) {
      w.entries[signature_key(res.layout, sig)] =
          0.5 + static_cast<double>(rng() % 1000) / 100.0;
    }
    auto oracle = testing::brute_force_oracle(inst.ntx, inst.constraints);
    auto expect = concrete_links(inst.ntx, oracle.concrete, &w);
    auto links = link_probability(res, mapping_distribution(res, &w));
    for (std::size_t a = 0; a < links.input_ids.size(); ++a) {
      for (std::size_t b = 0; b < links.output_ids.size(); ++b) {
        const auto key = std::make_pair(links.input_ids[a], links.output_ids[b]);
        EXPECT_NEAR(links.at(a, b), expect.count(key) ? expect[key] : 0.0, 1e-12);
      }
    }
  }
}

// With p(M) proportional to the product of its sub-mapping weights, a
// common factor c scales a k-user mapping by c^k, so normalization absorbs
// it exactly when all mappings have the same number of users.
TEST(Metrics, WeightScalingInvarianceAtFixedUserCount) {
  std::mt19937_64 rng(99);
  int checked = 0;
  for (int i = 0; i < 40; ++i) {
    auto inst = testing::random_instance(rng, Design::kGeneric);
    EnumerateOptions opt;
    opt.filter = [](const std::vector<std::uint32_t>& s) { return s.size() == 2; };
    auto res = enumerate_mappings(inst.ntx, inst.constraints, opt);
    if (res.mappings.empty()) continue;
    WeightTable w, scaled;
    for (const auto& sig : res.submappings) {
      w.entries[signature_key(res.layout, sig)] = 0.1 + static_cast<double>(rng() % 100);
    }
    for (const auto& [k, v] : w.entries) scaled.entries[k] = v * 7.25;
    auto a = compute_metrics(res, &w);
    auto b = compute_metrics(res, &scaled);
    EXPECT_NEAR(a.entropy_bits, b.entropy_bits, 1e-12);
    for (std::size_t k = 0; k < a.links.p.size(); ++k) {
      EXPECT_NEAR(a.links.p[k], b.links.p[k], 1e-12);
    }
    auto da = mapping_distribution(res, &w);
    auto db = mapping_distribution(res, &scaled);
    for (std::size_t k = 0; k < da.mass.size(); ++k) EXPECT_NEAR(da.mass[k], db.mass[k], 1e-12);
    ++checked;
  }
  EXPECT_GT(checked, 10);
}

TEST(Metrics, WeightScalingTiltsByUserCount) {
  auto res = worked_result();
  WeightTable scaled;
  scaled.default_weight = 2.0;
  auto uniform = mapping_distribution(res);
  auto tilted = mapping_distribution(res, &scaled);
  for (std::size_t a = 0; a < res.mappings.size(); ++a) {
    for (std::size_t b = 0; b < res.mappings.size(); ++b) {
      const double k = static_cast<double>(res.mappings[a].submappings.size()) -
                       static_cast<double>(res.mappings[b].submappings.size());
      EXPECT_NEAR(tilted.mass[a] / tilted.mass[b],
                  std::pow(2.0, k) * uniform.mass[a] / uniform.mass[b], 1e-9);
    }
  }
}

TEST(Metrics, ZeroWeightSignatureDropsMapping) {
  Coinjoin tx;
  tx.txid = "threes";
  tx.inputs = {{"a", 3}, {"b", 3}};
  tx.outputs = {{"x", 3}, {"y", 3}};
  PolicyParams p;
  auto res = enumerate_mappings(normalize_fees(tx, build_policy(Design::kGeneric, p)),
                                default_constraints(Design::kGeneric));
  WeightTable w;
  w.entries[SignatureKey{{3, 3}, {3, 3}}] = 0;
  auto dist = mapping_distribution(res, &w);
  for (std::size_t m = 0; m < res.mappings.size(); ++m) {
    const bool split = res.mappings[m].submappings.size() == 2;
    EXPECT_NEAR(dist.mass[m], split ? 1.0 : 0.0, 1e-12);
    if (split) EXPECT_EQ(res.mappings[m].multiplicity, 2);
  }
}

TEST(Metrics, MaxLinkAndSubmappingProbability) {
  auto res = worked_result();
  auto dist = mapping_distribution(res);
  auto links = link_probability(res, dist);
  const auto& in_id = links.input_ids[0];
  const auto& out_id = links.output_ids[0];
  EXPECT_EQ(max_link(links, {in_id}, out_id), links.at(in_id, out_id));
  double best = 0;
  for (const auto& i : links.input_ids) best = std::max(best, links.at(i, out_id));
  EXPECT_EQ(max_link(links, links.input_ids, out_id), best);
  EXPECT_THROW(max_link(links, {"nope"}, out_id), Error);
  EXPECT_THROW(max_link(links, {}, out_id), Error);
  EXPECT_THROW(links.at("nope", out_id), Error);

  // The whole-transaction sub-mapping occurs in exactly one concrete mapping.
  SignatureKey whole{{3, 3, 6, 8}, {2, 2, 4, 6, 6}};
  EXPECT_NEAR(submapping_probability(res, dist, whole), 1.0 / 24.0, 1e-12);
  SignatureKey absent{{1}, {1}};
  try {
    submapping_probability(res, dist, absent);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownSignature);
  }
}

TEST(Metrics, ZeroMassAndNegativeWeights) {
  auto res = worked_result();
  WeightTable zero;
  zero.default_weight = 0;
  try {
    mapping_distribution(res, &zero);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroMass);
  }
  WeightTable neg;
  neg.default_weight = -1;
  EXPECT_THROW(mapping_distribution(res, &neg), Error);
}

TEST(Metrics, ReportDeterministicAcrossThreads) {
  auto res = worked_result();
  auto a = compute_metrics(res, nullptr, {{"i0", "i1"}}, 1);
  auto b = compute_metrics(res, nullptr, {{"i0", "i1"}}, 4);
  EXPECT_EQ(a.links.p, b.links.p);
  EXPECT_EQ(a.entropy_bits, b.entropy_bits);
  EXPECT_EQ(a.submapping_probability, b.submapping_probability);
  EXPECT_EQ(a.max_links.size(), 5u);
}

}  // namespace
}  // namespace cjmap
