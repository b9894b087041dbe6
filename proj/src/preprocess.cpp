#include "cjmap/preprocess.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>

#include "cjmap/error.hpp"

namespace cjmap {

namespace {

constexpr std::int64_t kPpm = 1'000'000;

Amount most_common_value(const std::vector<Coin>& coins) {
  std::map<Amount, std::size_t> freq;
  for (const Coin& c : coins) ++freq[c.value];
  Amount best = 0;
  std::size_t best_n = 0;
  // Ties go to the larger value: the pool/standard denomination dominates
  // change outputs in size.
  for (const auto& [value, n] : freq) {
    if (n >= best_n) {
      best = value;
      best_n = n;
    }
  }
  return best;
}

void require_positive(const Coin& c, Amount value) {
  if (value <= 0) {
    throw Error(ErrorCode::kValueUnderflow,
                "fee normalization drives coin " + c.id + " (value " +
                    std::to_string(c.value) + ") to " + std::to_string(value));
  }
}

}  // namespace

void validate_policy(const FeePolicy& p) {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidPolicy, what);
  };
  if (p.residual_min > p.residual_max) fail("residual_min > residual_max");
  if (p.coordination_rate_ppm < 0 || p.coordination_floor < 0 ||
      p.mining_feerate < 0 || p.input_vsize < 0 || p.output_vsize < 0 ||
      p.standard_denomination < 0) {
    fail("fee rates and sizes must be non-negative");
  }
  if (p.residual_min < 0 && p.design != Design::kJoinMarket) {
    fail("negative residual_min is only allowed for joinmarket");
  }
}

FeePolicy policy_for(const Coinjoin& tx, PolicyParams params) {
  if (!params.feerate) params.feerate = tx.declared_mining_feerate;
  return build_policy(tx.design, params);
}

FeePolicy build_policy(Design design, const PolicyParams& params) {
  FeePolicy p;
  p.design = design;
  p.input_vsize = params.input_vsize.value_or(68);
  p.output_vsize = params.output_vsize.value_or(31);
  p.standard_denomination = params.standard_denomination.value_or(0);

  auto feerate_required = [&] {
    if (!params.feerate) {
      throw Error(ErrorCode::kMissingFeerate,
                  std::string(design_name(design)) +
                      " splits mining fees per coin and needs a feerate");
    }
    return *params.feerate;
  };

  switch (design) {
    case Design::kWhirlpool:
      // Coordination is paid in TX0; mining fees come out of the fresh
      // inputs' premium over the pool value.
      p.residual_max = params.delta_max.value_or(0);
      break;
    case Design::kWasabi1:
      p.mining_feerate = feerate_required();
      p.coordination_rate_ppm = params.coordination_rate_ppm.value_or(1500);
      p.residual_max = params.delta_max.value_or(0);
      break;
    case Design::kWasabi2: {
      p.mining_feerate = feerate_required();
      p.coordination_rate_ppm = params.coordination_rate_ppm.value_or(3000);
      p.coordination_floor = params.coordination_floor.value_or(1'000'000);
      p.remix_exempt = true;
      Amount min_out =
          params.min_registrable_output.value_or(kDefaultMinRegistrableOutput);
      Amount margin =
          params.feerate_error_margin.value_or(kDefaultFeerateErrorMargin);
      p.residual_max = params.delta_max.value_or(min_out + margin);
      break;
    }
    case Design::kJoinMarket:
      // The taker pays all mining and maker fees; makers earn at most
      // max_maker_fee each.
      p.residual_min = -params.max_maker_fee.value_or(kDefaultMaxMakerFee);
      p.residual_max = params.delta_max.value_or(kDefaultJoinMarketTakerFeeMax);
      break;
    case Design::kGeneric:
      p.mining_feerate = params.feerate.value_or(0);
      p.coordination_rate_ppm = params.coordination_rate_ppm.value_or(0);
      p.coordination_floor = params.coordination_floor.value_or(0);
      p.residual_max = params.delta_max.value_or(0);
      break;
  }
  if (params.coordination_rate_ppm) {
    p.coordination_rate_ppm = *params.coordination_rate_ppm;
  }
  validate_policy(p);
  return p;
}

Amount coordination_fee(const FeePolicy& policy, const Coin& input) {
  if (policy.coordination_rate_ppm == 0) return 0;
  if (policy.design == Design::kWasabi1 || policy.design == Design::kWhirlpool ||
      policy.design == Design::kJoinMarket) {
    return 0;
  }
  if (input.value < policy.coordination_floor) return 0;
  if (policy.remix_exempt && input.is_remix()) return 0;
  return input.value * policy.coordination_rate_ppm / kPpm;
}

NormalizedCoinjoin normalize_fees(const Coinjoin& tx, const FeePolicy& policy) {
  validate_policy(policy);
  NormalizedCoinjoin out;
  out.base = tx;
  out.policy = policy;
  for (const Coin& c : tx.inputs) {
    out.provenance[CoinKey{Side::kInput, c.id}] = {c.id};
  }
  for (const Coin& c : tx.outputs) {
    out.provenance[CoinKey{Side::kOutput, c.id}] = {c.id};
  }

  switch (policy.design) {
    case Design::kWhirlpool: {
      Amount pool = policy.standard_denomination > 0
                        ? policy.standard_denomination
                        : most_common_value(tx.outputs);
      for (Coin& c : out.base.inputs) {
        if (!c.is_remix() && c.value > pool) c.value = pool;
      }
      break;
    }
    case Design::kJoinMarket:
      break;
    case Design::kWasabi1: {
      Amount standard = policy.standard_denomination > 0
                            ? policy.standard_denomination
                            : most_common_value(tx.outputs);
      Amount coord = standard * policy.coordination_rate_ppm / kPpm;
      for (Coin& c : out.base.inputs) {
        Amount v = c.value - policy.mining_feerate * policy.input_vsize;
        require_positive(c, v);
        c.value = v;
      }
      for (Coin& c : out.base.outputs) {
        bool is_standard = c.value == standard;
        c.value += policy.mining_feerate * policy.output_vsize;
        if (is_standard) c.value += coord;
      }
      break;
    }
    case Design::kWasabi2:
    case Design::kGeneric: {
      for (Coin& c : out.base.inputs) {
        Amount v = c.value - coordination_fee(policy, c) -
                   policy.mining_feerate * policy.input_vsize;
        require_positive(c, v);
        c.value = v;
      }
      for (Coin& c : out.base.outputs) {
        c.value += policy.mining_feerate * policy.output_vsize;
      }
      break;
    }
  }
  return out;
}

namespace {

class KnowledgeApplier {
 public:
  explicit KnowledgeApplier(NormalizedCoinjoin& ntx) : ntx_(ntx) {
    for (const auto& [key, originals] : ntx_.provenance) {
      for (const auto& o : originals) owner_[CoinKey{key.side, o}] = key.id;
      ever_.insert(CoinKey{key.side, key.id});
      for (const auto& o : originals) ever_.insert(CoinKey{key.side, o});
    }
  }

  // Current normalized id of an original (or already-normalized) coin, or
  // nullopt when it was cancelled by a linked pair.
  std::optional<std::string> resolve(Side side, const std::string& id) const {
    CoinKey key{side, id};
    if (auto it = owner_.find(key); it != owner_.end()) return it->second;
    if (ntx_.provenance.count(key)) return id;
    if (ever_.count(key)) return std::nullopt;
    throw Error(ErrorCode::kDanglingId,
                std::string("unknown ") +
                    (side == Side::kInput ? "input " : "output ") + id);
  }

  std::string resolve_live(Side side, const std::string& id) const {
    auto r = resolve(side, id);
    if (!r) {
      throw Error(ErrorCode::kDanglingId,
                  "coin " + id + " was already removed by a linked pair");
    }
    return *r;
  }

  void merge(Side side, const std::vector<std::vector<std::string>>& groups) {
    auto& coins = side == Side::kInput ? ntx_.base.inputs : ntx_.base.outputs;
    std::set<std::string> used;
    for (const auto& group : groups) {
      std::vector<std::string> members;
      for (const auto& id : group) {
        std::string nid = resolve_live(side, id);
        if (!used.insert(nid).second) {
          throw Error(ErrorCode::kOverlappingGroups,
                      "coin " + id + " appears in more than one same-owner group");
        }
        members.push_back(nid);
      }
      if (members.size() < 2) continue;

      std::string merged_id;
      Amount total = 0;
      std::vector<std::string> absorbed;
      std::size_t first = coins.size();
      for (const auto& m : members) {
        merged_id += (merged_id.empty() ? "" : "+") + m;
        auto pos = find(coins, m);
        first = std::min<std::size_t>(first, pos - coins.begin());
        total += pos->value;
        auto node = ntx_.provenance.extract(CoinKey{side, m});
        absorbed.insert(absorbed.end(), node.mapped().begin(),
                        node.mapped().end());
      }
      Coin merged = coins[first];
      merged.id = merged_id;
      merged.value = total;
      merged.address.reset();
      std::erase_if(coins, [&](const Coin& c) {
        return std::find(members.begin(), members.end(), c.id) != members.end();
      });
      coins.insert(coins.begin() + std::min(first, coins.size()), merged);
      for (const auto& a : absorbed) owner_[CoinKey{side, a}] = merged_id;
      ntx_.provenance[CoinKey{side, merged_id}] = std::move(absorbed);
    }
  }

  void link(const std::string& in_id, const std::string& out_id) {
    std::string ni = resolve_live(Side::kInput, in_id);
    std::string no = resolve_live(Side::kOutput, out_id);
    auto ic = find(ntx_.base.inputs, ni);
    auto oc = find(ntx_.base.outputs, no);
    if (ic->value > oc->value) {
      ic->value -= oc->value;
      ntx_.base.outputs.erase(oc);
      drop(Side::kOutput, no);
    } else if (ic->value < oc->value) {
      oc->value -= ic->value;
      ntx_.base.inputs.erase(ic);
      drop(Side::kInput, ni);
    } else {
      ntx_.base.inputs.erase(ic);
      ntx_.base.outputs.erase(oc);
      drop(Side::kInput, ni);
      drop(Side::kOutput, no);
    }
  }

  // Side of an id named without one. Ambiguous ids are rejected.
  Side side_of(const std::string& id) const {
    bool in = ever_.count(CoinKey{Side::kInput, id}) > 0;
    bool out = ever_.count(CoinKey{Side::kOutput, id}) > 0;
    if (in && out) {
      throw Error(ErrorCode::kDanglingId,
                  "coin id " + id + " names both an input and an output");
    }
    if (!in && !out) throw Error(ErrorCode::kDanglingId, "unknown coin " + id);
    return in ? Side::kInput : Side::kOutput;
  }

 private:
  static std::vector<Coin>::iterator find(std::vector<Coin>& coins,
                                          const std::string& id) {
    return std::find_if(coins.begin(), coins.end(),
                        [&](const Coin& c) { return c.id == id; });
  }

  void drop(Side side, const std::string& nid) {
    CoinKey key{side, nid};
    for (const auto& o : ntx_.provenance[key]) owner_.erase(CoinKey{side, o});
    ntx_.provenance.erase(key);
  }

  NormalizedCoinjoin& ntx_;
  std::map<CoinKey, std::string> owner_;
  std::set<CoinKey> ever_;
};

}  // namespace

NormalizedCoinjoin apply_knowledge(const NormalizedCoinjoin& ntx,
                                   const Knowledge& k) {
  NormalizedCoinjoin out = ntx;
  if (k.empty()) return out;

  KnowledgeApplier applier(out);
  applier.merge(Side::kInput, k.same_owner_input_groups);
  applier.merge(Side::kOutput, k.same_owner_output_groups);
  for (const auto& [in_id, out_id] : k.linked_pairs) applier.link(in_id, out_id);

  for (const auto& [a, b] : k.distinct_owner_pairs) {
    Side sa = applier.side_of(a);
    Side sb = applier.side_of(b);
    auto na = applier.resolve(sa, a);
    auto nb = applier.resolve(sb, b);
    // Cancelled coins no longer constrain anything.
    if (!na || !nb) continue;
    CoinKey ka{sa, *na};
    CoinKey kb{sb, *nb};
    if (ka == kb) {
      throw Error(ErrorCode::kOverlappingGroups,
                  "coins " + a + " and " + b +
                      " are declared both same-owner and distinct-owner");
    }
    out.distinct_owner_pairs.emplace_back(std::min(ka, kb), std::max(ka, kb));
  }
  return out;
}

}  // namespace cjmap
