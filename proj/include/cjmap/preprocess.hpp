#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cjmap/model.hpp"

namespace cjmap {

// Fee rules of one coinjoin design. Normalization subtracts every predictable
// fee component from coin values; what is left of a user's fee must fall in
// [residual_min, residual_max].
struct FeePolicy {
  Design design = Design::kGeneric;
  std::int64_t coordination_rate_ppm = 0;
  Amount coordination_floor = 0;
  bool remix_exempt = false;
  Amount mining_feerate = 0;  // sat/vbyte
  Amount input_vsize = 68;
  Amount output_vsize = 31;
  Amount residual_min = 0;
  Amount residual_max = 0;
  // Whirlpool pool value / Wasabi 1.x standard output. 0 = most common output
  // value of the transaction being normalized.
  Amount standard_denomination = 0;

  ResidualWindow window() const { return {residual_min, residual_max}; }
  Amount delta() const { return residual_max - residual_min; }
};

// Knobs accepted by build_policy. Unset fields take the design defaults.
struct PolicyParams {
  std::optional<Amount> feerate;
  std::optional<Amount> min_registrable_output;  // wasabi2, default 5000
  std::optional<Amount> feerate_error_margin;    // wasabi2, default 500
  std::optional<std::int64_t> coordination_rate_ppm;
  std::optional<Amount> coordination_floor;
  std::optional<Amount> max_maker_fee;           // joinmarket, default 1000
  std::optional<Amount> delta_max;               // overrides residual_max
  std::optional<Amount> input_vsize;
  std::optional<Amount> output_vsize;
  std::optional<Amount> standard_denomination;
};

inline constexpr Amount kDefaultMinRegistrableOutput = 5000;
inline constexpr Amount kDefaultFeerateErrorMargin = 500;
inline constexpr Amount kDefaultMaxMakerFee = 1000;
inline constexpr Amount kDefaultJoinMarketTakerFeeMax = 20000;

// Throws MissingFeerate for designs that split mining fees per coin
// (wasabi1, wasabi2) when no feerate is supplied, and InvalidPolicy when the
// resulting policy violates its invariants.
FeePolicy build_policy(Design design, const PolicyParams& params);

void validate_policy(const FeePolicy& policy);

// build_policy for the transaction's design, falling back to its declared
// mining feerate when params carry none.
FeePolicy policy_for(const Coinjoin& tx, PolicyParams params);

// Attacker side information about ownership. Ids in distinct_owner_pairs may
// name coins on either side; an id present on both sides is ambiguous and
// rejected.
struct Knowledge {
  std::vector<std::vector<std::string>> same_owner_input_groups;
  std::vector<std::vector<std::string>> same_owner_output_groups;
  std::vector<std::pair<std::string, std::string>> linked_pairs;
  std::vector<std::pair<std::string, std::string>> distinct_owner_pairs;

  bool empty() const {
    return same_owner_input_groups.empty() &&
           same_owner_output_groups.empty() && linked_pairs.empty() &&
           distinct_owner_pairs.empty();
  }
};

// A coin reference that is unambiguous even when an input and an output
// share an id.
struct CoinKey {
  Side side = Side::kInput;
  std::string id;

  friend auto operator<=>(const CoinKey&, const CoinKey&) = default;
};

struct NormalizedCoinjoin {
  Coinjoin base;
  FeePolicy policy;
  // Normalized coin -> original coin ids (same side) it absorbed.
  std::map<CoinKey, std::vector<std::string>> provenance;
  // Pairs of normalized coins known to belong to different users.
  std::vector<std::pair<CoinKey, CoinKey>> distinct_owner_pairs;
};

// Coordination fee charged on one input under `policy` (0 when exempt).
Amount coordination_fee(const FeePolicy& policy, const Coin& input);

// Requires validate_coinjoin(tx) to pass. Throws ValueUnderflow when an
// adjustment would leave a coin with value <= 0.
NormalizedCoinjoin normalize_fees(const Coinjoin& tx, const FeePolicy& policy);

// Throws OverlappingGroups and DanglingId.
NormalizedCoinjoin apply_knowledge(const NormalizedCoinjoin& ntx,
                                   const Knowledge& knowledge);

}  // namespace cjmap
