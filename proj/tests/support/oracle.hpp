#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "cjmap/enumerate.hpp"
#include "cjmap/multicj.hpp"

namespace cjmap::testing {

// Value-level coin identity: (value, tag, pinned id or "").
using CoinLabel = std::tuple<Amount, std::string, std::string>;

struct SubKey {
  std::vector<CoinLabel> inputs;  // sorted
  std::vector<CoinLabel> outputs;  // sorted
  Amount residual = 0;

  friend auto operator<=>(const SubKey&, const SubKey&) = default;
};

using NumericKey = std::vector<SubKey>;  // sorted
using NumericCounts = std::map<NumericKey, BigCount>;

struct OracleResult {
  std::vector<Mapping> concrete;  // canonical, sorted
  NumericCounts numeric;
};

// Exhaustive search over set partitions of the inputs and assignments of
// outputs. Limited to 14 coins; throws InstanceTooLarge beyond.
OracleResult brute_force_oracle(const NormalizedCoinjoin& ntx,
                                const Constraints& constraints);

// Numeric view of an enumeration result in the oracle's key space.
NumericCounts numeric_counts(const EnumerationResult& result);

// Composes per-member brute-force mappings through internal coins. Each
// joint user owns one sub-mapping per member it touches.
OracleResult joint_oracle(const LinkedSet& ls, const LinkedOptions& options = {});

}  // namespace cjmap::testing
