#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "cjmap/enumerate.hpp"
#include "cjmap/preprocess.hpp"

namespace cjmap {

struct GeneratorParams {
  std::size_t min_inputs_per_user = 1;
  std::size_t max_inputs_per_user = 3;
  std::size_t max_outputs_per_user = 4;
  // Smallest ladder denomination; outputs are base * 2^k plus change.
  Amount ladder_base = 5'000;
  std::size_t ladder_steps = 8;
  Amount mining_feerate = 2;              // wasabi1, wasabi2
  Amount pool_value = 1'000'000;          // whirlpool
  Amount standard_denomination = 10'000'000;  // wasabi1
  double remix_probability = 0.3;
  Amount max_maker_fee = kDefaultMaxMakerFee;  // joinmarket
  std::size_t max_attempts = 10'000;
};

// Throws InfeasibleParams when the parameters cannot produce a coinjoin that
// stays inside the design's fee window.
void validate_generator_params(Design design, const GeneratorParams& params);

struct GroundTruth {
  Coinjoin tx;
  Mapping true_mapping;  // over tx coin ids, residuals after normalization
  std::uint64_t seed = 0;
  Design design = Design::kGeneric;
  // Policy knobs that reproduce the window the coinjoin was built for.
  PolicyParams policy;
};

// Per-instance stream derived from (seed, index).
std::mt19937_64 instance_rng(std::uint64_t seed, std::uint64_t index);

GroundTruth generate(Design design, std::size_t users, std::uint64_t seed,
                     const GeneratorParams& params = {});

// Rejection-samples user counts and coins until |I| + |O| == size.
GroundTruth generate_sized(Design design, std::size_t size, std::uint64_t seed,
                           std::uint64_t index, const GeneratorParams& params = {});

struct TrendRow {
  std::size_t size = 0;
  std::uint64_t numeric_mappings = 0;
  BigCount concrete_mappings = 0;
  double seconds = 0;
};

// per_size instances for every size, enumerated with default constraints.
// Rows are ordered by size, then instance index.
std::vector<TrendRow> trend_dataset(Design design, const std::vector<std::size_t>& sizes,
                                    std::size_t per_size, std::uint64_t seed,
                                    const GeneratorParams& params = {},
                                    unsigned threads = 0);

}  // namespace cjmap
