#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "cjmap/model.hpp"
#include "cjmap/preprocess.hpp"

namespace cjmap {

// Implementation restrictions on what one user can register.
struct Constraints {
  std::size_t max_inputs_per_user = 30;
  std::size_t max_outputs_per_user = 10;
  // JoinMarket: only the taker ends up with a positive residual.
  std::optional<std::size_t> max_positive_residual_submappings;
  // Outputs whose pre-fee value is not in `common_denominations` count as
  // change. Disabled unless set.
  std::optional<std::size_t> max_change_outputs_per_user;
  std::vector<Amount> common_denominations;
};

// Whirlpool users register exactly one input and one output; JoinMarket has a
// single fee-paying taker. Everything else uses the permissive defaults.
Constraints default_constraints(Design design);

void validate_constraints(const Constraints& c);

// Accepts or rejects a complete numeric mapping given as signature indices.
// Must be safe to call concurrently.
using MappingFilter =
    std::function<bool(const std::vector<std::uint32_t>& submappings)>;

struct EnumerateOptions {
  unsigned threads = 0;  // 0 = hardware concurrency
  std::uint64_t submapping_cap = 10'000'000;
  std::uint64_t mapping_cap = 50'000'000;
  MappingFilter filter;
};

struct SubmappingSet {
  ClassLayout layout;
  ResidualWindow window;
  // Canonically ordered (see signature_less).
  std::vector<SubSignature> signatures;
};

struct EnumerationStats {
  std::uint64_t nodes_visited = 0;
  double wall_seconds = 0;
  unsigned worker_count = 0;
};

struct EnumerationResult {
  std::string txid;
  Design design = Design::kGeneric;
  ResidualWindow window;
  ClassLayout layout;
  std::vector<SubSignature> submappings;
  // Sorted by their signature index vectors, i.e. canonically.
  std::vector<NumericMapping> mappings;
  BigCount total_concrete = 0;
  std::uint64_t submapping_count = 0;
  EnumerationStats stats;
};

// All signatures whose residual lies in the policy window and that satisfy
// the per-user limits. Throws SubmappingExplosion past options.submapping_cap.
SubmappingSet enumerate_submappings(const NormalizedCoinjoin& ntx,
                                    const Constraints& constraints,
                                    const EnumerateOptions& options = {});

// Every partition of the coinjoin into compatible sub-mappings, collapsed to
// numeric mappings with exact multiplicities.
EnumerationResult assemble_mappings(const SubmappingSet& subs,
                                    const Constraints& constraints,
                                    const EnumerateOptions& options = {});

EnumerationResult enumerate_mappings(const NormalizedCoinjoin& ntx,
                                     const Constraints& constraints,
                                     const EnumerateOptions& options = {});

// Expands numeric mappings to concrete ones over coin ids. Throws
// InstanceTooLarge when total_concrete exceeds `cap`.
std::vector<Mapping> expand_concrete(const EnumerationResult& result,
                                     std::uint64_t cap = 1'000'000);

// Concrete sub-mappings represented by one signature.
std::vector<SubMapping> expand_submapping(const ClassLayout& layout,
                                          const SubSignature& sig);

// Index into result.mappings of the numeric mapping a concrete mapping
// collapses to, or nullopt when the enumeration does not contain it.
std::optional<std::size_t> find_numeric(const EnumerationResult& result,
                                        const Mapping& mapping);

unsigned resolve_threads(unsigned requested);

}  // namespace cjmap
