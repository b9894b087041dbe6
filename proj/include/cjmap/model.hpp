#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace cjmap {

// Satoshis. All coin arithmetic is exact.
using Amount = std::int64_t;

// Concrete mapping counts grow super-exponentially, so they are unbounded.
using BigCount = boost::multiprecision::cpp_int;

enum class Side { kInput, kOutput };
enum class Origin { kFresh, kRemix };
enum class Design { kWhirlpool, kWasabi1, kWasabi2, kJoinMarket, kGeneric };

std::string_view design_name(Design design);
// Throws Error(kUnknownDesign).
Design parse_design(std::string_view name);

struct Coin {
  std::string id;
  Amount value = 0;
  std::optional<std::string> address;
  std::optional<Origin> origin;
  // Originating transaction when the coin belongs to a composed (linked)
  // transaction. Coins with different tags never collapse numerically.
  std::string tag;

  bool is_remix() const { return origin == Origin::kRemix; }
};

struct Coinjoin {
  std::string txid;
  std::vector<Coin> inputs;
  std::vector<Coin> outputs;
  Design design = Design::kGeneric;
  std::optional<Amount> declared_mining_feerate;

  Amount input_sum() const;
  Amount output_sum() const;
};

// Throws Error naming the first violated invariant
// (NegativeValue, DuplicateCoinId, OutputsExceedInputs, EmptySide).
void validate_coinjoin(const Coinjoin& tx);

// Residual tolerance window [min, max] a sub-mapping must fall in.
struct ResidualWindow {
  Amount min = 0;
  Amount max = 0;

  bool contains(Amount residual) const {
    return residual >= min && residual <= max;
  }
  friend bool operator==(const ResidualWindow&, const ResidualWindow&) = default;
};

// Coins that are interchangeable at the numeric level: same side, same value,
// same tag, and not individually pinned by attacker knowledge.
struct CoinClass {
  Amount value = 0;
  std::string tag;
  // Non-empty when the class holds exactly one coin that must stay
  // distinguishable (it appears in a distinct-owner constraint).
  std::string pinned;
  std::vector<std::string> ids;

  std::size_t count() const { return ids.size(); }
  friend bool operator==(const CoinClass&, const CoinClass&) = default;
};

struct ClassLayout {
  std::vector<CoinClass> inputs;
  std::vector<CoinClass> outputs;

  friend bool operator==(const ClassLayout&, const ClassLayout&) = default;
};

// Groups coins into classes ordered by (value, tag, pinned). Pinned coins get
// singleton classes.
ClassLayout build_layout(const Coinjoin& tx,
                         const std::vector<std::string>& pinned_inputs = {},
                         const std::vector<std::string>& pinned_outputs = {});

// One user's slice of a coinjoin, up to permutation of same-class coins.
// Counts are indexed by class in the owning ClassLayout.
struct SubSignature {
  std::vector<std::uint16_t> in_counts;
  std::vector<std::uint16_t> out_counts;
  Amount residual = 0;

  friend bool operator==(const SubSignature&, const SubSignature&) = default;
};

// Canonical order: sorted input values, sorted output values, residual, then
// the raw class counts.
bool signature_less(const ClassLayout& layout, const SubSignature& a,
                    const SubSignature& b);

std::vector<Amount> input_values(const ClassLayout& layout,
                                 const SubSignature& sig);
std::vector<Amount> output_values(const ClassLayout& layout,
                                  const SubSignature& sig);

// Number of concrete (coin-id level) sub-mappings with this signature.
BigCount concrete_count(const ClassLayout& layout, const SubSignature& sig);

// A mapping up to permutation of interchangeable coins. `submappings` indexes
// a signature table and is kept sorted.
struct NumericMapping {
  std::vector<std::uint32_t> submappings;
  BigCount multiplicity = 1;

  friend bool operator==(const NumericMapping&, const NumericMapping&) = default;
};

// Exact number of concrete mappings collapsing to `parts`. Throws
// Error(kSignatureMismatch) if the class counts do not partition the layout.
BigCount multiplicity_of(const ClassLayout& layout,
                         const std::vector<const SubSignature*>& parts);
BigCount multiplicity_of(const ClassLayout& layout,
                         const std::vector<SubSignature>& table,
                         const NumericMapping& mapping);

// Concrete sub-mapping / mapping over coin ids.
struct SubMapping {
  std::vector<std::string> input_ids;
  std::vector<std::string> output_ids;
  Amount residual = 0;

  friend auto operator<=>(const SubMapping&, const SubMapping&) = default;
};

struct Mapping {
  std::vector<SubMapping> submappings;

  friend auto operator<=>(const Mapping&, const Mapping&) = default;
};

// Sorts ids inside each sub-mapping and sub-mappings by first input id.
Mapping canonical(Mapping mapping);

double log2_count(const BigCount& count);

}  // namespace cjmap
