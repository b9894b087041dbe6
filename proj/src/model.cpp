#include "cjmap/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <tuple>
#include <unordered_set>

#include "cjmap/error.hpp"

namespace cjmap {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNegativeValue: return "NegativeValue";
    case ErrorCode::kDuplicateCoinId: return "DuplicateCoinId";
    case ErrorCode::kOutputsExceedInputs: return "OutputsExceedInputs";
    case ErrorCode::kEmptySide: return "EmptySide";
    case ErrorCode::kSignatureMismatch: return "SignatureMismatch";
    case ErrorCode::kUnknownDesign: return "UnknownDesign";
    case ErrorCode::kMissingFeerate: return "MissingFeerate";
    case ErrorCode::kInvalidPolicy: return "InvalidPolicy";
    case ErrorCode::kValueUnderflow: return "ValueUnderflow";
    case ErrorCode::kOverlappingGroups: return "OverlappingGroups";
    case ErrorCode::kDanglingId: return "DanglingId";
    case ErrorCode::kSubmappingExplosion: return "SubmappingExplosion";
    case ErrorCode::kInstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::kZeroMass: return "ZeroMass";
    case ErrorCode::kUnknownId: return "UnknownId";
    case ErrorCode::kUnknownSignature: return "UnknownSignature";
    case ErrorCode::kUnknownTx: return "UnknownTx";
    case ErrorCode::kUnknownOutput: return "UnknownOutput";
    case ErrorCode::kInvalidGraph: return "InvalidGraph";
    case ErrorCode::kDanglingLink: return "DanglingLink";
    case ErrorCode::kValueMismatch: return "ValueMismatch";
    case ErrorCode::kInfeasibleParams: return "InfeasibleParams";
    case ErrorCode::kDegenerateData: return "DegenerateData";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::string_view design_name(Design design) {
  switch (design) {
    case Design::kWhirlpool: return "whirlpool";
    case Design::kWasabi1: return "wasabi1";
    case Design::kWasabi2: return "wasabi2";
    case Design::kJoinMarket: return "joinmarket";
    case Design::kGeneric: return "generic";
  }
  return "generic";
}

Design parse_design(std::string_view name) {
  for (Design d : {Design::kWhirlpool, Design::kWasabi1, Design::kWasabi2,
                   Design::kJoinMarket, Design::kGeneric}) {
    if (design_name(d) == name) return d;
  }
  throw Error(ErrorCode::kUnknownDesign,
              "unknown coinjoin design '" + std::string(name) + "'");
}

Amount Coinjoin::input_sum() const {
  Amount sum = 0;
  for (const Coin& c : inputs) sum += c.value;
  return sum;
}

Amount Coinjoin::output_sum() const {
  Amount sum = 0;
  for (const Coin& c : outputs) sum += c.value;
  return sum;
}

void validate_coinjoin(const Coinjoin& tx) {
  if (tx.inputs.empty() || tx.outputs.empty()) {
    throw Error(ErrorCode::kEmptySide,
                "transaction " + tx.txid + " has no " +
                    (tx.inputs.empty() ? "inputs" : "outputs"));
  }
  for (const auto* side : {&tx.inputs, &tx.outputs}) {
    std::unordered_set<std::string> seen;
    for (const Coin& c : *side) {
      if (c.value <= 0) {
        throw Error(ErrorCode::kNegativeValue,
                    "coin " + c.id + " has non-positive value " +
                        std::to_string(c.value));
      }
      if (!seen.insert(c.id).second) {
        throw Error(ErrorCode::kDuplicateCoinId, "duplicate coin id " + c.id);
      }
    }
  }
  if (tx.output_sum() > tx.input_sum()) {
    throw Error(ErrorCode::kOutputsExceedInputs,
                "outputs sum " + std::to_string(tx.output_sum()) +
                    " exceeds inputs sum " + std::to_string(tx.input_sum()));
  }
}

namespace {

std::vector<CoinClass> group_side(const std::vector<Coin>& coins,
                                  const std::set<std::string>& pinned) {
  using Key = std::tuple<Amount, std::string, std::string>;
  std::map<Key, CoinClass> groups;
  for (const Coin& c : coins) {
    std::string pin = pinned.count(c.id) ? c.id : std::string();
    auto& cls = groups[Key{c.value, c.tag, pin}];
    cls.value = c.value;
    cls.tag = c.tag;
    cls.pinned = pin;
    cls.ids.push_back(c.id);
  }
  std::vector<CoinClass> out;
  out.reserve(groups.size());
  for (auto& [key, cls] : groups) out.push_back(std::move(cls));
  return out;
}

std::vector<Amount> expand_values(const std::vector<CoinClass>& classes,
                                  const std::vector<std::uint16_t>& counts) {
  std::vector<Amount> values;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    values.insert(values.end(), counts[c], classes[c].value);
  }
  // Classes are value-ordered, so the expansion is already sorted.
  return values;
}

BigCount binomial(std::size_t n, std::size_t k) {
  BigCount r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    r *= n - k + i;
    r /= i;
  }
  return r;
}

BigCount factorial(std::size_t n) {
  BigCount r = 1;
  for (std::size_t i = 2; i <= n; ++i) r *= i;
  return r;
}

}  // namespace

ClassLayout build_layout(const Coinjoin& tx,
                         const std::vector<std::string>& pinned_inputs,
                         const std::vector<std::string>& pinned_outputs) {
  return ClassLayout{
      group_side(tx.inputs, {pinned_inputs.begin(), pinned_inputs.end()}),
      group_side(tx.outputs, {pinned_outputs.begin(), pinned_outputs.end()})};
}

std::vector<Amount> input_values(const ClassLayout& layout,
                                 const SubSignature& sig) {
  return expand_values(layout.inputs, sig.in_counts);
}

std::vector<Amount> output_values(const ClassLayout& layout,
                                  const SubSignature& sig) {
  return expand_values(layout.outputs, sig.out_counts);
}

bool signature_less(const ClassLayout& layout, const SubSignature& a,
                    const SubSignature& b) {
  auto ai = input_values(layout, a);
  auto bi = input_values(layout, b);
  if (ai != bi) return ai < bi;
  auto ao = output_values(layout, a);
  auto bo = output_values(layout, b);
  if (ao != bo) return ao < bo;
  if (a.residual != b.residual) return a.residual < b.residual;
  if (a.in_counts != b.in_counts) return a.in_counts < b.in_counts;
  return a.out_counts < b.out_counts;
}

BigCount concrete_count(const ClassLayout& layout, const SubSignature& sig) {
  BigCount r = 1;
  for (std::size_t c = 0; c < sig.in_counts.size(); ++c) {
    r *= binomial(layout.inputs[c].count(), sig.in_counts[c]);
  }
  for (std::size_t c = 0; c < sig.out_counts.size(); ++c) {
    r *= binomial(layout.outputs[c].count(), sig.out_counts[c]);
  }
  return r;
}

BigCount multiplicity_of(const ClassLayout& layout,
                         const std::vector<const SubSignature*>& parts) {
  const std::size_t ni = layout.inputs.size();
  const std::size_t no = layout.outputs.size();
  std::vector<std::size_t> in_used(ni, 0), out_used(no, 0);
  for (const SubSignature* s : parts) {
    if (s->in_counts.size() != ni || s->out_counts.size() != no) {
      throw Error(ErrorCode::kSignatureMismatch,
                  "sub-mapping signature has wrong class arity");
    }
    for (std::size_t c = 0; c < ni; ++c) in_used[c] += s->in_counts[c];
    for (std::size_t c = 0; c < no; ++c) out_used[c] += s->out_counts[c];
  }
  for (std::size_t c = 0; c < ni; ++c) {
    if (in_used[c] != layout.inputs[c].count()) {
      throw Error(ErrorCode::kSignatureMismatch,
                  "numeric mapping does not cover input class of value " +
                      std::to_string(layout.inputs[c].value) + " exactly");
    }
  }
  for (std::size_t c = 0; c < no; ++c) {
    if (out_used[c] != layout.outputs[c].count()) {
      throw Error(ErrorCode::kSignatureMismatch,
                  "numeric mapping does not cover output class of value " +
                      std::to_string(layout.outputs[c].value) + " exactly");
    }
  }

  // Multinomial per class: coins of a class distributed over the labelled
  // slots, then divide out relabelling of identical slots.
  BigCount result = 1;
  auto distribute = [&](std::size_t total, auto counts_of) {
    std::size_t left = total;
    for (const SubSignature* s : parts) {
      std::size_t k = counts_of(*s);
      result *= binomial(left, k);
      left -= k;
    }
  };
  for (std::size_t c = 0; c < ni; ++c) {
    distribute(layout.inputs[c].count(),
               [c](const SubSignature& s) { return s.in_counts[c]; });
  }
  for (std::size_t c = 0; c < no; ++c) {
    distribute(layout.outputs[c].count(),
               [c](const SubSignature& s) { return s.out_counts[c]; });
  }

  std::vector<const SubSignature*> sorted(parts);
  auto key_less = [](const SubSignature* a, const SubSignature* b) {
    return std::tie(a->in_counts, a->out_counts) <
           std::tie(b->in_counts, b->out_counts);
  };
  std::sort(sorted.begin(), sorted.end(), key_less);
  std::size_t run = 1;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && *sorted[i] == *sorted[i - 1]) {
      ++run;
    } else {
      if (run > 1) result /= factorial(run);
      run = 1;
    }
  }
  return result;
}

BigCount multiplicity_of(const ClassLayout& layout,
                         const std::vector<SubSignature>& table,
                         const NumericMapping& mapping) {
  std::vector<const SubSignature*> parts;
  parts.reserve(mapping.submappings.size());
  for (auto idx : mapping.submappings) {
    if (idx >= table.size()) {
      throw Error(ErrorCode::kSignatureMismatch,
                  "numeric mapping references unknown sub-mapping");
    }
    parts.push_back(&table[idx]);
  }
  return multiplicity_of(layout, parts);
}

Mapping canonical(Mapping mapping) {
  for (auto& s : mapping.submappings) {
    std::sort(s.input_ids.begin(), s.input_ids.end());
    std::sort(s.output_ids.begin(), s.output_ids.end());
  }
  std::sort(mapping.submappings.begin(), mapping.submappings.end());
  return mapping;
}

double log2_count(const BigCount& count) {
  if (count <= 0) return -INFINITY;
  std::size_t bits = boost::multiprecision::msb(count);
  if (bits < 60) return std::log2(count.convert_to<double>());
  // Keep the top 60 bits as mantissa.
  BigCount top = count >> (bits - 59);
  return std::log2(top.convert_to<double>()) + static_cast<double>(bits - 59);
}

}  // namespace cjmap
