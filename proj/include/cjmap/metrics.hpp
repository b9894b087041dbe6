#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cjmap/enumerate.hpp"

namespace cjmap {

// Value-level identity of a sub-mapping: sorted input and output values.
struct SignatureKey {
  std::vector<Amount> inputs;
  std::vector<Amount> outputs;

  friend auto operator<=>(const SignatureKey&, const SignatureKey&) = default;
};

SignatureKey signature_key(const ClassLayout& layout, const SubSignature& sig);

// Per-sub-mapping likelihoods; a mapping's weight is the product of its
// sub-mapping weights.
struct WeightTable {
  std::map<SignatureKey, double> entries;
  double default_weight = 1.0;

  double weight(const SignatureKey& key) const;
};

// Probability mass per numeric mapping. Mass is split evenly over the
// concrete mappings a numeric mapping stands for.
struct MappingDistribution {
  std::vector<double> mass;
  std::vector<double> log2_multiplicity;
};

// Throws ZeroMass when every mapping has zero weight, InvalidArgument on an
// empty result or negative weights.
MappingDistribution mapping_distribution(const EnumerationResult& result,
                                         const WeightTable* weights = nullptr);

// Shannon entropy (bits) over concrete mappings.
double entropy(const MappingDistribution& dist);

// Probability that an input and an output coin belong to the same user, per
// (input id, output id).
struct LinkMatrix {
  std::vector<std::string> input_ids;
  std::vector<std::string> output_ids;
  std::vector<double> p;  // row-major, inputs x outputs

  double at(std::size_t i, std::size_t o) const {
    return p[i * output_ids.size() + o];
  }
  // Throws UnknownId.
  double at(const std::string& input_id, const std::string& output_id) const;
};

LinkMatrix link_probability(const EnumerationResult& result,
                            const MappingDistribution& dist,
                            unsigned threads = 1);

// Exact uniform-case link tallies: number of concrete mappings linking each
// (input, output) pair. Row-major like LinkMatrix.
std::vector<BigCount> uniform_link_counts(const EnumerationResult& result);

// max over i in user_inputs of p(i, o). Throws UnknownId.
double max_link(const LinkMatrix& links,
                const std::vector<std::string>& user_inputs,
                const std::string& output_id);

// Total probability of mappings containing a sub-mapping with this value
// signature. Throws UnknownSignature.
double submapping_probability(const EnumerationResult& result,
                              const MappingDistribution& dist,
                              const SignatureKey& key);

struct MetricsReport {
  double entropy_bits = 0;
  BigCount mapping_count = 0;
  std::vector<std::pair<SignatureKey, double>> submapping_probability;
  LinkMatrix links;
  // (user input ids, output id) -> p(I, o)
  std::vector<std::tuple<std::vector<std::string>, std::string, double>>
      max_links;
};

MetricsReport compute_metrics(
    const EnumerationResult& result, const WeightTable* weights,
    const std::vector<std::vector<std::string>>& user_input_sets = {},
    unsigned threads = 1);

}  // namespace cjmap
