#include "cjmap/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "cjmap/error.hpp"

namespace cjmap {

SignatureKey signature_key(const ClassLayout& layout, const SubSignature& sig) {
  return SignatureKey{input_values(layout, sig), output_values(layout, sig)};
}

double WeightTable::weight(const SignatureKey& key) const {
  auto it = entries.find(key);
  return it == entries.end() ? default_weight : it->second;
}

MappingDistribution mapping_distribution(const EnumerationResult& result,
                                         const WeightTable* weights) {
  const std::size_t n = result.mappings.size();
  if (n == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "no admissible mappings to build a distribution over");
  }
  MappingDistribution dist;
  dist.mass.resize(n);
  dist.log2_multiplicity.resize(n);

  std::vector<double> log_weight;  // natural log per table signature
  if (weights) {
    if (weights->default_weight < 0) {
      throw Error(ErrorCode::kInvalidArgument, "negative default weight");
    }
    log_weight.resize(result.submappings.size());
    for (std::size_t s = 0; s < result.submappings.size(); ++s) {
      double w = weights->weight(signature_key(result.layout, result.submappings[s]));
      if (w < 0) throw Error(ErrorCode::kInvalidArgument, "negative weight");
      log_weight[s] = w > 0 ? std::log(w) : -std::numeric_limits<double>::infinity();
    }
  }

  // log-sum-exp normalization over log(multiplicity * prod weights).
  std::vector<double> log_mass(n);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nm = result.mappings[i];
    dist.log2_multiplicity[i] = log2_count(nm.multiplicity);
    double l = dist.log2_multiplicity[i] * std::log(2.0);
    if (weights) {
      for (auto s : nm.submappings) l += log_weight[s];
    }
    log_mass[i] = l;
    top = std::max(top, l);
  }
  if (!std::isfinite(top)) {
    throw Error(ErrorCode::kZeroMass, "every mapping has zero weight");
  }
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    dist.mass[i] = std::exp(log_mass[i] - top);
    total += dist.mass[i];
  }
  for (double& m : dist.mass) m /= total;
  return dist;
}

double entropy(const MappingDistribution& dist) {
  double h = 0;
  for (std::size_t i = 0; i < dist.mass.size(); ++i) {
    const double p = dist.mass[i];
    if (p <= 0) continue;
    // multiplicity concrete mappings, each with p / multiplicity.
    h -= p * (std::log2(p) - dist.log2_multiplicity[i]);
  }
  return h;
}

double LinkMatrix::at(const std::string& input_id,
                      const std::string& output_id) const {
  auto i = std::find(input_ids.begin(), input_ids.end(), input_id);
  auto o = std::find(output_ids.begin(), output_ids.end(), output_id);
  if (i == input_ids.end() || o == output_ids.end()) {
    throw Error(ErrorCode::kUnknownId,
                "unknown coin in pair (" + input_id + ", " + output_id + ")");
  }
  return at(static_cast<std::size_t>(i - input_ids.begin()),
            static_cast<std::size_t>(o - output_ids.begin()));
}

namespace {

// Coin-level link matrix from a class-level one.
LinkMatrix expand_links(const ClassLayout& layout,
                        const std::vector<double>& by_class) {
  LinkMatrix m;
  std::vector<std::size_t> in_class, out_class;
  for (std::size_t a = 0; a < layout.inputs.size(); ++a) {
    for (const auto& id : layout.inputs[a].ids) {
      m.input_ids.push_back(id);
      in_class.push_back(a);
    }
  }
  for (std::size_t b = 0; b < layout.outputs.size(); ++b) {
    for (const auto& id : layout.outputs[b].ids) {
      m.output_ids.push_back(id);
      out_class.push_back(b);
    }
  }
  const std::size_t no = layout.outputs.size();
  m.p.resize(m.input_ids.size() * m.output_ids.size());
  for (std::size_t i = 0; i < m.input_ids.size(); ++i) {
    for (std::size_t o = 0; o < m.output_ids.size(); ++o) {
      m.p[i * m.output_ids.size() + o] = by_class[in_class[i] * no + out_class[o]];
    }
  }
  return m;
}

}  // namespace

LinkMatrix link_probability(const EnumerationResult& result,
                            const MappingDistribution& dist,
                            unsigned threads) {
  const auto& layout = result.layout;
  const std::size_t ni = layout.inputs.size();
  const std::size_t no = layout.outputs.size();

  // Per sub-mapping: P(fixed input of class a and fixed output of class b
  // both fall in it) = c_a d_b / (n_a m_b).
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (result.mappings.size() + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> partial(chunks);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      std::size_t c = next.fetch_add(1);
      if (c >= chunks) break;
      std::vector<double> acc(ni * no, 0.0);
      const std::size_t end = std::min(result.mappings.size(), (c + 1) * kChunk);
      for (std::size_t m = c * kChunk; m < end; ++m) {
        const double p = dist.mass[m];
        if (p == 0) continue;
        for (auto s : result.mappings[m].submappings) {
          const auto& sig = result.submappings[s];
          for (std::size_t a = 0; a < ni; ++a) {
            if (sig.in_counts[a] == 0) continue;
            const double pa = p * sig.in_counts[a] /
                              static_cast<double>(layout.inputs[a].count());
            for (std::size_t b = 0; b < no; ++b) {
              if (sig.out_counts[b] == 0) continue;
              acc[a * no + b] += pa * sig.out_counts[b] /
                                 static_cast<double>(layout.outputs[b].count());
            }
          }
        }
      }
      partial[c] = std::move(acc);
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(chunks)));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  // Pairwise reduction in fixed chunk order.
  while (partial.size() > 1) {
    std::vector<std::vector<double>> next_level;
    for (std::size_t i = 0; i + 1 < partial.size(); i += 2) {
      for (std::size_t k = 0; k < partial[i].size(); ++k) {
        partial[i][k] += partial[i + 1][k];
      }
      next_level.push_back(std::move(partial[i]));
    }
    if (partial.size() % 2) next_level.push_back(std::move(partial.back()));
    partial = std::move(next_level);
  }
  std::vector<double> by_class =
      partial.empty() ? std::vector<double>(ni * no, 0.0) : partial[0];
  for (double& v : by_class) v = std::clamp(v, 0.0, 1.0);
  return expand_links(layout, by_class);
}

std::vector<BigCount> uniform_link_counts(const EnumerationResult& result) {
  const auto& layout = result.layout;
  const std::size_t ni = layout.inputs.size();
  const std::size_t no = layout.outputs.size();
  std::vector<BigCount> by_class(ni * no, 0);
  for (const auto& nm : result.mappings) {
    for (std::size_t a = 0; a < ni; ++a) {
      for (std::size_t b = 0; b < no; ++b) {
        BigCount pairs = 0;
        for (auto s : nm.submappings) {
          const auto& sig = result.submappings[s];
          pairs += static_cast<unsigned>(sig.in_counts[a]) * sig.out_counts[b];
        }
        if (pairs == 0) continue;
        BigCount num = nm.multiplicity * pairs;
        BigCount den = layout.inputs[a].count() * layout.outputs[b].count();
        // Exact: each concrete mapping of nm links a fixed pair or not.
        by_class[a * no + b] += num / den;
      }
    }
  }
  std::vector<BigCount> out;
  for (std::size_t a = 0; a < ni; ++a) {
    for (std::size_t ia = 0; ia < layout.inputs[a].count(); ++ia) {
      for (std::size_t b = 0; b < no; ++b) {
        for (std::size_t ob = 0; ob < layout.outputs[b].count(); ++ob) {
          out.push_back(by_class[a * no + b]);
        }
      }
    }
  }
  return out;
}

double max_link(const LinkMatrix& links,
                const std::vector<std::string>& user_inputs,
                const std::string& output_id) {
  if (user_inputs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "user input set is empty");
  }
  double best = 0;
  for (const auto& i : user_inputs) best = std::max(best, links.at(i, output_id));
  return best;
}

double submapping_probability(const EnumerationResult& result,
                              const MappingDistribution& dist,
                              const SignatureKey& key) {
  std::vector<char> match(result.submappings.size(), 0);
  bool any = false;
  for (std::size_t s = 0; s < result.submappings.size(); ++s) {
    if (signature_key(result.layout, result.submappings[s]) == key) {
      match[s] = 1;
      any = true;
    }
  }
  double p = 0;
  for (std::size_t m = 0; m < result.mappings.size(); ++m) {
    for (auto s : result.mappings[m].submappings) {
      if (match[s]) {
        p += dist.mass[m];
        break;
      }
    }
  }
  if (!any) {
    throw Error(ErrorCode::kUnknownSignature,
                "signature does not occur in the enumeration result");
  }
  return std::min(p, 1.0);
}

MetricsReport compute_metrics(
    const EnumerationResult& result, const WeightTable* weights,
    const std::vector<std::vector<std::string>>& user_input_sets,
    unsigned threads) {
  MetricsReport report;
  auto dist = mapping_distribution(result, weights);
  report.entropy_bits = entropy(dist);
  report.mapping_count = result.total_concrete;

  // p(S) for every signature that occurs in some mapping.
  std::vector<char> used(result.submappings.size(), 0);
  for (const auto& nm : result.mappings) {
    for (auto s : nm.submappings) used[s] = 1;
  }
  std::map<SignatureKey, double> by_key;
  for (std::size_t s = 0; s < result.submappings.size(); ++s) {
    if (!used[s]) continue;
    auto key = signature_key(result.layout, result.submappings[s]);
    if (!by_key.count(key)) {
      by_key[key] = submapping_probability(result, dist, key);
    }
  }
  report.submapping_probability.assign(by_key.begin(), by_key.end());

  report.links = link_probability(result, dist, threads);
  for (const auto& user : user_input_sets) {
    for (const auto& o : report.links.output_ids) {
      report.max_links.emplace_back(user, o, max_link(report.links, user, o));
    }
  }
  return report;
}

}  // namespace cjmap
