#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cjmap/anonloss.hpp"
#include "cjmap/enumerate.hpp"
#include "cjmap/generator.hpp"
#include "cjmap/metrics.hpp"
#include "cjmap/multicj.hpp"
#include "cjmap/trend.hpp"

namespace cjmap {

// File formats are JSON documents (CSV for tabular reports). Parsers throw
// ParseError on malformed input; file helpers throw IoError.

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

struct GroundTruthRecord {
  std::uint64_t seed = 0;
  Mapping mapping;

  friend bool operator==(const GroundTruthRecord&, const GroundTruthRecord&) = default;
};

// A transaction file: the coinjoin plus optional policy knobs, attacker
// knowledge and, for generated instances, the ground truth.
struct TxDocument {
  Coinjoin tx;
  std::optional<PolicyParams> policy;
  std::optional<Knowledge> knowledge;
  std::optional<GroundTruthRecord> ground_truth;
};

TxDocument parse_tx(const std::string& text);
std::string dump_tx(const TxDocument& doc);
TxDocument tx_document(const GroundTruth& gt);

// Config: FeePolicy knobs plus Constraints overrides and defaults for the CLI.
struct Config {
  PolicyParams policy;
  std::optional<std::size_t> max_inputs_per_user;
  std::optional<std::size_t> max_outputs_per_user;
  std::optional<std::size_t> max_positive_residual_submappings;
  std::optional<std::size_t> max_change_outputs_per_user;
  std::vector<Amount> common_denominations;
  std::optional<std::string> design;
  std::optional<unsigned> threads;
};

Config parse_config(const std::string& text);
std::string dump_config(const Config& config);
// Later fields win.
PolicyParams merge_policy(PolicyParams base, const PolicyParams& over);
Constraints apply_config(Constraints c, const Config& config);

struct ResultDumpOptions {
  bool stats = false;     // wall-clock block, excluded from byte identity
  bool concrete = false;  // expand concrete mappings
  std::uint64_t concrete_cap = 1'000'000;
};

EnumerationResult parse_result(const std::string& text);
std::string dump_result(const EnumerationResult& result,
                        const ResultDumpOptions& options = {});

WeightTable parse_weights(const std::string& text);
std::string dump_weights(const WeightTable& weights);

TxGraph parse_graph(const std::string& text);
std::string dump_graph(const TxGraph& g);

// Members are inline transaction objects or paths relative to base_dir.
struct LinkedDocument {
  LinkedSet set;
  std::map<std::string, PolicyParams> params;
};

LinkedDocument parse_linked(const std::string& text, const std::string& base_dir = ".");
std::string dump_linked(const LinkedDocument& doc);

std::string dump_metrics(const MetricsReport& report);
std::string links_csv(const LinkMatrix& links);

std::string format_horizon(double days);
double parse_horizon(const std::string& text);
std::string dump_loss(const LossReport& report);
// txid,horizon,loss
std::string loss_tx_csv(const LossReport& report);
// txid,bucket,outputs,horizon,loss; txid "*" is the aggregate.
std::string loss_bucket_csv(const LossReport& report);

GeneratorParams parse_generator_params(const std::string& text);
std::string dump_generator_params(const GeneratorParams& params);

// size,numeric_mappings,concrete_mappings
std::string trend_csv(const std::vector<TrendRow>& rows);
// Accepts the trend CSV or any CSV whose first two columns are size,count.
std::vector<TrendPoint> parse_trend_csv(const std::string& text);
std::string dump_fit(const TrendFit& fit, std::optional<double> predict_size = {},
                     double loss = 0);

}  // namespace cjmap
