#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cjmap/model.hpp"

namespace cjmap {

struct OutPoint {
  std::string txid;
  std::uint32_t index = 0;

  friend auto operator<=>(const OutPoint&, const OutPoint&) = default;
};

// An input either spends an output of a graph transaction or comes from
// outside the graph, in which case value and address may be given inline.
struct GraphInput {
  OutPoint prev;
  std::optional<Amount> value;
  std::optional<std::string> address;
};

struct GraphOutput {
  Amount value = 0;
  std::optional<std::string> address;
};

struct GraphTx {
  std::string txid;
  std::int64_t timestamp = 0;  // seconds since epoch
  std::optional<std::int64_t> height;
  std::vector<GraphInput> inputs;
  std::vector<GraphOutput> outputs;
};

struct TxGraph {
  std::vector<GraphTx> transactions;
  std::set<std::string> coinjoin_ids;
};

// Throws InvalidGraph on duplicate txids, out-of-range spends, double spends,
// spends going back in time, or coinjoin ids missing from the graph.
void validate_graph(const TxGraph& g);

// Read-only lookup structure over a validated graph.
class GraphIndex {
 public:
  explicit GraphIndex(const TxGraph& g);

  const TxGraph& graph() const { return *graph_; }
  // Throws UnknownTx.
  std::size_t tx_index(const std::string& txid) const;
  const GraphTx* find(const std::string& txid) const;
  // Transaction index spending the outpoint, if any.
  std::optional<std::size_t> spender(const OutPoint& op) const;
  bool is_coinjoin(std::size_t tx) const { return coinjoin_[tx]; }
  // Number of inputs of `tx` that spend outputs of coinjoins.
  std::size_t coinjoin_inputs(std::size_t tx) const { return cj_inputs_[tx]; }
  // Address and value of an input, resolved through the graph when possible.
  std::optional<std::string> input_address(const GraphInput& in) const;
  std::optional<Amount> input_value(const GraphInput& in) const;

 private:
  const TxGraph* graph_;
  std::map<std::string, std::size_t> by_txid_;
  std::map<OutPoint, std::size_t> spent_by_;
  std::vector<char> coinjoin_;
  std::vector<std::size_t> cj_inputs_;
};

struct DetectionParams {
  std::size_t min_addresses = 5;
  std::size_t min_inputs = 20;
  double max_reuse = 0.70;
  std::set<std::string> exclusion_list;
};

// Structural coinjoin screen. Address reuse is 1 - distinct / total over all
// addressed coins on both sides.
bool detect_coinjoin(const Coinjoin& tx, const DetectionParams& params = {});
bool detect_coinjoin(const GraphIndex& index, const GraphTx& tx,
                     const DetectionParams& params = {});

// Flags every graph transaction passing the screen.
std::set<std::string> detect_coinjoins(const TxGraph& g,
                                       const DetectionParams& params = {});

// Coinjoin view of a graph transaction. Inputs with unknown values throw
// InvalidGraph.
Coinjoin to_coinjoin(const GraphIndex& index, const GraphTx& tx);

// Ids of all outputs sharing the value of `output_id`. Throws UnknownOutput.
std::vector<std::string> anonymity_set(const Coinjoin& tx,
                                       const std::string& output_id);

enum class HorizonClock { kTimestamp, kBlockHeight };

struct LossOptions {
  HorizonClock clock = HorizonClock::kTimestamp;
  std::int64_t blocks_per_day = 144;
  unsigned threads = 1;
};

inline constexpr double kInfiniteHorizon = std::numeric_limits<double>::infinity();

// Output indices of `cj` spent by consolidations within `days` after it.
// Throws UnknownTx when `cj` is not a coinjoin of the graph.
std::set<std::uint32_t> find_consolidations(const GraphIndex& index,
                                            const std::string& cj, double days,
                                            const LossOptions& options = {});

// A value range in satoshis; each side may be open or closed.
struct Bucket {
  std::string label;
  Amount lo = 0;
  Amount hi = 0;
  bool lo_closed = true;
  bool hi_closed = true;

  bool contains(Amount v) const {
    return (lo_closed ? v >= lo : v > lo) && (hi_closed ? v <= hi : v < hi);
  }
};

// Named sets: "default" (arbitrary-value ranges), "wasabi1", "whirlpool".
// Values outside every bucket fall into a trailing "other" bucket.
std::vector<Bucket> named_buckets(const std::string& name);
// Half-open (e0, e1], (e1, e2], ... ranges from ascending edges in satoshis;
// the first range is closed at e0.
std::vector<Bucket> buckets_from_edges(const std::vector<Amount>& edges);

inline constexpr std::string_view kOtherBucket = "other";

struct OutputLoss {
  OutPoint output;
  Amount value = 0;
  std::vector<double> loss;  // per horizon
};

struct BucketLoss {
  std::string txid;  // empty for the aggregate over all coinjoins
  std::string bucket;
  std::size_t outputs = 0;
  std::vector<double> loss;
};

struct TxLoss {
  std::string txid;
  std::size_t outputs = 0;
  std::vector<double> loss;
};

struct LossReport {
  std::vector<double> horizons;
  std::vector<OutputLoss> per_output;
  std::vector<TxLoss> per_tx;
  std::vector<BucketLoss> per_tx_bucket;
  std::vector<BucketLoss> per_bucket;
  TxLoss overall;  // mean over all coinjoin outputs
};

// Throws InvalidArgument when there are no coinjoins or a horizon is
// negative.
LossReport compute_loss(const TxGraph& g, const std::vector<double>& horizons,
                        const std::vector<Bucket>& buckets,
                        const LossOptions& options = {});

}  // namespace cjmap
