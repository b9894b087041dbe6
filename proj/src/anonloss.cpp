#include "cjmap/anonloss.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "cjmap/error.hpp"

namespace cjmap {

namespace {

constexpr std::int64_t kSecondsPerDay = 86'400;
constexpr Amount kBtc = 100'000'000;

std::string describe(const OutPoint& op) {
  return op.txid + ":" + std::to_string(op.index);
}

}  // namespace

void validate_graph(const TxGraph& g) {
  std::map<std::string, std::size_t> by_txid;
  for (std::size_t t = 0; t < g.transactions.size(); ++t) {
    if (!by_txid.emplace(g.transactions[t].txid, t).second) {
      throw Error(ErrorCode::kInvalidGraph,
                  "duplicate transaction " + g.transactions[t].txid);
    }
  }
  std::set<OutPoint> spent;
  for (const GraphTx& tx : g.transactions) {
    for (const GraphInput& in : tx.inputs) {
      auto it = by_txid.find(in.prev.txid);
      if (it == by_txid.end()) continue;  // external coin
      const GraphTx& src = g.transactions[it->second];
      if (in.prev.index >= src.outputs.size()) {
        throw Error(ErrorCode::kInvalidGraph,
                    tx.txid + " spends missing output " + describe(in.prev));
      }
      if (!spent.insert(in.prev).second) {
        throw Error(ErrorCode::kInvalidGraph,
                    "output " + describe(in.prev) + " spent twice");
      }
      if (tx.timestamp < src.timestamp) {
        throw Error(ErrorCode::kInvalidGraph,
                    tx.txid + " spends " + src.txid + " before it exists");
      }
      if (tx.height && src.height && *tx.height < *src.height) {
        throw Error(ErrorCode::kInvalidGraph,
                    tx.txid + " is lower than the block of " + src.txid);
      }
    }
  }
  for (const auto& id : g.coinjoin_ids) {
    if (!by_txid.count(id)) {
      throw Error(ErrorCode::kInvalidGraph,
                  "coinjoin " + id + " is not in the graph");
    }
  }
}

GraphIndex::GraphIndex(const TxGraph& g) : graph_(&g) {
  validate_graph(g);
  const std::size_t n = g.transactions.size();
  coinjoin_.assign(n, 0);
  cj_inputs_.assign(n, 0);
  for (std::size_t t = 0; t < n; ++t) {
    by_txid_.emplace(g.transactions[t].txid, t);
    coinjoin_[t] = g.coinjoin_ids.count(g.transactions[t].txid) ? 1 : 0;
  }
  for (std::size_t t = 0; t < n; ++t) {
    for (const GraphInput& in : g.transactions[t].inputs) {
      auto it = by_txid_.find(in.prev.txid);
      if (it == by_txid_.end()) continue;
      spent_by_.emplace(in.prev, t);
      if (coinjoin_[it->second]) ++cj_inputs_[t];
    }
  }
}

std::size_t GraphIndex::tx_index(const std::string& txid) const {
  auto it = by_txid_.find(txid);
  if (it == by_txid_.end()) {
    throw Error(ErrorCode::kUnknownTx, "unknown transaction " + txid);
  }
  return it->second;
}

const GraphTx* GraphIndex::find(const std::string& txid) const {
  auto it = by_txid_.find(txid);
  return it == by_txid_.end() ? nullptr : &graph_->transactions[it->second];
}

std::optional<std::size_t> GraphIndex::spender(const OutPoint& op) const {
  auto it = spent_by_.find(op);
  if (it == spent_by_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> GraphIndex::input_address(const GraphInput& in) const {
  if (const GraphTx* src = find(in.prev.txid)) {
    return src->outputs[in.prev.index].address;
  }
  return in.address;
}

std::optional<Amount> GraphIndex::input_value(const GraphInput& in) const {
  if (const GraphTx* src = find(in.prev.txid)) {
    return src->outputs[in.prev.index].value;
  }
  return in.value;
}

namespace {

bool screen(std::size_t input_count,
            const std::vector<std::optional<std::string>>& addresses,
            const std::string& txid, const DetectionParams& params) {
  if (params.exclusion_list.count(txid)) return false;
  if (input_count < params.min_inputs) return false;
  std::unordered_set<std::string> distinct;
  std::size_t total = 0;
  for (const auto& a : addresses) {
    if (!a) continue;
    ++total;
    distinct.insert(*a);
  }
  if (distinct.size() < params.min_addresses) return false;
  const double reuse =
      total == 0 ? 0.0 : 1.0 - static_cast<double>(distinct.size()) / total;
  return reuse <= params.max_reuse;
}

}  // namespace

bool detect_coinjoin(const Coinjoin& tx, const DetectionParams& params) {
  std::vector<std::optional<std::string>> addresses;
  for (const Coin& c : tx.inputs) addresses.push_back(c.address);
  for (const Coin& c : tx.outputs) addresses.push_back(c.address);
  return screen(tx.inputs.size(), addresses, tx.txid, params);
}

bool detect_coinjoin(const GraphIndex& index, const GraphTx& tx,
                     const DetectionParams& params) {
  std::vector<std::optional<std::string>> addresses;
  for (const GraphInput& in : tx.inputs) addresses.push_back(index.input_address(in));
  for (const GraphOutput& out : tx.outputs) addresses.push_back(out.address);
  return screen(tx.inputs.size(), addresses, tx.txid, params);
}

std::set<std::string> detect_coinjoins(const TxGraph& g,
                                       const DetectionParams& params) {
  TxGraph plain = g;
  plain.coinjoin_ids.clear();
  GraphIndex index(plain);
  std::set<std::string> found;
  for (const GraphTx& tx : plain.transactions) {
    if (detect_coinjoin(index, tx, params)) found.insert(tx.txid);
  }
  return found;
}

Coinjoin to_coinjoin(const GraphIndex& index, const GraphTx& tx) {
  Coinjoin cj;
  cj.txid = tx.txid;
  for (const GraphInput& in : tx.inputs) {
    auto value = index.input_value(in);
    if (!value) {
      throw Error(ErrorCode::kInvalidGraph,
                  "input " + describe(in.prev) + " of " + tx.txid +
                      " has no known value");
    }
    Coin c{describe(in.prev), *value, index.input_address(in), std::nullopt, {}};
    if (const GraphTx* src = index.find(in.prev.txid)) {
      c.origin = index.is_coinjoin(index.tx_index(src->txid)) ? Origin::kRemix
                                                              : Origin::kFresh;
    }
    cj.inputs.push_back(std::move(c));
  }
  for (std::size_t o = 0; o < tx.outputs.size(); ++o) {
    cj.outputs.push_back(
        Coin{std::to_string(o), tx.outputs[o].value, tx.outputs[o].address,
             std::nullopt, {}});
  }
  return cj;
}

std::vector<std::string> anonymity_set(const Coinjoin& tx,
                                       const std::string& output_id) {
  auto it = std::find_if(tx.outputs.begin(), tx.outputs.end(),
                         [&](const Coin& c) { return c.id == output_id; });
  if (it == tx.outputs.end()) {
    throw Error(ErrorCode::kUnknownOutput,
                "no output " + output_id + " in " + tx.txid);
  }
  std::vector<std::string> out;
  for (const Coin& c : tx.outputs) {
    if (c.value == it->value) out.push_back(c.id);
  }
  return out;
}

namespace {

// Clock distance from cj to the consolidation spending output `o`, or none.
std::optional<std::int64_t> consolidation_delay(const GraphIndex& index,
                                                std::size_t cj, std::uint32_t o,
                                                const LossOptions& options) {
  const auto& txs = index.graph().transactions;
  auto t = index.spender(OutPoint{txs[cj].txid, o});
  // Remixes are not consolidations; single coinjoin inputs link nothing.
  if (!t || index.is_coinjoin(*t) || index.coinjoin_inputs(*t) < 2) {
    return std::nullopt;
  }
  if (options.clock == HorizonClock::kBlockHeight) {
    if (!txs[cj].height || !txs[*t].height) {
      throw Error(ErrorCode::kInvalidGraph,
                  "block-height clock needs heights on " + txs[cj].txid +
                      " and " + txs[*t].txid);
    }
    return *txs[*t].height - *txs[cj].height;
  }
  return txs[*t].timestamp - txs[cj].timestamp;
}

bool within(std::int64_t delay, double days, const LossOptions& options) {
  if (std::isinf(days)) return true;
  const double unit = options.clock == HorizonClock::kBlockHeight
                          ? static_cast<double>(options.blocks_per_day)
                          : static_cast<double>(kSecondsPerDay);
  return static_cast<double>(delay) < days * unit;
}

std::size_t coinjoin_index(const GraphIndex& index, const std::string& cj) {
  std::size_t t = index.tx_index(cj);
  if (!index.is_coinjoin(t)) {
    throw Error(ErrorCode::kUnknownTx, cj + " is not a known coinjoin");
  }
  return t;
}

}  // namespace

std::set<std::uint32_t> find_consolidations(const GraphIndex& index,
                                            const std::string& cj, double days,
                                            const LossOptions& options) {
  const std::size_t t = coinjoin_index(index, cj);
  std::set<std::uint32_t> out;
  const auto& tx = index.graph().transactions[t];
  for (std::uint32_t o = 0; o < tx.outputs.size(); ++o) {
    auto delay = consolidation_delay(index, t, o, options);
    if (delay && within(*delay, days, options)) out.insert(o);
  }
  return out;
}

std::vector<Bucket> named_buckets(const std::string& name) {
  auto sat = [](double btc) { return static_cast<Amount>(std::llround(btc * kBtc)); };
  if (name == "default") {
    return {{"[0, 0.001]", 0, sat(0.001), true, true},
            {"(0.001, 0.01]", sat(0.001), sat(0.01), false, true},
            {"(0.01, 0.05]", sat(0.01), sat(0.05), false, true},
            {"(0.05, 0.5]", sat(0.05), sat(0.5), false, true}};
  }
  if (name == "wasabi1") {
    return {{"[0.09, 0.11]", sat(0.09), sat(0.11), true, true},
            {"(0.19, 0.21]", sat(0.19), sat(0.21), false, true},
            {"(0.39, 0.41]", sat(0.39), sat(0.41), false, true}};
  }
  if (name == "whirlpool") {
    std::vector<Bucket> pools;
    for (double v : {0.001, 0.01, 0.05, 0.5}) {
      std::string label = std::to_string(v);
      label.erase(label.find_last_not_of('0') + 1);
      pools.push_back({label + " pool", sat(v), sat(v), true, true});
    }
    return pools;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown bucket set '" + name + "'");
}

std::vector<Bucket> buckets_from_edges(const std::vector<Amount>& edges) {
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "bucket edges must be at least two strictly ascending values");
  }
  std::vector<Bucket> out;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    std::string label = (i == 0 ? "[" : "(") + std::to_string(edges[i]) + ", " +
                        std::to_string(edges[i + 1]) + "]";
    out.push_back({label, edges[i], edges[i + 1], i == 0, true});
  }
  return out;
}

namespace {

struct CoinjoinLoss {
  std::vector<OutputLoss> outputs;
  std::vector<std::size_t> bucket_of;  // per output
};

CoinjoinLoss loss_of(const GraphIndex& index, std::size_t t,
                     const std::vector<double>& horizons,
                     const std::vector<Bucket>& buckets,
                     const LossOptions& options) {
  const GraphTx& tx = index.graph().transactions[t];
  const std::size_t n = tx.outputs.size();
  std::vector<std::optional<std::int64_t>> delay(n);
  for (std::uint32_t o = 0; o < n; ++o) {
    delay[o] = consolidation_delay(index, t, o, options);
  }
  std::map<Amount, std::vector<std::uint32_t>> by_value;
  for (std::uint32_t o = 0; o < n; ++o) by_value[tx.outputs[o].value].push_back(o);

  CoinjoinLoss res;
  res.outputs.resize(n);
  res.bucket_of.resize(n, buckets.size());
  for (std::uint32_t o = 0; o < n; ++o) {
    res.outputs[o].output = OutPoint{tx.txid, o};
    res.outputs[o].value = tx.outputs[o].value;
    res.outputs[o].loss.resize(horizons.size());
    for (std::size_t b = 0; b < buckets.size(); ++b) {
      if (buckets[b].contains(tx.outputs[o].value)) {
        res.bucket_of[o] = b;
        break;
      }
    }
  }
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    for (const auto& [value, members] : by_value) {
      std::size_t hit = 0;
      for (auto o : members) {
        if (delay[o] && within(*delay[o], horizons[h], options)) ++hit;
      }
      const double a = static_cast<double>(hit) / members.size();
      for (auto o : members) res.outputs[o].loss[h] = a;
    }
  }
  return res;
}

void accumulate(std::vector<double>& sum, const std::vector<double>& add) {
  for (std::size_t h = 0; h < sum.size(); ++h) sum[h] += add[h];
}

void average(std::vector<double>& sum, std::size_t count) {
  for (double& v : sum) v = count ? v / count : 0.0;
}

}  // namespace

LossReport compute_loss(const TxGraph& g, const std::vector<double>& horizons,
                        const std::vector<Bucket>& buckets,
                        const LossOptions& options) {
  for (double d : horizons) {
    if (std::isnan(d) || d < 0) {
      throw Error(ErrorCode::kInvalidArgument, "horizons must be non-negative");
    }
  }
  GraphIndex index(g);
  std::vector<std::size_t> cjs;
  for (std::size_t t = 0; t < g.transactions.size(); ++t) {
    if (index.is_coinjoin(t)) cjs.push_back(t);
  }
  if (cjs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "graph has no coinjoins");
  }

  std::vector<CoinjoinLoss> per_cj(cjs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (;;) {
      std::size_t k = next.fetch_add(1);
      if (k >= cjs.size()) break;
      try {
        per_cj[k] = loss_of(index, cjs[k], horizons, buckets, options);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(
      1u, std::min<unsigned>(options.threads, static_cast<unsigned>(cjs.size())));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  LossReport report;
  report.horizons = horizons;
  const std::size_t nb = buckets.size() + 1;  // trailing "other"
  auto label = [&](std::size_t b) {
    return b < buckets.size() ? buckets[b].label : std::string(kOtherBucket);
  };
  std::vector<BucketLoss> total(nb);
  report.overall.loss.assign(horizons.size(), 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    total[b].bucket = label(b);
    total[b].loss.assign(horizons.size(), 0.0);
  }
  for (std::size_t k = 0; k < cjs.size(); ++k) {
    const auto& txid = g.transactions[cjs[k]].txid;
    const CoinjoinLoss& cl = per_cj[k];
    TxLoss tl{txid, cl.outputs.size(), std::vector<double>(horizons.size(), 0.0)};
    std::vector<BucketLoss> local(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      local[b] = BucketLoss{txid, label(b), 0, std::vector<double>(horizons.size(), 0.0)};
    }
    for (std::size_t o = 0; o < cl.outputs.size(); ++o) {
      const auto& ol = cl.outputs[o];
      accumulate(tl.loss, ol.loss);
      accumulate(local[cl.bucket_of[o]].loss, ol.loss);
      ++local[cl.bucket_of[o]].outputs;
      accumulate(total[cl.bucket_of[o]].loss, ol.loss);
      ++total[cl.bucket_of[o]].outputs;
      accumulate(report.overall.loss, ol.loss);
      ++report.overall.outputs;
      report.per_output.push_back(ol);
    }
    average(tl.loss, tl.outputs);
    report.per_tx.push_back(std::move(tl));
    for (auto& bl : local) {
      if (bl.outputs == 0) continue;
      average(bl.loss, bl.outputs);
      report.per_tx_bucket.push_back(std::move(bl));
    }
  }
  for (auto& bl : total) {
    if (bl.outputs == 0) continue;
    average(bl.loss, bl.outputs);
    report.per_bucket.push_back(std::move(bl));
  }
  average(report.overall.loss, report.overall.outputs);
  return report;
}

}  // namespace cjmap
