#include "cjmap/cjmap.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "json.hpp"

#include "cjmap/error.hpp"
#include "cjmap/io.hpp"

using nlohmann::json;

struct cjmap_context {
  unsigned threads = 0;
  std::string error;
};

struct cjmap_result {
  cjmap::EnumerationResult result;
};

namespace {

using namespace cjmap;

static_assert(static_cast<int>(ErrorCode::kInvalidArgument) + 1 == CJMAP_INVALID_ARGUMENT,
              "status codes must mirror ErrorCode");

cjmap_status status_of(ErrorCode code) {
  return static_cast<cjmap_status>(static_cast<int>(code) + 1);
}

// Runs f, translating exceptions into a status and the context message.
template <typename F>
cjmap_status guarded(cjmap_context* ctx, F&& f) {
  std::string message;
  cjmap_status status = CJMAP_OK;
  try {
    f();
  } catch (const Error& e) {
    status = status_of(e.code());
    message = e.what();
  } catch (const std::bad_alloc&) {
    status = CJMAP_INTERNAL_ERROR;
    message = "out of memory";
  } catch (const std::exception& e) {
    status = CJMAP_INTERNAL_ERROR;
    message = e.what();
  }
  if (ctx) ctx->error = std::move(message);
  return status;
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must not be null");
}

char* to_c(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_options(const char* text) {
  if (!text || !*text) return json::object();
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw Error(ErrorCode::kParseError, "options must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("malformed options: ") + e.what());
  }
}

std::uint64_t option_uint(const json& j, const char* key, std::uint64_t fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_number_unsigned()) {
    throw Error(ErrorCode::kParseError, std::string("'") + key + "' must be a non-negative integer");
  }
  return it->get<std::uint64_t>();
}

bool option_bool(const json& j, const char* key, bool fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_boolean()) throw Error(ErrorCode::kParseError, std::string("'") + key + "' must be a boolean");
  return it->get<bool>();
}

EnumerateOptions enumerate_options(const cjmap_context* ctx, const json& opts) {
  EnumerateOptions e;
  e.threads = ctx ? ctx->threads : 0;
  e.submapping_cap = option_uint(opts, "submapping_cap", e.submapping_cap);
  e.mapping_cap = option_uint(opts, "mapping_cap", e.mapping_cap);
  return e;
}

std::unique_ptr<WeightTable> weights_of(const char* text) {
  if (!text || !*text) return nullptr;
  return std::make_unique<WeightTable>(parse_weights(text));
}

std::vector<std::vector<std::string>> id_sets(const char* text) {
  std::vector<std::vector<std::string>> out;
  if (!text || !*text) return out;
  json j;
  try {
    j = json::parse(text);
    for (const auto& set : j) {
      std::vector<std::string> ids;
      for (const auto& id : set) ids.push_back(id.get<std::string>());
      out.push_back(std::move(ids));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("user inputs must be arrays of ids: ") + e.what());
  }
  if (!j.is_array()) throw Error(ErrorCode::kParseError, "user inputs must be an array");
  return out;
}

}  // namespace

extern "C" {

const char* cjmap_version(void) { return "1.0.0"; }

const char* cjmap_status_name(cjmap_status status) {
  if (status == CJMAP_OK) return "Ok";
  if (status == CJMAP_INTERNAL_ERROR) return "InternalError";
  if (status < CJMAP_OK || status > CJMAP_INTERNAL_ERROR) return "Unknown";
  // error_name returns views of string literals, so data() is terminated.
  return error_name(static_cast<ErrorCode>(static_cast<int>(status) - 1)).data();
}

cjmap_context* cjmap_context_new(void) { return new (std::nothrow) cjmap_context(); }

void cjmap_context_free(cjmap_context* ctx) { delete ctx; }

void cjmap_context_set_threads(cjmap_context* ctx, unsigned threads) {
  if (ctx) ctx->threads = threads;
}

const char* cjmap_last_error(const cjmap_context* ctx) {
  return ctx ? ctx->error.c_str() : "";
}

void cjmap_string_free(char* s) { std::free(s); }

cjmap_status cjmap_enumerate(cjmap_context* ctx, const char* tx_json,
                             const char* options_json, cjmap_result** out) {
  return guarded(ctx, [&] {
    require(tx_json, "tx_json");
    require(out, "out");
    *out = nullptr;
    TxDocument doc = parse_tx(tx_json);
    const json opts = parse_options(options_json);
    const Config cfg = parse_config(opts.dump());
    if (cfg.design) doc.tx.design = parse_design(*cfg.design);
    validate_coinjoin(doc.tx);
    PolicyParams params = merge_policy(doc.policy.value_or(PolicyParams{}), cfg.policy);
    NormalizedCoinjoin ntx = normalize_fees(doc.tx, policy_for(doc.tx, params));
    if (doc.knowledge && option_bool(opts, "apply_knowledge", true)) {
      ntx = apply_knowledge(ntx, *doc.knowledge);
    }
    Constraints c = apply_config(default_constraints(doc.tx.design), cfg);
    auto r = std::make_unique<cjmap_result>();
    r->result = enumerate_mappings(ntx, c, enumerate_options(ctx, opts));
    *out = r.release();
  });
}

cjmap_status cjmap_enumerate_linked(cjmap_context* ctx, const char* linked_json,
                                    const char* base_dir, const char* options_json,
                                    cjmap_result** out) {
  return guarded(ctx, [&] {
    require(linked_json, "linked_json");
    require(out, "out");
    *out = nullptr;
    LinkedDocument doc = parse_linked(linked_json, base_dir ? base_dir : ".");
    const json opts = parse_options(options_json);
    const Config cfg = parse_config(opts.dump());
    LinkedOptions lo;
    lo.enumerate = enumerate_options(ctx, opts);
    for (const auto& tx : doc.set.txs) {
      PolicyParams base;
      auto it = doc.params.find(tx.txid);
      if (it != doc.params.end()) base = it->second;
      lo.params[tx.txid] = merge_policy(base, cfg.policy);
      lo.constraints[tx.txid] = apply_config(default_constraints(tx.design), cfg);
    }
    auto r = std::make_unique<cjmap_result>();
    r->result = enumerate_linked(doc.set, lo).result;
    *out = r.release();
  });
}

cjmap_status cjmap_result_load(cjmap_context* ctx, const char* result_json,
                               cjmap_result** out) {
  return guarded(ctx, [&] {
    require(result_json, "result_json");
    require(out, "out");
    *out = nullptr;
    auto r = std::make_unique<cjmap_result>();
    r->result = parse_result(result_json);
    *out = r.release();
  });
}

void cjmap_result_free(cjmap_result* result) { delete result; }

uint64_t cjmap_result_numeric_count(const cjmap_result* result) {
  return result ? result->result.mappings.size() : 0;
}

double cjmap_result_log2_total(const cjmap_result* result) {
  if (!result || result->result.total_concrete == 0) return 0;
  return log2_count(result->result.total_concrete);
}

cjmap_status cjmap_result_total(cjmap_context* ctx, const cjmap_result* result, char** out) {
  return guarded(ctx, [&] {
    require(result, "result");
    require(out, "out");
    *out = to_c(result->result.total_concrete.str());
  });
}

cjmap_status cjmap_result_dump(cjmap_context* ctx, const cjmap_result* result, int flags,
                               char** out) {
  return guarded(ctx, [&] {
    require(result, "result");
    require(out, "out");
    ResultDumpOptions opt;
    opt.stats = flags & CJMAP_DUMP_STATS;
    opt.concrete = flags & CJMAP_DUMP_CONCRETE;
    *out = to_c(dump_result(result->result, opt));
  });
}

cjmap_status cjmap_result_truth_index(cjmap_context* ctx, const cjmap_result* result,
                                      const char* tx_json, int* has_truth, int64_t* index) {
  return guarded(ctx, [&] {
    require(result, "result");
    require(tx_json, "tx_json");
    require(has_truth, "has_truth");
    require(index, "index");
    *has_truth = 0;
    *index = -1;
    const TxDocument doc = parse_tx(tx_json);
    if (!doc.ground_truth) return;
    *has_truth = 1;
    auto found = find_numeric(result->result, doc.ground_truth->mapping);
    if (found) *index = static_cast<int64_t>(*found);
  });
}

cjmap_status cjmap_metrics(cjmap_context* ctx, const cjmap_result* result,
                           const char* weights_json, const char* user_inputs_json,
                           char** report_json, char** links_csv_out) {
  return guarded(ctx, [&] {
    require(result, "result");
    require(report_json, "report_json");
    auto weights = weights_of(weights_json);
    auto report = compute_metrics(result->result, weights.get(), id_sets(user_inputs_json),
                                  resolve_threads(ctx ? ctx->threads : 0));
    std::string text = dump_metrics(report);
    std::string csv = links_csv_out ? links_csv(report.links) : std::string();
    *report_json = to_c(text);
    if (links_csv_out) {
      try {
        *links_csv_out = to_c(csv);
      } catch (...) {
        std::free(*report_json);
        *report_json = nullptr;
        throw;
      }
    }
  });
}

cjmap_status cjmap_link_probability(cjmap_context* ctx, const cjmap_result* result,
                                    const char* weights_json, const char* input_id,
                                    const char* output_id, double* p) {
  return guarded(ctx, [&] {
    require(result, "result");
    require(input_id, "input_id");
    require(output_id, "output_id");
    require(p, "p");
    auto weights = weights_of(weights_json);
    auto dist = mapping_distribution(result->result, weights.get());
    auto links = link_probability(result->result, dist, resolve_threads(ctx ? ctx->threads : 0));
    *p = links.at(std::string(input_id), std::string(output_id));
  });
}

cjmap_status cjmap_anonloss(cjmap_context* ctx, const char* graph_json,
                            const char* options_json, char** report_json, char** tx_csv,
                            char** bucket_csv) {
  return guarded(ctx, [&] {
    require(graph_json, "graph_json");
    require(report_json, "report_json");
    TxGraph g = parse_graph(graph_json);
    const json opts = parse_options(options_json);

    std::vector<double> horizons{1, 7, 31, 365, kInfiniteHorizon};
    if (auto it = opts.find("horizons"); it != opts.end()) {
      horizons.clear();
      if (!it->is_array()) throw Error(ErrorCode::kParseError, "'horizons' must be an array");
      for (const auto& h : *it) {
        if (h.is_number()) {
          horizons.push_back(h.get<double>());
        } else if (h.is_string()) {
          horizons.push_back(parse_horizon(h.get<std::string>()));
        } else {
          throw Error(ErrorCode::kParseError, "horizons must be numbers or 'inf'");
        }
      }
    }

    std::vector<Bucket> buckets = named_buckets("default");
    if (auto it = opts.find("buckets"); it != opts.end()) {
      if (it->is_string()) {
        buckets = named_buckets(it->get<std::string>());
      } else if (it->is_array()) {
        std::vector<Amount> edges;
        for (const auto& e : *it) {
          if (!e.is_number_integer()) throw Error(ErrorCode::kParseError, "bucket edges must be integers");
          edges.push_back(e.get<Amount>());
        }
        buckets = buckets_from_edges(edges);
      } else {
        throw Error(ErrorCode::kParseError, "'buckets' must be a name or an edge list");
      }
    }

    LossOptions lo;
    lo.threads = resolve_threads(ctx ? ctx->threads : 0);
    if (auto it = opts.find("clock"); it != opts.end()) {
      const std::string clock = it->is_string() ? it->get<std::string>() : "";
      if (clock == "timestamp") {
        lo.clock = HorizonClock::kTimestamp;
      } else if (clock == "height") {
        lo.clock = HorizonClock::kBlockHeight;
      } else {
        throw Error(ErrorCode::kParseError, "'clock' must be 'timestamp' or 'height'");
      }
    }
    lo.blocks_per_day = static_cast<std::int64_t>(option_uint(opts, "blocks_per_day", 144));
    if (lo.blocks_per_day == 0) throw Error(ErrorCode::kInvalidArgument, "blocks_per_day must be positive");

    if (option_bool(opts, "detect", false)) {
      DetectionParams dp;
      dp.min_inputs = option_uint(opts, "min_inputs", dp.min_inputs);
      dp.min_addresses = option_uint(opts, "min_addresses", dp.min_addresses);
      if (auto it = opts.find("max_reuse"); it != opts.end()) {
        if (!it->is_number()) throw Error(ErrorCode::kParseError, "'max_reuse' must be a number");
        dp.max_reuse = it->get<double>();
      }
      if (auto it = opts.find("exclude"); it != opts.end()) {
        for (const auto& id : *it) {
          if (!id.is_string()) throw Error(ErrorCode::kParseError, "'exclude' must list txids");
          dp.exclusion_list.insert(id.get<std::string>());
        }
      }
      auto found = detect_coinjoins(g, dp);
      g.coinjoin_ids.insert(found.begin(), found.end());
    }

    LossReport report = compute_loss(g, horizons, buckets, lo);
    std::string text = dump_loss(report);
    std::string a = tx_csv ? loss_tx_csv(report) : "";
    std::string b = bucket_csv ? loss_bucket_csv(report) : "";
    *report_json = to_c(text);
    if (tx_csv) *tx_csv = to_c(a);
    if (bucket_csv) *bucket_csv = to_c(b);
  });
}

cjmap_status cjmap_generate(cjmap_context* ctx, const char* design, uint64_t users,
                            uint64_t seed, const char* params_json, char** tx_json) {
  return guarded(ctx, [&] {
    require(design, "design");
    require(tx_json, "tx_json");
    GeneratorParams p = params_json && *params_json ? parse_generator_params(params_json)
                                                    : GeneratorParams{};
    auto gt = generate(parse_design(design), users, seed, p);
    *tx_json = to_c(dump_tx(tx_document(gt)));
  });
}

cjmap_status cjmap_trend(cjmap_context* ctx, const char* design, const uint64_t* sizes,
                         size_t size_count, uint64_t per_size, uint64_t seed,
                         const char* params_json, char** csv) {
  return guarded(ctx, [&] {
    require(design, "design");
    require(sizes || size_count == 0, "sizes");
    require(csv, "csv");
    if (size_count == 0 || per_size == 0) {
      throw Error(ErrorCode::kInvalidArgument, "trend needs at least one size and one instance");
    }
    GeneratorParams p = params_json && *params_json ? parse_generator_params(params_json)
                                                    : GeneratorParams{};
    std::vector<std::size_t> sz(sizes, sizes + size_count);
    auto rows = trend_dataset(parse_design(design), sz, per_size, seed, p,
                              resolve_threads(ctx ? ctx->threads : 0));
    *csv = to_c(trend_csv(rows));
  });
}

cjmap_status cjmap_fit(cjmap_context* ctx, const char* csv, int mean_per_size,
                       double predict_size, double loss, char** fit_json) {
  return guarded(ctx, [&] {
    require(csv, "csv");
    require(fit_json, "fit_json");
    auto fit = fit_trend(parse_trend_csv(csv),
                         mean_per_size ? TrendAggregate::kMean : TrendAggregate::kNone);
    std::optional<double> at;
    if (predict_size >= 0) at = predict_size;
    *fit_json = to_c(dump_fit(fit, at, loss));
  });
}

}  // extern "C"
