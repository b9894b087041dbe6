#include "cjmap/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "cjmap/error.hpp"

namespace cjmap {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& msg) {
  throw Error(ErrorCode::kParseError, msg);
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    parse_fail(std::string("malformed JSON: ") + e.what());
  }
}

const json& field(const json& j, const char* key) {
  if (!j.is_object()) parse_fail(std::string("expected an object holding '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) parse_fail(std::string("missing field '") + key + "'");
  return *it;
}

const json* optional_field(const json& j, const char* key) {
  if (!j.is_object()) parse_fail(std::string("expected an object holding '") + key + "'");
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

std::int64_t as_int(const json& j, const char* what) {
  if (!j.is_number_integer()) parse_fail(std::string("'") + what + "' must be an integer");
  return j.get<std::int64_t>();
}

std::uint64_t as_uint(const json& j, const char* what) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    parse_fail(std::string("'") + what + "' must be a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

std::string as_string(const json& j, const char* what) {
  if (!j.is_string()) parse_fail(std::string("'") + what + "' must be a string");
  return j.get<std::string>();
}

double as_double(const json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    try {
      return parse_horizon(j.get<std::string>());
    } catch (const Error&) {
    }
  }
  parse_fail(std::string("'") + what + "' must be a number");
}

const json& as_array(const json& j, const char* what) {
  if (!j.is_array()) parse_fail(std::string("'") + what + "' must be an array");
  return j;
}

std::vector<std::string> string_list(const json& j, const char* what) {
  std::vector<std::string> out;
  for (const auto& e : as_array(j, what)) out.push_back(as_string(e, what));
  return out;
}

std::vector<Amount> amount_list(const json& j, const char* what) {
  std::vector<Amount> out;
  for (const auto& e : as_array(j, what)) out.push_back(as_int(e, what));
  return out;
}

BigCount as_big(const json& j, const char* what) {
  if (j.is_number_unsigned()) return BigCount(j.get<std::uint64_t>());
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return BigCount(j.get<std::int64_t>());
  const std::string s = as_string(j, what);
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    parse_fail(std::string("'") + what + "' must be a decimal count");
  }
  return BigCount(s);
}

std::string big_string(const BigCount& n) { return n.str(); }

// Shortest decimal that round-trips a double.
std::string real(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  double back = std::stod(os.str());
  for (int p = 1; p <= 17; ++p) {
    std::ostringstream t;
    t << std::setprecision(p) << v;
    if (std::stod(t.str()) == back) return t.str();
  }
  return os.str();
}

json real_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& out) {
  if (const json* v = optional_field(j, key)) {
    if constexpr (std::is_same_v<T, std::string>) {
      out = as_string(*v, key);
    } else if constexpr (std::is_unsigned_v<T>) {
      out = static_cast<T>(as_uint(*v, key));
    } else {
      out = static_cast<T>(as_int(*v, key));
    }
  }
}

template <typename T>
void write_opt(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

// ---- coins and transactions

Origin parse_origin(const std::string& s) {
  if (s == "fresh") return Origin::kFresh;
  if (s == "remix") return Origin::kRemix;
  parse_fail("origin must be 'fresh' or 'remix', got '" + s + "'");
}

Coin coin_from(const json& j) {
  Coin c;
  c.id = as_string(field(j, "id"), "id");
  c.value = as_int(field(j, "value"), "value");
  read_opt(j, "address", c.address);
  if (const json* o = optional_field(j, "origin")) c.origin = parse_origin(as_string(*o, "origin"));
  if (const json* t = optional_field(j, "tag")) c.tag = as_string(*t, "tag");
  return c;
}

json coin_json(const Coin& c) {
  json j{{"id", c.id}, {"value", c.value}};
  write_opt(j, "address", c.address);
  if (c.origin) j["origin"] = *c.origin == Origin::kRemix ? "remix" : "fresh";
  if (!c.tag.empty()) j["tag"] = c.tag;
  return j;
}

Coinjoin tx_from(const json& j) {
  Coinjoin tx;
  tx.txid = as_string(field(j, "txid"), "txid");
  if (const json* d = optional_field(j, "design")) tx.design = parse_design(as_string(*d, "design"));
  read_opt(j, "feerate", tx.declared_mining_feerate);
  for (const auto& c : as_array(field(j, "inputs"), "inputs")) tx.inputs.push_back(coin_from(c));
  for (const auto& c : as_array(field(j, "outputs"), "outputs")) tx.outputs.push_back(coin_from(c));
  return tx;
}

json tx_json(const Coinjoin& tx) {
  json j{{"txid", tx.txid}, {"design", std::string(design_name(tx.design))}};
  write_opt(j, "feerate", tx.declared_mining_feerate);
  j["inputs"] = json::array();
  j["outputs"] = json::array();
  for (const auto& c : tx.inputs) j["inputs"].push_back(coin_json(c));
  for (const auto& c : tx.outputs) j["outputs"].push_back(coin_json(c));
  return j;
}

PolicyParams policy_from(const json& j) {
  PolicyParams p;
  read_opt(j, "feerate", p.feerate);
  read_opt(j, "min_registrable_output", p.min_registrable_output);
  read_opt(j, "feerate_error_margin", p.feerate_error_margin);
  read_opt(j, "coordination_rate_ppm", p.coordination_rate_ppm);
  read_opt(j, "coordination_floor", p.coordination_floor);
  read_opt(j, "max_maker_fee", p.max_maker_fee);
  read_opt(j, "delta_max", p.delta_max);
  read_opt(j, "input_vsize", p.input_vsize);
  read_opt(j, "output_vsize", p.output_vsize);
  read_opt(j, "standard_denomination", p.standard_denomination);
  return p;
}

json policy_json(const PolicyParams& p) {
  json j = json::object();
  write_opt(j, "feerate", p.feerate);
  write_opt(j, "min_registrable_output", p.min_registrable_output);
  write_opt(j, "feerate_error_margin", p.feerate_error_margin);
  write_opt(j, "coordination_rate_ppm", p.coordination_rate_ppm);
  write_opt(j, "coordination_floor", p.coordination_floor);
  write_opt(j, "max_maker_fee", p.max_maker_fee);
  write_opt(j, "delta_max", p.delta_max);
  write_opt(j, "input_vsize", p.input_vsize);
  write_opt(j, "output_vsize", p.output_vsize);
  write_opt(j, "standard_denomination", p.standard_denomination);
  return j;
}

std::vector<std::pair<std::string, std::string>> pair_list(const json& j, const char* what) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : as_array(j, what)) {
    if (!e.is_array() || e.size() != 2) parse_fail(std::string("'") + what + "' entries must be pairs");
    out.emplace_back(as_string(e[0], what), as_string(e[1], what));
  }
  return out;
}

std::vector<std::vector<std::string>> group_list(const json& j, const char* what) {
  std::vector<std::vector<std::string>> out;
  for (const auto& e : as_array(j, what)) out.push_back(string_list(e, what));
  return out;
}

Knowledge knowledge_from(const json& j) {
  Knowledge k;
  if (const json* v = optional_field(j, "same_owner_inputs")) k.same_owner_input_groups = group_list(*v, "same_owner_inputs");
  if (const json* v = optional_field(j, "same_owner_outputs")) k.same_owner_output_groups = group_list(*v, "same_owner_outputs");
  if (const json* v = optional_field(j, "linked_pairs")) k.linked_pairs = pair_list(*v, "linked_pairs");
  if (const json* v = optional_field(j, "distinct_owner_pairs")) k.distinct_owner_pairs = pair_list(*v, "distinct_owner_pairs");
  return k;
}

json knowledge_json(const Knowledge& k) {
  json j = json::object();
  if (!k.same_owner_input_groups.empty()) j["same_owner_inputs"] = k.same_owner_input_groups;
  if (!k.same_owner_output_groups.empty()) j["same_owner_outputs"] = k.same_owner_output_groups;
  auto pairs = [](const auto& v) {
    json a = json::array();
    for (const auto& [x, y] : v) a.push_back({x, y});
    return a;
  };
  if (!k.linked_pairs.empty()) j["linked_pairs"] = pairs(k.linked_pairs);
  if (!k.distinct_owner_pairs.empty()) j["distinct_owner_pairs"] = pairs(k.distinct_owner_pairs);
  return j;
}

Mapping mapping_from(const json& j) {
  Mapping m;
  for (const auto& s : as_array(j, "mapping")) {
    SubMapping sm;
    sm.input_ids = string_list(field(s, "inputs"), "inputs");
    sm.output_ids = string_list(field(s, "outputs"), "outputs");
    sm.residual = as_int(field(s, "residual"), "residual");
    m.submappings.push_back(std::move(sm));
  }
  return m;
}

json mapping_json(const Mapping& m) {
  json a = json::array();
  for (const auto& s : m.submappings) {
    a.push_back({{"inputs", s.input_ids}, {"outputs", s.output_ids}, {"residual", s.residual}});
  }
  return a;
}

// ---- enumeration results

std::vector<CoinClass> classes_from(const json& j, const char* what) {
  std::vector<CoinClass> out;
  for (const auto& e : as_array(j, what)) {
    CoinClass c;
    c.value = as_int(field(e, "value"), "value");
    if (const json* t = optional_field(e, "tag")) c.tag = as_string(*t, "tag");
    if (const json* p = optional_field(e, "pinned")) c.pinned = as_string(*p, "pinned");
    c.ids = string_list(field(e, "ids"), "ids");
    out.push_back(std::move(c));
  }
  return out;
}

json classes_json(const std::vector<CoinClass>& classes) {
  json a = json::array();
  for (const auto& c : classes) {
    json e{{"value", c.value}, {"ids", c.ids}};
    if (!c.tag.empty()) e["tag"] = c.tag;
    if (!c.pinned.empty()) e["pinned"] = c.pinned;
    a.push_back(std::move(e));
  }
  return a;
}

std::vector<std::uint16_t> counts_from(const json& j, std::size_t expect, const char* what) {
  std::vector<std::uint16_t> out;
  for (const auto& e : as_array(j, what)) {
    const auto v = as_uint(e, what);
    if (v > std::numeric_limits<std::uint16_t>::max()) parse_fail("class count out of range");
    out.push_back(static_cast<std::uint16_t>(v));
  }
  if (out.size() != expect) parse_fail(std::string("'") + what + "' length does not match the layout");
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIoError, "failed reading '" + path + "'");
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "failed writing '" + path + "'");
}

TxDocument parse_tx(const std::string& text) {
  const json j = parse_json(text);
  TxDocument doc;
  doc.tx = tx_from(j);
  if (const json* p = optional_field(j, "policy")) doc.policy = policy_from(*p);
  if (const json* k = optional_field(j, "knowledge")) doc.knowledge = knowledge_from(*k);
  if (const json* g = optional_field(j, "ground_truth")) {
    GroundTruthRecord r;
    if (const json* s = optional_field(*g, "seed")) r.seed = as_uint(*s, "seed");
    r.mapping = mapping_from(field(*g, "mapping"));
    doc.ground_truth = std::move(r);
  }
  return doc;
}

std::string dump_tx(const TxDocument& doc) {
  json j = tx_json(doc.tx);
  if (doc.policy) j["policy"] = policy_json(*doc.policy);
  if (doc.knowledge) j["knowledge"] = knowledge_json(*doc.knowledge);
  if (doc.ground_truth) {
    j["ground_truth"] = {{"seed", doc.ground_truth->seed},
                         {"mapping", mapping_json(doc.ground_truth->mapping)}};
  }
  return j.dump(2) + "\n";
}

TxDocument tx_document(const GroundTruth& gt) {
  TxDocument doc;
  doc.tx = gt.tx;
  doc.policy = gt.policy;
  doc.ground_truth = GroundTruthRecord{gt.seed, gt.true_mapping};
  return doc;
}

Config parse_config(const std::string& text) {
  const json j = parse_json(text);
  Config c;
  c.policy = policy_from(j);
  read_opt(j, "max_inputs_per_user", c.max_inputs_per_user);
  read_opt(j, "max_outputs_per_user", c.max_outputs_per_user);
  read_opt(j, "max_positive_residual_submappings", c.max_positive_residual_submappings);
  read_opt(j, "max_change_outputs_per_user", c.max_change_outputs_per_user);
  if (const json* d = optional_field(j, "common_denominations")) {
    c.common_denominations = amount_list(*d, "common_denominations");
  }
  read_opt(j, "design", c.design);
  read_opt(j, "threads", c.threads);
  return c;
}

std::string dump_config(const Config& c) {
  json j = policy_json(c.policy);
  write_opt(j, "max_inputs_per_user", c.max_inputs_per_user);
  write_opt(j, "max_outputs_per_user", c.max_outputs_per_user);
  write_opt(j, "max_positive_residual_submappings", c.max_positive_residual_submappings);
  write_opt(j, "max_change_outputs_per_user", c.max_change_outputs_per_user);
  if (!c.common_denominations.empty()) j["common_denominations"] = c.common_denominations;
  write_opt(j, "design", c.design);
  write_opt(j, "threads", c.threads);
  return j.dump(2) + "\n";
}

PolicyParams merge_policy(PolicyParams base, const PolicyParams& over) {
  auto take = [](auto& dst, const auto& src) {
    if (src) dst = src;
  };
  take(base.feerate, over.feerate);
  take(base.min_registrable_output, over.min_registrable_output);
  take(base.feerate_error_margin, over.feerate_error_margin);
  take(base.coordination_rate_ppm, over.coordination_rate_ppm);
  take(base.coordination_floor, over.coordination_floor);
  take(base.max_maker_fee, over.max_maker_fee);
  take(base.delta_max, over.delta_max);
  take(base.input_vsize, over.input_vsize);
  take(base.output_vsize, over.output_vsize);
  take(base.standard_denomination, over.standard_denomination);
  return base;
}

Constraints apply_config(Constraints c, const Config& config) {
  if (config.max_inputs_per_user) c.max_inputs_per_user = *config.max_inputs_per_user;
  if (config.max_outputs_per_user) c.max_outputs_per_user = *config.max_outputs_per_user;
  if (config.max_positive_residual_submappings) {
    c.max_positive_residual_submappings = config.max_positive_residual_submappings;
  }
  if (config.max_change_outputs_per_user) {
    c.max_change_outputs_per_user = config.max_change_outputs_per_user;
  }
  if (!config.common_denominations.empty()) c.common_denominations = config.common_denominations;
  return c;
}

EnumerationResult parse_result(const std::string& text) {
  const json j = parse_json(text);
  EnumerationResult r;
  r.txid = as_string(field(j, "txid"), "txid");
  r.design = parse_design(as_string(field(j, "design"), "design"));
  const json& w = field(j, "window");
  r.window = {as_int(field(w, "min"), "min"), as_int(field(w, "max"), "max")};
  const json& layout = field(j, "layout");
  r.layout.inputs = classes_from(field(layout, "inputs"), "inputs");
  r.layout.outputs = classes_from(field(layout, "outputs"), "outputs");
  for (const auto& s : as_array(field(j, "submappings"), "submappings")) {
    SubSignature sig;
    sig.in_counts = counts_from(field(s, "in_counts"), r.layout.inputs.size(), "in_counts");
    sig.out_counts = counts_from(field(s, "out_counts"), r.layout.outputs.size(), "out_counts");
    sig.residual = as_int(field(s, "residual"), "residual");
    r.submappings.push_back(std::move(sig));
  }
  for (const auto& m : as_array(field(j, "mappings"), "mappings")) {
    NumericMapping nm;
    for (const auto& s : as_array(field(m, "submappings"), "submappings")) {
      const auto idx = as_uint(s, "submappings");
      if (idx >= r.submappings.size()) parse_fail("mapping references a missing sub-mapping");
      nm.submappings.push_back(static_cast<std::uint32_t>(idx));
    }
    nm.multiplicity = as_big(field(m, "multiplicity"), "multiplicity");
    r.mappings.push_back(std::move(nm));
  }
  r.total_concrete = as_big(field(j, "total_concrete"), "total_concrete");
  r.submapping_count = as_uint(field(j, "submapping_count"), "submapping_count");
  if (const json* st = optional_field(j, "stats")) {
    r.stats.nodes_visited = as_uint(field(*st, "nodes_visited"), "nodes_visited");
    r.stats.wall_seconds = as_double(field(*st, "wall_seconds"), "wall_seconds");
    r.stats.worker_count = static_cast<unsigned>(as_uint(field(*st, "worker_count"), "worker_count"));
  }
  // Cross-check the counts so a tampered file cannot feed metrics garbage.
  BigCount sum = 0;
  for (const auto& nm : r.mappings) {
    std::vector<const SubSignature*> parts;
    for (auto s : nm.submappings) parts.push_back(&r.submappings[s]);
    try {
      if (multiplicity_of(r.layout, parts) != nm.multiplicity) {
        parse_fail("mapping multiplicity does not match its signatures");
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kParseError) throw;
      parse_fail(std::string("inconsistent mapping: ") + e.what());
    }
    sum += nm.multiplicity;
  }
  if (sum != r.total_concrete) parse_fail("total_concrete does not match the mappings");
  return r;
}

std::string dump_result(const EnumerationResult& r, const ResultDumpOptions& opt) {
  json j;
  j["format"] = "cjmap-result";
  j["txid"] = r.txid;
  j["design"] = std::string(design_name(r.design));
  j["window"] = {{"min", r.window.min}, {"max", r.window.max}};
  j["layout"] = {{"inputs", classes_json(r.layout.inputs)},
                 {"outputs", classes_json(r.layout.outputs)}};
  json subs = json::array();
  for (const auto& s : r.submappings) {
    subs.push_back({{"in_counts", s.in_counts},
                    {"out_counts", s.out_counts},
                    {"residual", s.residual},
                    {"inputs", input_values(r.layout, s)},
                    {"outputs", output_values(r.layout, s)}});
  }
  j["submappings"] = std::move(subs);
  json maps = json::array();
  for (const auto& m : r.mappings) {
    maps.push_back({{"submappings", m.submappings}, {"multiplicity", big_string(m.multiplicity)}});
  }
  j["mappings"] = std::move(maps);
  j["numeric_count"] = r.mappings.size();
  j["total_concrete"] = big_string(r.total_concrete);
  j["log2_total"] = r.total_concrete > 0 ? log2_count(r.total_concrete) : 0.0;
  j["submapping_count"] = r.submapping_count;
  if (opt.stats) {
    j["stats"] = {{"nodes_visited", r.stats.nodes_visited},
                  {"wall_seconds", r.stats.wall_seconds},
                  {"worker_count", r.stats.worker_count}};
  }
  if (opt.concrete) {
    json all = json::array();
    for (const auto& m : expand_concrete(r, opt.concrete_cap)) all.push_back(mapping_json(m));
    j["concrete"] = std::move(all);
  }
  return j.dump(2) + "\n";
}

WeightTable parse_weights(const std::string& text) {
  const json j = parse_json(text);
  WeightTable w;
  if (const json* d = optional_field(j, "default_weight")) w.default_weight = as_double(*d, "default_weight");
  if (const json* es = optional_field(j, "entries")) {
    for (const auto& e : as_array(*es, "entries")) {
      SignatureKey key{amount_list(field(e, "inputs"), "inputs"),
                       amount_list(field(e, "outputs"), "outputs")};
      std::sort(key.inputs.begin(), key.inputs.end());
      std::sort(key.outputs.begin(), key.outputs.end());
      const double v = as_double(field(e, "weight"), "weight");
      if (!(v >= 0) || std::isinf(v)) parse_fail("weights must be finite and non-negative");
      w.entries[key] = v;
    }
  }
  if (!(w.default_weight >= 0) || std::isinf(w.default_weight)) {
    parse_fail("default_weight must be finite and non-negative");
  }
  return w;
}

std::string dump_weights(const WeightTable& w) {
  json j;
  j["default_weight"] = w.default_weight;
  j["entries"] = json::array();
  for (const auto& [k, v] : w.entries) {
    j["entries"].push_back({{"inputs", k.inputs}, {"outputs", k.outputs}, {"weight", v}});
  }
  return j.dump(2) + "\n";
}

TxGraph parse_graph(const std::string& text) {
  const json j = parse_json(text);
  TxGraph g;
  for (const auto& t : as_array(field(j, "transactions"), "transactions")) {
    GraphTx tx;
    tx.txid = as_string(field(t, "txid"), "txid");
    tx.timestamp = as_int(field(t, "timestamp"), "timestamp");
    read_opt(t, "height", tx.height);
    for (const auto& in : as_array(field(t, "inputs"), "inputs")) {
      GraphInput gi;
      gi.prev.txid = as_string(field(in, "txid"), "txid");
      const auto idx = as_uint(field(in, "index"), "index");
      if (idx > std::numeric_limits<std::uint32_t>::max()) parse_fail("output index out of range");
      gi.prev.index = static_cast<std::uint32_t>(idx);
      read_opt(in, "value", gi.value);
      read_opt(in, "address", gi.address);
      tx.inputs.push_back(std::move(gi));
    }
    for (const auto& out : as_array(field(t, "outputs"), "outputs")) {
      GraphOutput go;
      go.value = as_int(field(out, "value"), "value");
      read_opt(out, "address", go.address);
      tx.outputs.push_back(std::move(go));
    }
    g.transactions.push_back(std::move(tx));
  }
  if (const json* c = optional_field(j, "coinjoins")) {
    for (const auto& id : string_list(*c, "coinjoins")) g.coinjoin_ids.insert(id);
  }
  return g;
}

std::string dump_graph(const TxGraph& g) {
  json j;
  j["transactions"] = json::array();
  for (const auto& t : g.transactions) {
    json tj{{"txid", t.txid}, {"timestamp", t.timestamp}};
    write_opt(tj, "height", t.height);
    tj["inputs"] = json::array();
    for (const auto& in : t.inputs) {
      json ij{{"txid", in.prev.txid}, {"index", in.prev.index}};
      write_opt(ij, "value", in.value);
      write_opt(ij, "address", in.address);
      tj["inputs"].push_back(std::move(ij));
    }
    tj["outputs"] = json::array();
    for (const auto& out : t.outputs) {
      json oj{{"value", out.value}};
      write_opt(oj, "address", out.address);
      tj["outputs"].push_back(std::move(oj));
    }
    j["transactions"].push_back(std::move(tj));
  }
  j["coinjoins"] = std::vector<std::string>(g.coinjoin_ids.begin(), g.coinjoin_ids.end());
  return j.dump(2) + "\n";
}

LinkedDocument parse_linked(const std::string& text, const std::string& base_dir) {
  const json j = parse_json(text);
  LinkedDocument doc;
  for (const auto& m : as_array(field(j, "members"), "members")) {
    TxDocument member;
    if (m.is_string()) {
      std::filesystem::path p(m.get<std::string>());
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      member = parse_tx(read_file(p.string()));
    } else {
      member = parse_tx(m.dump());
    }
    if (member.policy) doc.params[member.tx.txid] = *member.policy;
    doc.set.txs.push_back(std::move(member.tx));
  }
  if (const json* ls = optional_field(j, "links")) {
    for (const auto& l : as_array(*ls, "links")) {
      doc.set.links.push_back({as_string(field(l, "from"), "from"), as_string(field(l, "to"), "to"),
                               as_int(field(l, "capacity"), "capacity")});
    }
  }
  if (const json* cs = optional_field(j, "internal_coins")) {
    for (const auto& c : as_array(*cs, "internal_coins")) {
      doc.set.internal_coins.push_back(
          {as_string(field(c, "from"), "from"), as_string(field(c, "output"), "output"),
           as_string(field(c, "to"), "to"), as_string(field(c, "input"), "input")});
    }
  }
  return doc;
}

std::string dump_linked(const LinkedDocument& doc) {
  json j;
  j["members"] = json::array();
  for (const auto& tx : doc.set.txs) {
    json m = tx_json(tx);
    auto it = doc.params.find(tx.txid);
    if (it != doc.params.end()) m["policy"] = policy_json(it->second);
    j["members"].push_back(std::move(m));
  }
  j["links"] = json::array();
  for (const auto& l : doc.set.links) {
    j["links"].push_back({{"from", l.from_txid}, {"to", l.to_txid}, {"capacity", l.capacity}});
  }
  j["internal_coins"] = json::array();
  for (const auto& c : doc.set.internal_coins) {
    j["internal_coins"].push_back(
        {{"from", c.from_txid}, {"output", c.output_id}, {"to", c.to_txid}, {"input", c.input_id}});
  }
  return j.dump(2) + "\n";
}

std::string dump_metrics(const MetricsReport& r) {
  json j;
  j["entropy_bits"] = r.entropy_bits;
  j["mapping_count"] = big_string(r.mapping_count);
  j["submapping_probability"] = json::array();
  for (const auto& [k, p] : r.submapping_probability) {
    j["submapping_probability"].push_back({{"inputs", k.inputs}, {"outputs", k.outputs}, {"p", p}});
  }
  json links = json::array();
  for (std::size_t i = 0; i < r.links.input_ids.size(); ++i) {
    for (std::size_t o = 0; o < r.links.output_ids.size(); ++o) {
      links.push_back({{"input", r.links.input_ids[i]},
                       {"output", r.links.output_ids[o]},
                       {"p", r.links.at(i, o)}});
    }
  }
  j["links"] = std::move(links);
  j["max_links"] = json::array();
  for (const auto& [ins, o, p] : r.max_links) {
    j["max_links"].push_back({{"inputs", ins}, {"output", o}, {"p", p}});
  }
  return j.dump(2) + "\n";
}

std::string links_csv(const LinkMatrix& links) {
  std::string out = "input";
  for (const auto& o : links.output_ids) out += "," + csv_field(o);
  out += "\n";
  for (std::size_t i = 0; i < links.input_ids.size(); ++i) {
    out += csv_field(links.input_ids[i]);
    for (std::size_t o = 0; o < links.output_ids.size(); ++o) out += "," + real(links.at(i, o));
    out += "\n";
  }
  return out;
}

std::string format_horizon(double days) {
  if (std::isinf(days)) return "inf";
  return real(days);
}

double parse_horizon(const std::string& text) {
  if (text == "inf" || text == "infinity") return kInfiniteHorizon;
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || std::isnan(v) || v < 0) {
    throw Error(ErrorCode::kParseError, "horizon must be a non-negative number or 'inf', got '" + text + "'");
  }
  return v;
}

std::string dump_loss(const LossReport& r) {
  json j;
  json hs = json::array();
  for (double d : r.horizons) hs.push_back(real_json(d));
  j["horizons"] = hs;
  auto row = [](const std::vector<double>& v) { return json(v); };
  j["overall"] = {{"outputs", r.overall.outputs}, {"loss", row(r.overall.loss)}};
  j["per_tx"] = json::array();
  for (const auto& t : r.per_tx) {
    j["per_tx"].push_back({{"txid", t.txid}, {"outputs", t.outputs}, {"loss", row(t.loss)}});
  }
  j["per_bucket"] = json::array();
  for (const auto& b : r.per_bucket) {
    j["per_bucket"].push_back({{"bucket", b.bucket}, {"outputs", b.outputs}, {"loss", row(b.loss)}});
  }
  j["per_tx_bucket"] = json::array();
  for (const auto& b : r.per_tx_bucket) {
    j["per_tx_bucket"].push_back(
        {{"txid", b.txid}, {"bucket", b.bucket}, {"outputs", b.outputs}, {"loss", row(b.loss)}});
  }
  j["per_output"] = json::array();
  for (const auto& o : r.per_output) {
    j["per_output"].push_back({{"txid", o.output.txid},
                               {"index", o.output.index},
                               {"value", o.value},
                               {"loss", row(o.loss)}});
  }
  return j.dump(2) + "\n";
}

std::string loss_tx_csv(const LossReport& r) {
  std::string out = "txid,horizon,loss\n";
  for (const auto& t : r.per_tx) {
    for (std::size_t h = 0; h < r.horizons.size(); ++h) {
      out += csv_field(t.txid) + "," + format_horizon(r.horizons[h]) + "," + real(t.loss[h]) + "\n";
    }
  }
  for (std::size_t h = 0; h < r.horizons.size(); ++h) {
    out += "*," + format_horizon(r.horizons[h]) + "," + real(r.overall.loss[h]) + "\n";
  }
  return out;
}

std::string loss_bucket_csv(const LossReport& r) {
  std::string out = "txid,bucket,outputs,horizon,loss\n";
  auto emit = [&](const std::string& txid, const BucketLoss& b) {
    for (std::size_t h = 0; h < r.horizons.size(); ++h) {
      out += csv_field(txid) + "," + csv_field(b.bucket) + "," + std::to_string(b.outputs) + "," +
             format_horizon(r.horizons[h]) + "," + real(b.loss[h]) + "\n";
    }
  };
  for (const auto& b : r.per_tx_bucket) emit(b.txid, b);
  for (const auto& b : r.per_bucket) emit("*", b);
  return out;
}

GeneratorParams parse_generator_params(const std::string& text) {
  const json j = parse_json(text);
  GeneratorParams p;
  auto size_field = [&](const char* key, std::size_t& out) {
    if (const json* v = optional_field(j, key)) out = as_uint(*v, key);
  };
  auto amount_field = [&](const char* key, Amount& out) {
    if (const json* v = optional_field(j, key)) out = as_int(*v, key);
  };
  size_field("min_inputs_per_user", p.min_inputs_per_user);
  size_field("max_inputs_per_user", p.max_inputs_per_user);
  size_field("max_outputs_per_user", p.max_outputs_per_user);
  amount_field("ladder_base", p.ladder_base);
  size_field("ladder_steps", p.ladder_steps);
  amount_field("mining_feerate", p.mining_feerate);
  amount_field("pool_value", p.pool_value);
  amount_field("standard_denomination", p.standard_denomination);
  if (const json* v = optional_field(j, "remix_probability")) {
    p.remix_probability = as_double(*v, "remix_probability");
  }
  amount_field("max_maker_fee", p.max_maker_fee);
  size_field("max_attempts", p.max_attempts);
  return p;
}

std::string dump_generator_params(const GeneratorParams& p) {
  json j{{"min_inputs_per_user", p.min_inputs_per_user},
         {"max_inputs_per_user", p.max_inputs_per_user},
         {"max_outputs_per_user", p.max_outputs_per_user},
         {"ladder_base", p.ladder_base},
         {"ladder_steps", p.ladder_steps},
         {"mining_feerate", p.mining_feerate},
         {"pool_value", p.pool_value},
         {"standard_denomination", p.standard_denomination},
         {"remix_probability", p.remix_probability},
         {"max_maker_fee", p.max_maker_fee},
         {"max_attempts", p.max_attempts}};
  return j.dump(2) + "\n";
}

std::string trend_csv(const std::vector<TrendRow>& rows) {
  std::string out = "size,numeric_mappings,concrete_mappings\n";
  for (const auto& r : rows) {
    out += std::to_string(r.size) + "," + std::to_string(r.numeric_mappings) + "," +
           big_string(r.concrete_mappings) + "\n";
  }
  return out;
}

std::vector<TrendPoint> parse_trend_csv(const std::string& text) {
  std::vector<TrendPoint> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string a, b;
    std::getline(ls, a, ',');
    std::getline(ls, b, ',');
    double size = 0, count = 0;
    std::size_t ua = 0, ub = 0;
    try {
      size = std::stod(a, &ua);
      count = std::stod(b, &ub);
    } catch (const std::exception&) {
      ua = 0;
    }
    if (ua == 0 || ua != a.size() || ub != b.size()) {
      if (lineno == 1) continue;  // header
      parse_fail("trend CSV line " + std::to_string(lineno) + " is not 'size,count'");
    }
    if (!(count >= 1)) parse_fail("trend CSV line " + std::to_string(lineno) + ": count must be >= 1");
    out.push_back({size, std::log2(count)});
  }
  return out;
}

std::string dump_fit(const TrendFit& fit, std::optional<double> predict_size, double loss) {
  json j{{"slope", fit.slope},
         {"intercept", fit.intercept},
         {"r_squared", fit.r_squared},
         {"points", fit.points}};
  if (predict_size) {
    const double log2_count = fit.predict(*predict_size, loss);
    j["prediction"] = {{"size", *predict_size},
                       {"loss", loss},
                       {"effective_size", *predict_size * (1 - loss)},
                       {"log2_count", log2_count}};
  }
  return j.dump(2) + "\n";
}

}  // namespace cjmap
