#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cjmap/cjmap.h"

using nlohmann::json;

namespace {

struct Failure {
  std::string name;
  std::string message;
};

struct Globals {
  unsigned threads = 0;
  std::uint64_t seed = 0;
  bool quiet = false;
  std::string config;
};

std::string slurp(const std::string& path) {
  if (path == "-") {
    return std::string(std::istreambuf_iterator<char>(std::cin), {});
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{"IoError", "cannot open '" + path + "' for reading"};
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Failure{"IoError", "cannot open '" + path + "' for writing"};
  out << text;
  if (!out.flush()) throw Failure{"IoError", "failed writing '" + path + "'"};
}

std::string dirname_of(const std::string& path) {
  auto slash = path.find_last_of('/');
  return slash == std::string::npos ? "." : path.substr(0, slash == 0 ? 1 : slash);
}

// Owns a context and converts statuses into Failures.
class Api {
 public:
  explicit Api(unsigned threads) : ctx_(cjmap_context_new()) {
    if (!ctx_) throw Failure{"InternalError", "cannot allocate context"};
    cjmap_context_set_threads(ctx_, threads);
  }
  ~Api() { cjmap_context_free(ctx_); }
  Api(const Api&) = delete;
  Api& operator=(const Api&) = delete;

  cjmap_context* ctx() const { return ctx_; }

  void check(cjmap_status status) const {
    if (status != CJMAP_OK) throw Failure{cjmap_status_name(status), cjmap_last_error(ctx_)};
  }

 private:
  cjmap_context* ctx_;
};

// malloc'd string from the library.
class CString {
 public:
  CString() = default;
  ~CString() { cjmap_string_free(p_); }
  CString(const CString&) = delete;
  CString& operator=(const CString&) = delete;
  char** out() { return &p_; }
  std::string str() const { return p_ ? std::string(p_) : std::string(); }

 private:
  char* p_ = nullptr;
};

class Result {
 public:
  Result() = default;
  ~Result() { cjmap_result_free(r_); }
  Result(const Result&) = delete;
  Result& operator=(const Result&) = delete;
  cjmap_result** out() { return &r_; }
  const cjmap_result* get() const { return r_; }

 private:
  cjmap_result* r_ = nullptr;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

// "6..16", "6..16:2" or "6,8,10".
std::vector<std::uint64_t> parse_sizes(const std::string& spec) {
  std::vector<std::uint64_t> out;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw Failure{"InvalidArgument", "bad size '" + s + "'"};
    return static_cast<std::uint64_t>(v);
  };
  auto dots = spec.find("..");
  if (dots != std::string::npos) {
    std::string rest = spec.substr(dots + 2);
    std::uint64_t step = 1;
    if (auto colon = rest.find(':'); colon != std::string::npos) {
      step = number(rest.substr(colon + 1));
      rest = rest.substr(0, colon);
    }
    const std::uint64_t lo = number(spec.substr(0, dots)), hi = number(rest);
    if (step == 0 || lo > hi) throw Failure{"InvalidArgument", "bad size range '" + spec + "'"};
    for (std::uint64_t s = lo; s <= hi; s += step) out.push_back(s);
  } else {
    for (const auto& s : split(spec, ',')) out.push_back(number(s));
  }
  if (out.empty()) throw Failure{"InvalidArgument", "no sizes given"};
  return out;
}

void note(const Globals& g, const std::string& line) {
  if (!g.quiet) std::cerr << line << "\n";
}

// Policy and constraint options: config file first, flags override.
struct PolicyFlags {
  std::optional<std::string> design;
  std::optional<long long> feerate;
  std::optional<long long> delta_max;
  std::optional<long long> coord_ppm;
  std::optional<unsigned long long> submapping_cap;
  std::optional<unsigned long long> mapping_cap;
  bool no_knowledge = false;

  void add(CLI::App* app, bool with_design = true) {
    if (with_design) app->add_option("--design", design, "Coinjoin design (overrides the file)");
    app->add_option("--feerate", feerate, "Mining feerate, sat/vbyte");
    app->add_option("--delta-max", delta_max, "Upper residual bound override, sat");
    app->add_option("--coord-ppm", coord_ppm, "Coordination fee rate, parts per million");
    app->add_option("--submapping-cap", submapping_cap, "Abort past this many sub-mappings");
    app->add_option("--mapping-cap", mapping_cap, "Abort past this many numeric mappings");
  }

  std::string options(const Globals& g) const {
    json j = json::object();
    if (!g.config.empty()) {
      try {
        j = json::parse(slurp(g.config));
      } catch (const json::exception& e) {
        throw Failure{"ParseError", "config '" + g.config + "': " + e.what()};
      }
      if (!j.is_object()) throw Failure{"ParseError", "config must be a JSON object"};
      j.erase("threads");
    }
    if (design) j["design"] = *design;
    if (feerate) j["feerate"] = *feerate;
    if (delta_max) j["delta_max"] = *delta_max;
    if (coord_ppm) j["coordination_rate_ppm"] = *coord_ppm;
    if (submapping_cap) j["submapping_cap"] = *submapping_cap;
    if (mapping_cap) j["mapping_cap"] = *mapping_cap;
    if (no_knowledge) j["apply_knowledge"] = false;
    return j.dump();
  }
};

void summarize(const Globals& g, const Api& api, const Result& r, const std::string& what) {
  if (g.quiet) return;
  CString total;
  api.check(cjmap_result_total(api.ctx(), r.get(), total.out()));
  std::ostringstream os;
  os << what << ": " << cjmap_result_numeric_count(r.get()) << " numeric mappings, "
     << total.str() << " concrete (log2 " << cjmap_result_log2_total(r.get()) << ")";
  note(g, os.str());
}

}  // namespace

int main(int argc, char** argv) {
  Globals g;
  if (const char* env = std::getenv("CJMAP_THREADS")) {
    try {
      g.threads = static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      std::cerr << "error: InvalidArgument: CJMAP_THREADS must be a non-negative integer\n";
      return 2;
    }
  }

  CLI::App app{"Coinjoin mapping enumeration and privacy metrics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cjmap_version()));
  auto* threads_opt =
      app.add_option("--threads", g.threads, "Worker threads, 0 = all cores (env CJMAP_THREADS)");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_flag("--quiet,-q", g.quiet, "Suppress progress notes on stderr");
  app.add_option("--config", g.config, "Config file: policy fields plus constraints");
  // Globals are accepted after the subcommand too.
  app.fallthrough();

  // enumerate
  auto* en = app.add_subcommand("enumerate", "Enumerate all mappings of a coinjoin");
  std::string en_tx = "-", en_linked, en_out;
  bool en_concrete = false, en_numeric = false, en_stats = false, en_require_truth = false;
  PolicyFlags en_flags;
  en->add_option("--tx", en_tx, "Transaction file ('-' = stdin)");
  en->add_option("--linked", en_linked, "Linked-set file (enumerate several coinjoins jointly)");
  en->add_option("--out", en_out, "Result file (default stdout)");
  en->add_flag("--numeric", en_numeric, "Numeric mappings only (default)");
  en->add_flag("--concrete", en_concrete, "Also expand concrete mappings");
  en->add_flag("--stats", en_stats, "Include the wall-clock stats block");
  en->add_flag("--no-knowledge", en_flags.no_knowledge, "Ignore knowledge in the tx file");
  en->add_flag("--require-truth", en_require_truth,
               "Fail unless the file's ground truth is among the mappings");
  en_flags.add(en);

  // linked
  auto* li = app.add_subcommand("linked", "Enumerate a set of linked coinjoins jointly");
  std::string li_set, li_out;
  bool li_stats = false;
  PolicyFlags li_flags;
  li->add_option("--set", li_set, "Linked-set file")->required();
  li->add_option("--out", li_out, "Result file (default stdout)");
  li->add_flag("--stats", li_stats, "Include the wall-clock stats block");
  li_flags.add(li, false);

  // metrics
  auto* me = app.add_subcommand("metrics", "Entropy, link probabilities and sub-mapping odds");
  std::string me_mappings, me_tx, me_weights, me_out, me_csv;
  std::vector<std::string> me_pairs, me_users;
  PolicyFlags me_flags;
  auto* me_src = me->add_option("--mappings", me_mappings, "Result file from enumerate");
  me->add_option("--tx", me_tx, "Transaction file (enumerated first)")->excludes(me_src);
  me->add_option("--weights", me_weights, "Sub-mapping weight file");
  me->add_option("--pairs", me_pairs, "Input,output pairs to print")->allow_extra_args(false);
  me->add_option("--user-inputs", me_users, "Comma-separated input ids of one user")
      ->allow_extra_args(false);
  me->add_option("--out", me_out, "Report file (default stdout)");
  me->add_option("--links-csv", me_csv, "Link matrix CSV");
  me_flags.add(me);

  // anonloss
  auto* an = app.add_subcommand("anonloss", "Anonymity-set loss from post-mix consolidations");
  std::string an_graph, an_days = "1,7,31,365,inf", an_buckets = "default", an_clock = "timestamp";
  std::string an_out, an_csv, an_bucket_csv;
  bool an_detect = false;
  std::vector<std::string> an_exclude;
  an->add_option("--graph", an_graph, "Transaction graph file")->required();
  an->add_option("--days", an_days, "Horizons in days, comma-separated, 'inf' allowed");
  an->add_option("--buckets", an_buckets,
                 "default | wasabi1 | whirlpool | comma-separated edges in sat");
  an->add_option("--clock", an_clock, "timestamp | height")
      ->check(CLI::IsMember({"timestamp", "height"}));
  an->add_flag("--detect", an_detect, "Also flag coinjoins with the structural screen");
  an->add_option("--exclude", an_exclude, "Txids never treated as coinjoins");
  an->add_option("--out", an_out, "JSON report");
  an->add_option("--csv", an_csv, "Per-tx CSV (txid,horizon,loss); default stdout");
  an->add_option("--bucket-csv", an_bucket_csv, "Per-bucket CSV");

  // gen
  auto* ge = app.add_subcommand("gen", "Generate coinjoins with known ground truth");
  std::string ge_design = "generic", ge_out, ge_params;
  std::uint64_t ge_users = 3;
  ge->add_option("--design", ge_design, "Coinjoin design");
  ge->add_option("--users", ge_users, "Number of users");
  ge->add_option("--params", ge_params, "Generator parameter file");
  ge->add_option("--out", ge_out, "Transaction file (default stdout)");
  auto* tr = ge->add_subcommand("trend", "Numeric-mapping counts over coinjoin sizes");
  std::string tr_sizes = "6..16", tr_out;
  std::uint64_t tr_per_size = 10;
  tr->add_option("--sizes", tr_sizes, "Sizes |I|+|O|: 6..16, 6..16:2 or 6,8,10");
  tr->add_option("--per-size", tr_per_size, "Instances per size");
  tr->add_option("--out", tr_out, "CSV file (default stdout)");

  // fit
  auto* fi = app.add_subcommand("fit", "Fit log2(count) against size");
  std::string fi_csv = "-", fi_out;
  std::optional<double> fi_predict;
  double fi_loss = 0;
  bool fi_raw = false;
  fi->add_option("--csv", fi_csv, "Trend CSV ('-' = stdin)");
  fi->add_option("--predict", fi_predict, "Evaluate the line at this size");
  fi->add_option("--loss", fi_loss, "Anonymity-set loss fraction shrinking the size")
      ->check(CLI::Range(0.0, 1.0));
  fi->add_flag("--raw", fi_raw, "Fit every row instead of per-size means");
  fi->add_option("--out", fi_out, "Fit report (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    // --threads beats CJMAP_THREADS, which beats the config file.
    if (!threads_opt->count() && !std::getenv("CJMAP_THREADS") && !g.config.empty()) {
      json cfg;
      try {
        cfg = json::parse(slurp(g.config));
      } catch (const json::exception& e) {
        throw Failure{"ParseError", "config '" + g.config + "': " + e.what()};
      }
      if (cfg.is_object() && cfg.contains("threads")) {
        if (!cfg["threads"].is_number_unsigned()) {
          throw Failure{"ParseError", "config 'threads' must be a non-negative integer"};
        }
        g.threads = cfg["threads"].get<unsigned>();
      }
    }
    Api api(g.threads);
    if (*en || *li) {
      const bool linked = *li || !en_linked.empty();
      const std::string set_path = *li ? li_set : en_linked;
      const PolicyFlags& flags = *li ? li_flags : en_flags;
      Result r;
      std::string tx_text;
      if (linked) {
        api.check(cjmap_enumerate_linked(api.ctx(), slurp(set_path).c_str(),
                                         dirname_of(set_path).c_str(),
                                         flags.options(g).c_str(), r.out()));
      } else {
        tx_text = slurp(en_tx);
        api.check(cjmap_enumerate(api.ctx(), tx_text.c_str(), flags.options(g).c_str(), r.out()));
      }
      int dump = 0;
      if (*en && en_concrete && !en_numeric) dump |= CJMAP_DUMP_CONCRETE;
      if ((*en && en_stats) || (*li && li_stats)) dump |= CJMAP_DUMP_STATS;
      CString text;
      api.check(cjmap_result_dump(api.ctx(), r.get(), dump, text.out()));
      emit(*li ? li_out : en_out, text.str());
      summarize(g, api, r, linked ? set_path : en_tx);
      if (!linked) {
        int has_truth = 0;
        std::int64_t index = -1;
        api.check(cjmap_result_truth_index(api.ctx(), r.get(), tx_text.c_str(), &has_truth, &index));
        if (has_truth) {
          note(g, index >= 0 ? "ground truth: numeric mapping #" + std::to_string(index)
                             : "ground truth: NOT among the enumerated mappings");
          if (index < 0 && en_require_truth) {
            throw Failure{"InvalidArgument", "ground truth missing from the enumeration"};
          }
        } else if (en_require_truth) {
          throw Failure{"InvalidArgument", "transaction file carries no ground truth"};
        }
      }
    } else if (*me) {
      Result r;
      if (!me_tx.empty()) {
        api.check(cjmap_enumerate(api.ctx(), slurp(me_tx).c_str(),
                                  me_flags.options(g).c_str(), r.out()));
      } else {
        api.check(cjmap_result_load(api.ctx(), slurp(me_mappings.empty() ? "-" : me_mappings).c_str(),
                                    r.out()));
      }
      std::string weights = me_weights.empty() ? "" : slurp(me_weights);
      json users = json::array();
      for (const auto& u : me_users) users.push_back(split(u, ','));
      CString report, csv;
      api.check(cjmap_metrics(api.ctx(), r.get(), weights.empty() ? nullptr : weights.c_str(),
                              users.dump().c_str(), report.out(),
                              me_csv.empty() ? nullptr : csv.out()));
      if (!me_csv.empty()) emit(me_csv, csv.str());
      if (!me_pairs.empty()) {
        std::ostringstream os;
        os.precision(17);
        for (const auto& pair : me_pairs) {
          auto ids = split(pair, ',');
          if (ids.size() != 2) throw Failure{"InvalidArgument", "pair must be 'input,output': " + pair};
          double p = 0;
          api.check(cjmap_link_probability(api.ctx(), r.get(),
                                           weights.empty() ? nullptr : weights.c_str(),
                                           ids[0].c_str(), ids[1].c_str(), &p));
          os << "p(" << ids[0] << ", " << ids[1] << ") = " << p << "\n";
        }
        // Pairs share stdout only when the report goes to a file.
        (me_out.empty() ? std::cerr : std::cout) << os.str();
      }
      emit(me_out, report.str());
    } else if (*an) {
      json opts;
      opts["horizons"] = split(an_days, ',');
      bool named = an_buckets == "default" || an_buckets == "wasabi1" || an_buckets == "whirlpool";
      if (named) {
        opts["buckets"] = an_buckets;
      } else {
        json edges = json::array();
        for (const auto& e : split(an_buckets, ',')) {
          try {
            edges.push_back(std::stoll(e));
          } catch (const std::exception&) {
            throw Failure{"InvalidArgument", "unknown bucket set '" + an_buckets + "'"};
          }
        }
        opts["buckets"] = edges;
      }
      opts["clock"] = an_clock;
      opts["detect"] = an_detect;
      opts["exclude"] = an_exclude;
      CString report, tx_csv, bucket_csv;
      api.check(cjmap_anonloss(api.ctx(), slurp(an_graph).c_str(), opts.dump().c_str(),
                               report.out(), tx_csv.out(), bucket_csv.out()));
      if (!an_out.empty()) emit(an_out, report.str());
      if (!an_bucket_csv.empty()) emit(an_bucket_csv, bucket_csv.str());
      if (!an_csv.empty() || an_out.empty()) emit(an_csv, tx_csv.str());
    } else if (*ge) {
      std::string params = ge_params.empty() ? "" : slurp(ge_params);
      CString out;
      if (*tr) {
        auto sizes = parse_sizes(tr_sizes);
        api.check(cjmap_trend(api.ctx(), ge_design.c_str(), sizes.data(), sizes.size(),
                              tr_per_size, g.seed, params.empty() ? nullptr : params.c_str(),
                              out.out()));
        emit(tr_out, out.str());
        note(g, "trend: " + std::to_string(sizes.size() * tr_per_size) + " instances");
      } else {
        api.check(cjmap_generate(api.ctx(), ge_design.c_str(), ge_users, g.seed,
                                 params.empty() ? nullptr : params.c_str(), out.out()));
        emit(ge_out, out.str());
      }
    } else if (*fi) {
      CString out;
      api.check(cjmap_fit(api.ctx(), slurp(fi_csv).c_str(), fi_raw ? 0 : 1,
                          fi_predict ? *fi_predict : -1.0, fi_loss, out.out()));
      emit(fi_out, out.str());
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.name << ": " << f.message << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: InternalError: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
