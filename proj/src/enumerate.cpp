#include "cjmap/enumerate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <thread>
#include <unordered_set>

#include "cjmap/error.hpp"

namespace cjmap {

Constraints default_constraints(Design design) {
  Constraints c;
  switch (design) {
    case Design::kWhirlpool:
      c.max_inputs_per_user = 1;
      c.max_outputs_per_user = 1;
      break;
    case Design::kJoinMarket:
      c.max_positive_residual_submappings = 1;
      break;
    default:
      break;
  }
  return c;
}

void validate_constraints(const Constraints& c) {
  if (c.max_inputs_per_user < 1 || c.max_outputs_per_user < 1 ||
      (c.max_positive_residual_submappings &&
       *c.max_positive_residual_submappings < 1) ||
      (c.max_change_outputs_per_user && *c.max_change_outputs_per_user < 1)) {
    throw Error(ErrorCode::kInvalidArgument, "constraint limits must be >= 1");
  }
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

namespace {

// Class index of a pinned coin, tagged by side.
struct ClassRef {
  bool input;
  std::size_t index;
};

std::optional<ClassRef> find_pinned(const ClassLayout& layout,
                                    const CoinKey& key) {
  const auto& classes =
      key.side == Side::kInput ? layout.inputs : layout.outputs;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i].pinned == key.id) {
      return ClassRef{key.side == Side::kInput, i};
    }
  }
  return std::nullopt;
}

struct OutputVector {
  Amount sum;
  std::uint32_t offset;  // into the flattened count store
};

}  // namespace

SubmappingSet enumerate_submappings(const NormalizedCoinjoin& ntx,
                                    const Constraints& constraints,
                                    const EnumerateOptions& options) {
  validate_constraints(constraints);
  std::vector<std::string> pinned_in, pinned_out;
  for (const auto& [a, b] : ntx.distinct_owner_pairs) {
    for (const CoinKey* k : {&a, &b}) {
      (k->side == Side::kInput ? pinned_in : pinned_out).push_back(k->id);
    }
  }

  SubmappingSet set;
  set.layout = build_layout(ntx.base, pinned_in, pinned_out);
  set.window = ntx.policy.window();
  const auto& in_classes = set.layout.inputs;
  const auto& out_classes = set.layout.outputs;
  const std::size_t ni = in_classes.size();
  const std::size_t no = out_classes.size();

  std::vector<std::pair<ClassRef, ClassRef>> apart;
  for (const auto& [a, b] : ntx.distinct_owner_pairs) {
    auto ca = find_pinned(set.layout, a);
    auto cb = find_pinned(set.layout, b);
    if (ca && cb) apart.emplace_back(*ca, *cb);
  }

  std::vector<char> is_change(no, 0);
  if (constraints.max_change_outputs_per_user) {
    std::set<Amount> denoms(constraints.common_denominations.begin(),
                            constraints.common_denominations.end());
    const Amount out_fee = ntx.policy.mining_feerate * ntx.policy.output_vsize;
    for (std::size_t b = 0; b < no; ++b) {
      is_change[b] = denoms.count(out_classes[b].value - out_fee) ? 0 : 1;
    }
  }

  // Every admissible output multiset, sorted by value sum.
  std::vector<std::uint16_t> out_store;
  std::vector<OutputVector> outs;
  {
    std::vector<std::uint16_t> counts(no, 0);
    auto rec = [&](auto&& self, std::size_t b, Amount sum, std::size_t card,
                   std::size_t change) -> void {
      if (b == no) {
        if (outs.size() >= options.submapping_cap) {
          throw Error(ErrorCode::kSubmappingExplosion,
                      "output subset space exceeds the sub-mapping cap; "
                      "apply knowledge preprocessing to shrink the instance");
        }
        outs.push_back({sum, static_cast<std::uint32_t>(out_store.size())});
        out_store.insert(out_store.end(), counts.begin(), counts.end());
        return;
      }
      const std::size_t avail = out_classes[b].count();
      for (std::size_t k = 0; k <= avail; ++k) {
        if (card + k > constraints.max_outputs_per_user) break;
        if (is_change[b] && k > 0 &&
            change + k > *constraints.max_change_outputs_per_user) {
          break;
        }
        counts[b] = static_cast<std::uint16_t>(k);
        self(self, b + 1, sum + static_cast<Amount>(k) * out_classes[b].value,
             card + k, change + (is_change[b] ? k : 0));
      }
      counts[b] = 0;
    };
    rec(rec, 0, 0, 0, 0);
  }
  std::stable_sort(outs.begin(), outs.end(),
                   [](const OutputVector& a, const OutputVector& b) {
                     return a.sum < b.sum;
                   });

  std::vector<std::uint16_t> in_counts(ni, 0);
  auto emit_for_inputs = [&](Amount in_sum) {
    for (const auto& [x, y] : apart) {
      if (x.input && y.input && in_counts[x.index] && in_counts[y.index]) return;
    }
    const Amount lo = in_sum - set.window.max;
    const Amount hi = in_sum - set.window.min;
    auto first = std::lower_bound(
        outs.begin(), outs.end(), lo,
        [](const OutputVector& v, Amount target) { return v.sum < target; });
    for (auto it = first; it != outs.end() && it->sum <= hi; ++it) {
      const std::uint16_t* oc = out_store.data() + it->offset;
      bool ok = true;
      for (const auto& [x, y] : apart) {
        auto present = [&](const ClassRef& r) {
          return r.input ? in_counts[r.index] > 0 : oc[r.index] > 0;
        };
        if (present(x) && present(y)) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      if (set.signatures.size() >= options.submapping_cap) {
        throw Error(ErrorCode::kSubmappingExplosion,
                    "more than " + std::to_string(options.submapping_cap) +
                        " sub-mappings; apply knowledge preprocessing to "
                        "shrink the instance");
      }
      set.signatures.push_back(
          SubSignature{in_counts, std::vector<std::uint16_t>(oc, oc + no),
                       in_sum - it->sum});
    }
  };
  auto rec_in = [&](auto&& self, std::size_t a, Amount sum,
                    std::size_t card) -> void {
    if (a == ni) {
      if (card > 0) emit_for_inputs(sum);
      return;
    }
    const std::size_t avail = in_classes[a].count();
    for (std::size_t k = 0; k <= avail; ++k) {
      if (card + k > constraints.max_inputs_per_user) break;
      in_counts[a] = static_cast<std::uint16_t>(k);
      self(self, a + 1, sum + static_cast<Amount>(k) * in_classes[a].value,
           card + k);
    }
    in_counts[a] = 0;
  };
  rec_in(rec_in, 0, 0, 0);

  std::sort(set.signatures.begin(), set.signatures.end(),
            [&](const SubSignature& a, const SubSignature& b) {
              return signature_less(set.layout, a, b);
            });
  return set;
}

namespace {

using Index = std::uint32_t;

// Search prefix: chosen signatures plus where the next choice may start.
struct Prefix {
  std::vector<Index> chosen;
  std::size_t last_pivot = SIZE_MAX;
  std::size_t last_pos = 0;
};

class Assembler {
 public:
  Assembler(const SubmappingSet& subs, const Constraints& constraints,
            const EnumerateOptions& options)
      : subs_(subs), constraints_(constraints), options_(options) {
    const auto& layout = subs_.layout;
    ni_ = layout.inputs.size();
    no_ = layout.outputs.size();
    by_pivot_.resize(ni_);
    pivot_of_.resize(subs_.signatures.size());
    for (Index i = 0; i < subs_.signatures.size(); ++i) {
      const auto& s = subs_.signatures[i];
      std::size_t p = 0;
      while (p < ni_ && s.in_counts[p] == 0) ++p;
      pivot_of_[i] = p;
      if (p < ni_) by_pivot_[p].push_back(i);
    }
    for (const auto& c : layout.inputs) {
      full_in_.push_back(static_cast<std::int32_t>(c.count()));
    }
    for (const auto& c : layout.outputs) {
      full_out_.push_back(static_cast<std::int32_t>(c.count()));
    }
  }

  std::size_t input_classes() const { return ni_; }
  const std::vector<std::size_t>& pivot_of() const { return pivot_of_; }

  class Worker {
   public:
    explicit Worker(const Assembler& a) : a_(a) {}

    // Runs the search below `prefix`, appending complete mappings to `out`.
    void run(const Prefix& prefix, std::vector<std::vector<Index>>& out) {
      reset();
      for (Index idx : prefix.chosen) apply(idx, +1);
      chosen_ = prefix.chosen;
      out_ = &out;
      search(prefix.last_pivot, prefix.last_pos);
    }

    // Direct children of `prefix`; completed mappings go to `done`.
    void children(const Prefix& prefix, std::vector<Prefix>& next,
                  std::vector<std::vector<Index>>& done) {
      reset();
      for (Index idx : prefix.chosen) apply(idx, +1);
      std::size_t pivot = first_remaining_input();
      if (pivot == a_.ni_) {
        if (outputs_done()) done.push_back(sorted(prefix.chosen));
        return;
      }
      const auto& list = a_.by_pivot_[pivot];
      std::size_t start = prefix.last_pivot == pivot ? prefix.last_pos : 0;
      for (std::size_t pos = start; pos < list.size(); ++pos) {
        Index idx = list[pos];
        if (!admissible(idx)) continue;
        Prefix child = prefix;
        child.chosen.push_back(idx);
        child.last_pivot = pivot;
        child.last_pos = pos;
        next.push_back(std::move(child));
      }
    }

    std::uint64_t nodes() const { return nodes_; }

   private:
    void reset() {
      rem_in_ = a_.full_in_;
      rem_out_ = a_.full_out_;
      rem_in_value_ = 0;
      rem_out_value_ = 0;
      rem_in_count_ = 0;
      for (std::size_t c = 0; c < a_.ni_; ++c) {
        rem_in_value_ += rem_in_[c] * a_.subs_.layout.inputs[c].value;
        rem_in_count_ += rem_in_[c];
      }
      for (std::size_t c = 0; c < a_.no_; ++c) {
        rem_out_value_ += rem_out_[c] * a_.subs_.layout.outputs[c].value;
      }
      positives_ = 0;
      chosen_.clear();
    }

    void apply(Index idx, int sign) {
      const auto& s = a_.subs_.signatures[idx];
      for (std::size_t c = 0; c < a_.ni_; ++c) {
        if (s.in_counts[c] == 0) continue;
        rem_in_[c] -= sign * s.in_counts[c];
        rem_in_value_ -= sign * s.in_counts[c] * a_.subs_.layout.inputs[c].value;
        rem_in_count_ -= sign * s.in_counts[c];
      }
      for (std::size_t c = 0; c < a_.no_; ++c) {
        if (s.out_counts[c] == 0) continue;
        rem_out_[c] -= sign * s.out_counts[c];
        rem_out_value_ -=
            sign * s.out_counts[c] * a_.subs_.layout.outputs[c].value;
      }
      if (s.residual > 0) positives_ += sign;
    }

    bool fits(Index idx) const {
      const auto& s = a_.subs_.signatures[idx];
      for (std::size_t c = 0; c < a_.ni_; ++c) {
        if (s.in_counts[c] > rem_in_[c]) return false;
      }
      for (std::size_t c = 0; c < a_.no_; ++c) {
        if (s.out_counts[c] > rem_out_[c]) return false;
      }
      return true;
    }

    bool admissible(Index idx) const {
      if (!fits(idx)) return false;
      const auto& s = a_.subs_.signatures[idx];
      if (s.residual > 0 && a_.constraints_.max_positive_residual_submappings &&
          static_cast<std::size_t>(positives_ + 1) >
              *a_.constraints_.max_positive_residual_submappings) {
        return false;
      }
      return true;
    }

    std::size_t first_remaining_input() const {
      std::size_t p = 0;
      while (p < a_.ni_ && rem_in_[p] == 0) ++p;
      return p;
    }

    bool outputs_done() const {
      for (auto r : rem_out_) {
        if (r != 0) return false;
      }
      return true;
    }

    // Remaining value must be splittable into 1..n residuals inside the
    // window, n being the number of coins left to place.
    bool residual_feasible() const {
      if (rem_in_count_ == 0) return rem_out_value_ == 0;
      const __int128 r = rem_in_value_ - rem_out_value_;
      const __int128 n = rem_in_count_;
      const auto& w = a_.subs_.window;
      const __int128 lo = w.min <= 0 ? n * w.min : __int128(w.min);
      const __int128 hi = w.max >= 0 ? n * w.max : __int128(w.max);
      return r >= lo && r <= hi;
    }

    std::string memo_key(std::size_t pivot_start) const {
      std::string key;
      key.reserve((a_.ni_ + a_.no_ + 2) * sizeof(std::int32_t));
      auto put = [&key](std::int32_t v) {
        key.append(reinterpret_cast<const char*>(&v), sizeof(v));
      };
      for (auto v : rem_in_) put(v);
      for (auto v : rem_out_) put(v);
      put(static_cast<std::int32_t>(pivot_start));
      put(positives_);
      return key;
    }

    // Returns the number of mappings emitted below this node.
    std::uint64_t search(std::size_t last_pivot, std::size_t last_pos) {
      ++nodes_;
      if ((nodes_ & 0xFFF) == 0 && a_.stop_.load(std::memory_order_relaxed)) {
        return 0;
      }
      std::size_t pivot = first_remaining_input();
      if (pivot == a_.ni_) {
        if (!outputs_done()) return 0;
        auto mapping = sorted(chosen_);
        if (a_.options_.filter && !a_.options_.filter(mapping)) return 0;
        a_.note_emitted();
        out_->push_back(std::move(mapping));
        return 1;
      }
      if (!residual_feasible()) return 0;

      const std::size_t start = last_pivot == pivot ? last_pos : 0;
      const bool memo_on = !a_.options_.filter && !chosen_.empty();
      std::string key;
      if (memo_on) {
        key = memo_key(start);
        if (dead_.count(key)) return 0;
      }

      std::uint64_t emitted = 0;
      const auto& list = a_.by_pivot_[pivot];
      for (std::size_t pos = start; pos < list.size(); ++pos) {
        Index idx = list[pos];
        if (!admissible(idx)) continue;
        apply(idx, +1);
        chosen_.push_back(idx);
        emitted += search(pivot, pos);
        chosen_.pop_back();
        apply(idx, -1);
      }
      if (memo_on && emitted == 0) {
        if (dead_.size() > kMemoLimit) dead_.clear();
        dead_.insert(std::move(key));
      }
      return emitted;
    }

    static std::vector<Index> sorted(std::vector<Index> v) {
      std::sort(v.begin(), v.end());
      return v;
    }

    static constexpr std::size_t kMemoLimit = 4'000'000;

    const Assembler& a_;
    std::vector<std::int32_t> rem_in_, rem_out_;
    std::int64_t rem_in_value_ = 0;
    std::int64_t rem_out_value_ = 0;
    std::int64_t rem_in_count_ = 0;
    std::int32_t positives_ = 0;
    std::vector<Index> chosen_;
    std::vector<std::vector<Index>>* out_ = nullptr;
    std::unordered_set<std::string> dead_;
    std::uint64_t nodes_ = 0;
  };

  void note_emitted() const {
    if (emitted_.fetch_add(1, std::memory_order_relaxed) + 1 >
        options_.mapping_cap) {
      stop_.store(true);
      throw Error(ErrorCode::kInstanceTooLarge,
                  "more than " + std::to_string(options_.mapping_cap) +
                      " numeric mappings");
    }
  }

  std::atomic<bool>& stop() const { return stop_; }

 private:
  const SubmappingSet& subs_;
  const Constraints& constraints_;
  const EnumerateOptions& options_;
  std::size_t ni_ = 0;
  std::size_t no_ = 0;
  std::vector<std::vector<Index>> by_pivot_;
  std::vector<std::size_t> pivot_of_;
  std::vector<std::int32_t> full_in_, full_out_;
  mutable std::atomic<bool> stop_{false};
  mutable std::atomic<std::uint64_t> emitted_{0};
};

}  // namespace

EnumerationResult assemble_mappings(const SubmappingSet& subs,
                                    const Constraints& constraints,
                                    const EnumerateOptions& options) {
  validate_constraints(constraints);
  const auto t0 = std::chrono::steady_clock::now();
  const unsigned threads = resolve_threads(options.threads);

  Assembler assembler(subs, constraints, options);

  // Split the tree at its top levels into independent tasks. Task order is
  // fixed, so the merged output does not depend on scheduling.
  std::vector<Prefix> frontier{Prefix{}};
  std::vector<std::vector<Index>> finished;
  std::uint64_t expansion_nodes = 0;
  {
    Assembler::Worker expander(assembler);
    const std::size_t target = 32 * static_cast<std::size_t>(threads);
    for (int depth = 0; depth < 3 && frontier.size() < target; ++depth) {
      std::vector<Prefix> next;
      for (const auto& p : frontier) expander.children(p, next, finished);
      expansion_nodes += frontier.size();
      frontier = std::move(next);
      if (frontier.empty()) break;
    }
    if (options.filter) {
      std::erase_if(finished, [&](const std::vector<Index>& m) {
        return !options.filter(m);
      });
    }
    for (std::size_t i = 0; i < finished.size(); ++i) assembler.note_emitted();
  }

  std::vector<std::vector<std::vector<Index>>> per_task(frontier.size());
  std::atomic<std::size_t> next_task{0};
  std::atomic<std::uint64_t> nodes{expansion_nodes};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto work = [&] {
    Assembler::Worker worker(assembler);
    try {
      for (;;) {
        std::size_t t = next_task.fetch_add(1);
        if (t >= frontier.size() || assembler.stop().load()) break;
        worker.run(frontier[t], per_task[t]);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mu);
      if (!failure) failure = std::current_exception();
      assembler.stop().store(true);
    }
    nodes.fetch_add(worker.nodes());
  };
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, frontier.size())));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (auto& bucket : per_task) {
    for (auto& m : bucket) finished.push_back(std::move(m));
    bucket.clear();
    bucket.shrink_to_fit();
  }
  std::sort(finished.begin(), finished.end());

  EnumerationResult result;
  result.window = subs.window;
  result.layout = subs.layout;
  result.submappings = subs.signatures;
  result.submapping_count = subs.signatures.size();
  result.mappings.resize(finished.size());

  // Multiplicities are independent per mapping; compute them in parallel over
  // fixed index ranges.
  std::atomic<std::size_t> next_chunk{0};
  constexpr std::size_t kChunk = 1024;
  auto count_work = [&] {
    for (;;) {
      std::size_t begin = next_chunk.fetch_add(kChunk);
      if (begin >= finished.size()) break;
      std::size_t end = std::min(finished.size(), begin + kChunk);
      for (std::size_t i = begin; i < end; ++i) {
        auto& nm = result.mappings[i];
        nm.submappings = std::move(finished[i]);
        nm.multiplicity =
            multiplicity_of(result.layout, result.submappings, nm);
      }
    }
  };
  if (workers <= 1 || finished.size() < 4 * kChunk) {
    count_work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(count_work);
    for (auto& t : pool) t.join();
  }
  for (const auto& nm : result.mappings) result.total_concrete += nm.multiplicity;

  result.stats.nodes_visited = nodes.load();
  result.stats.worker_count = workers;
  result.stats.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

EnumerationResult enumerate_mappings(const NormalizedCoinjoin& ntx,
                                     const Constraints& constraints,
                                     const EnumerateOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  auto subs = enumerate_submappings(ntx, constraints, options);
  auto result = assemble_mappings(subs, constraints, options);
  result.txid = ntx.base.txid;
  result.design = ntx.policy.design;
  result.stats.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

std::vector<SubMapping> expand_submapping(const ClassLayout& layout,
                                          const SubSignature& sig) {
  // Choose which coins of each class take part, class by class.
  std::vector<SubMapping> out{SubMapping{{}, {}, sig.residual}};
  auto expand_side = [&](const std::vector<CoinClass>& classes,
                         const std::vector<std::uint16_t>& counts, bool input) {
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const auto& ids = classes[c].ids;
      const std::size_t k = counts[c];
      if (k == 0) continue;
      std::vector<SubMapping> next;
      std::vector<char> pick(ids.size(), 0);
      std::fill(pick.begin(), pick.begin() + k, 1);
      do {
        for (const auto& partial : out) {
          SubMapping s = partial;
          auto& dst = input ? s.input_ids : s.output_ids;
          for (std::size_t i = 0; i < ids.size(); ++i) {
            if (pick[i]) dst.push_back(ids[i]);
          }
          next.push_back(std::move(s));
        }
      } while (std::prev_permutation(pick.begin(), pick.end()));
      out = std::move(next);
    }
  };
  expand_side(layout.inputs, sig.in_counts, true);
  expand_side(layout.outputs, sig.out_counts, false);
  return out;
}

std::vector<Mapping> expand_concrete(const EnumerationResult& result,
                                     std::uint64_t cap) {
  if (result.total_concrete > cap) {
    throw Error(ErrorCode::kInstanceTooLarge,
                "concrete expansion of " + result.total_concrete.str() +
                    " mappings exceeds the cap of " + std::to_string(cap));
  }
  std::set<Mapping> all;
  const auto& layout = result.layout;
  for (const auto& nm : result.mappings) {
    // Assign the coins of every class to the labelled slots, then collapse
    // relabellings through canonical().
    const std::size_t k = nm.submappings.size();
    std::vector<Mapping> partial{Mapping{std::vector<SubMapping>(k)}};
    for (std::size_t u = 0; u < k; ++u) {
      partial[0].submappings[u].residual =
          result.submappings[nm.submappings[u]].residual;
    }
    auto distribute = [&](const std::vector<CoinClass>& classes, bool input) {
      for (std::size_t c = 0; c < classes.size(); ++c) {
        std::vector<std::size_t> need(k);
        for (std::size_t u = 0; u < k; ++u) {
          const auto& s = result.submappings[nm.submappings[u]];
          need[u] = input ? s.in_counts[c] : s.out_counts[c];
        }
        std::vector<Mapping> next;
        for (const auto& m : partial) {
          // Recursive placement of each coin into a slot with spare demand.
          std::vector<std::size_t> left = need;
          Mapping cur = m;
          auto place = [&](auto&& self, std::size_t i) -> void {
            if (i == classes[c].ids.size()) {
              next.push_back(cur);
              return;
            }
            for (std::size_t u = 0; u < k; ++u) {
              if (left[u] == 0) continue;
              --left[u];
              auto& dst = input ? cur.submappings[u].input_ids
                                : cur.submappings[u].output_ids;
              dst.push_back(classes[c].ids[i]);
              self(self, i + 1);
              dst.pop_back();
              ++left[u];
            }
          };
          place(place, 0);
        }
        partial = std::move(next);
      }
    };
    distribute(layout.inputs, true);
    distribute(layout.outputs, false);
    for (auto& m : partial) all.insert(canonical(std::move(m)));
  }
  return {all.begin(), all.end()};
}

std::optional<std::size_t> find_numeric(const EnumerationResult& result,
                                        const Mapping& mapping) {
  std::map<std::string, std::size_t> in_class, out_class;
  for (std::size_t c = 0; c < result.layout.inputs.size(); ++c) {
    for (const auto& id : result.layout.inputs[c].ids) in_class[id] = c;
  }
  for (std::size_t c = 0; c < result.layout.outputs.size(); ++c) {
    for (const auto& id : result.layout.outputs[c].ids) out_class[id] = c;
  }
  std::vector<std::uint32_t> parts;
  for (const auto& s : mapping.submappings) {
    SubSignature sig;
    sig.in_counts.assign(result.layout.inputs.size(), 0);
    sig.out_counts.assign(result.layout.outputs.size(), 0);
    sig.residual = s.residual;
    for (const auto& id : s.input_ids) {
      auto it = in_class.find(id);
      if (it == in_class.end()) return std::nullopt;
      ++sig.in_counts[it->second];
    }
    for (const auto& id : s.output_ids) {
      auto it = out_class.find(id);
      if (it == out_class.end()) return std::nullopt;
      ++sig.out_counts[it->second];
    }
    auto it = std::find(result.submappings.begin(), result.submappings.end(), sig);
    if (it == result.submappings.end()) return std::nullopt;
    parts.push_back(static_cast<std::uint32_t>(it - result.submappings.begin()));
  }
  std::sort(parts.begin(), parts.end());
  for (std::size_t m = 0; m < result.mappings.size(); ++m) {
    if (result.mappings[m].submappings == parts) return m;
  }
  return std::nullopt;
}

}  // namespace cjmap
