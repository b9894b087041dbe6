#include "cjmap/multicj.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "cjmap/error.hpp"

namespace cjmap {

std::string artificial_id(const std::string& txid, const std::string& coin_id) {
  return txid + ":" + coin_id;
}

namespace {

const Coin* find_coin(const std::vector<Coin>& coins, const std::string& id) {
  for (const Coin& c : coins) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

struct Resolved {
  std::map<std::string, std::size_t> position;
  std::vector<std::set<std::string>> internal_in;   // per tx, consumed inputs
  std::vector<std::set<std::string>> internal_out;  // per tx, linked outputs
};

Resolved resolve(const LinkedSet& ls) {
  Resolved r;
  for (std::size_t t = 0; t < ls.txs.size(); ++t) {
    validate_coinjoin(ls.txs[t]);
    if (!r.position.emplace(ls.txs[t].txid, t).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "transaction " + ls.txs[t].txid + " listed twice");
    }
  }
  r.internal_in.resize(ls.txs.size());
  r.internal_out.resize(ls.txs.size());
  auto pos = [&](const std::string& txid) {
    auto it = r.position.find(txid);
    if (it == r.position.end()) {
      throw Error(ErrorCode::kDanglingLink, "unknown linked transaction " + txid);
    }
    return it->second;
  };
  for (const InternalCoin& k : ls.internal_coins) {
    const std::size_t f = pos(k.from_txid), g = pos(k.to_txid);
    if (f >= g) {
      throw Error(ErrorCode::kDanglingLink,
                  "link " + k.from_txid + " -> " + k.to_txid +
                      " does not point forward");
    }
    const Coin* out = find_coin(ls.txs[f].outputs, k.output_id);
    const Coin* in = find_coin(ls.txs[g].inputs, k.input_id);
    if (!out || !in) {
      throw Error(ErrorCode::kDanglingLink,
                  "internal coin " + k.from_txid + ":" + k.output_id + " -> " +
                      k.to_txid + ":" + k.input_id + " references a missing coin");
    }
    if (out->value != in->value) {
      throw Error(ErrorCode::kValueMismatch,
                  "internal coin " + k.from_txid + ":" + k.output_id +
                      " changes value across the link");
    }
    if (!r.internal_out[f].insert(k.output_id).second ||
        !r.internal_in[g].insert(k.input_id).second) {
      throw Error(ErrorCode::kDanglingLink,
                  "internal coin " + k.from_txid + ":" + k.output_id +
                      " is linked twice");
    }
  }
  return r;
}

}  // namespace

ArtificialTx build_artificial(const LinkedSet& ls) {
  if (ls.txs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "linked set has no transactions");
  }
  Resolved r = resolve(ls);

  std::map<std::pair<std::size_t, std::size_t>, Amount> flow;
  for (const InternalCoin& k : ls.internal_coins) {
    const std::size_t f = r.position.at(k.from_txid);
    flow[{f, r.position.at(k.to_txid)}] +=
        find_coin(ls.txs[f].outputs, k.output_id)->value;
  }
  std::map<std::pair<std::size_t, std::size_t>, Amount> declared;
  for (const LinkCapacity& l : ls.links) {
    auto f = r.position.find(l.from_txid);
    auto g = r.position.find(l.to_txid);
    if (f == r.position.end() || g == r.position.end() || f->second >= g->second) {
      throw Error(ErrorCode::kDanglingLink,
                  "link " + l.from_txid + " -> " + l.to_txid +
                      " is not a forward link between members");
    }
    const auto key = std::make_pair(f->second, g->second);
    const Amount actual = flow.count(key) ? flow.at(key) : 0;
    if (l.capacity != actual || declared.count(key)) {
      throw Error(ErrorCode::kValueMismatch,
                  "capacity of " + l.from_txid + " -> " + l.to_txid + " is " +
                      std::to_string(l.capacity) + " but linked coins carry " +
                      std::to_string(actual));
    }
    declared[key] = l.capacity;
  }
  for (const auto& [key, value] : flow) declared.emplace(key, value);

  ArtificialTx art;
  art.tx.design = Design::kGeneric;
  for (std::size_t t = 0; t < ls.txs.size(); ++t) {
    const Coinjoin& tx = ls.txs[t];
    art.tx.txid += (t ? "+" : "") + tx.txid;
    for (const Coin& c : tx.inputs) {
      if (r.internal_in[t].count(c.id)) continue;
      Coin a = c;
      a.id = artificial_id(tx.txid, c.id);
      a.tag = tx.txid;
      art.tx.inputs.push_back(std::move(a));
    }
    for (const Coin& c : tx.outputs) {
      if (r.internal_out[t].count(c.id)) continue;
      Coin a = c;
      a.id = artificial_id(tx.txid, c.id);
      a.tag = tx.txid;
      art.tx.outputs.push_back(std::move(a));
    }
  }
  for (const auto& [key, cap] : declared) {
    art.capacities.push_back({ls.txs[key.first].txid, ls.txs[key.second].txid, cap});
  }
  if (art.tx.outputs.empty()) {
    throw Error(ErrorCode::kEmptySide, "linked set has no external outputs");
  }
  return art;
}

namespace {

struct Member {
  ResidualWindow window;
  Constraints constraints;
  std::set<Amount> denominations;
  Amount out_fee = 0;  // mining fee added to each output by normalization

  bool is_change(Amount normalized_output) const {
    return constraints.max_change_outputs_per_user &&
           !denominations.count(normalized_output - out_fee);
  }
};

struct Link {
  std::size_t from = 0, to = 0;
  Amount out_value = 0;  // normalized by the producing member
  Amount in_value = 0;   // normalized by the spending member
  bool change = false;
};

struct Part {
  std::size_t inputs = 0, outputs = 0, change = 0;
  Amount residual = 0;
  bool touched = false;
};

// Searches assignments of internal coins to the users of one artificial
// mapping; see enumerate_linked.
class Router {
 public:
  Router(const std::vector<Member>& members, const std::vector<Link>& links,
         const ClassLayout& layout, const std::vector<std::size_t>& in_tx,
         const std::vector<std::size_t>& out_tx)
      : members_(members), links_(links), layout_(layout), in_tx_(in_tx),
        out_tx_(out_tx) {
    const std::size_t n = members.size();
    in_left_.assign(links.size() + 1, std::vector<Amount>(n, 0));
    out_left_.assign(links.size() + 1, std::vector<Amount>(n, 0));
    for (std::size_t k = links.size(); k-- > 0;) {
      in_left_[k] = in_left_[k + 1];
      out_left_[k] = out_left_[k + 1];
      in_left_[k][links[k].to] += links[k].in_value;
      out_left_[k][links[k].from] += links[k].out_value;
    }
  }

  bool admissible(const std::vector<const SubSignature*>& users) const {
    const std::size_t n = members_.size();
    State st;
    st.parts.assign(users.size(), std::vector<Part>(n));
    st.owner.assign(links_.size(), 0);
    for (std::size_t u = 0; u < users.size(); ++u) {
      const SubSignature& s = *users[u];
      for (std::size_t c = 0; c < s.in_counts.size(); ++c) {
        if (!s.in_counts[c]) continue;
        Part& p = st.parts[u][in_tx_[c]];
        p.touched = true;
        p.inputs += s.in_counts[c];
        p.residual += s.in_counts[c] * layout_.inputs[c].value;
      }
      for (std::size_t c = 0; c < s.out_counts.size(); ++c) {
        if (!s.out_counts[c]) continue;
        const std::size_t t = out_tx_[c];
        Part& p = st.parts[u][t];
        p.touched = true;
        p.outputs += s.out_counts[c];
        p.residual -= s.out_counts[c] * layout_.outputs[c].value;
        if (members_[t].is_change(layout_.outputs[c].value)) {
          p.change += s.out_counts[c];
        }
      }
      for (std::size_t t = 0; t < n; ++t) {
        if (!within_caps(st.parts[u][t], t)) return false;
      }
    }
    return search(st, 0);
  }

 private:
  struct State {
    std::vector<std::vector<Part>> parts;  // user x member
    std::vector<std::size_t> owner;        // per internal coin
  };

  bool within_caps(const Part& p, std::size_t t) const {
    const Constraints& c = members_[t].constraints;
    return p.inputs <= c.max_inputs_per_user &&
           p.outputs <= c.max_outputs_per_user &&
           (!c.max_change_outputs_per_user ||
            p.change <= *c.max_change_outputs_per_user);
  }

  // Can the part still reach its window with the coins not yet assigned?
  bool reachable(const Part& p, std::size_t t, std::size_t next) const {
    if (!p.touched) return true;
    const ResidualWindow& w = members_[t].window;
    return p.residual + in_left_[next][t] >= w.min &&
           p.residual - out_left_[next][t] <= w.max;
  }

  bool search(State& st, std::size_t k) const {
    if (k == links_.size()) return complete(st);
    const Link& l = links_[k];
    for (std::size_t u = 0; u < st.parts.size(); ++u) {
      Part& to = st.parts[u][l.to];
      Part& from = st.parts[u][l.from];
      const Part saved_to = to, saved_from = from;
      to.touched = from.touched = true;
      ++to.inputs;
      to.residual += l.in_value;
      ++from.outputs;
      from.residual -= l.out_value;
      if (l.change) ++from.change;
      st.owner[k] = u;
      bool ok = within_caps(to, l.to) && within_caps(from, l.from) &&
                reachable(to, l.to, k + 1) && reachable(from, l.from, k + 1) &&
                search(st, k + 1);
      to = saved_to;
      from = saved_from;
      if (ok) return true;
    }
    return false;
  }

  bool complete(const State& st) const {
    const std::size_t n = members_.size();
    std::vector<std::size_t> positive(n, 0);
    for (std::size_t u = 0; u < st.parts.size(); ++u) {
      std::vector<std::size_t> root(n);
      std::iota(root.begin(), root.end(), 0);
      auto find = [&](std::size_t x) {
        while (root[x] != x) x = root[x] = root[root[x]];
        return x;
      };
      for (std::size_t k = 0; k < links_.size(); ++k) {
        if (st.owner[k] == u) root[find(links_[k].from)] = find(links_[k].to);
      }
      std::size_t components = 0;
      for (std::size_t t = 0; t < n; ++t) {
        const Part& p = st.parts[u][t];
        if (!p.touched) continue;
        if (p.inputs == 0 || !members_[t].window.contains(p.residual)) return false;
        if (p.residual > 0) ++positive[t];
        if (find(t) == t) ++components;
      }
      // Roots of untouched members never merge with touched ones, so a
      // connected user has exactly one touched root.
      if (components != 1) return false;
    }
    for (std::size_t t = 0; t < n; ++t) {
      const auto& limit = members_[t].constraints.max_positive_residual_submappings;
      if (limit && positive[t] > *limit) return false;
    }
    return true;
  }

  const std::vector<Member>& members_;
  const std::vector<Link>& links_;
  const ClassLayout& layout_;
  const std::vector<std::size_t>& in_tx_;
  const std::vector<std::size_t>& out_tx_;
  // Value of internal coins from index k on that still enter / leave member t.
  std::vector<std::vector<Amount>> in_left_, out_left_;
};

}  // namespace

LinkedResult enumerate_linked(const LinkedSet& ls, const LinkedOptions& options) {
  LinkedResult out;
  out.artificial = build_artificial(ls);
  const Resolved r = resolve(ls);
  const std::size_t n = ls.txs.size();

  std::vector<Member> members(n);
  std::vector<NormalizedCoinjoin> normalized;
  for (std::size_t t = 0; t < n; ++t) {
    const Coinjoin& tx = ls.txs[t];
    auto p = options.params.find(tx.txid);
    FeePolicy policy = policy_for(tx, p == options.params.end() ? PolicyParams{}
                                                                : p->second);
    normalized.push_back(normalize_fees(tx, policy));
    auto c = options.constraints.find(tx.txid);
    members[t].constraints = c == options.constraints.end()
                                 ? default_constraints(tx.design)
                                 : c->second;
    validate_constraints(members[t].constraints);
    members[t].window = policy.window();
    members[t].denominations = {members[t].constraints.common_denominations.begin(),
                                members[t].constraints.common_denominations.end()};
    members[t].out_fee = policy.mining_feerate * policy.output_vsize;
  }

  std::vector<Link> links;
  Amount delta_lo = 0, delta_hi = 0;
  for (const InternalCoin& k : ls.internal_coins) {
    Link l;
    l.from = r.position.at(k.from_txid);
    l.to = r.position.at(k.to_txid);
    l.out_value = find_coin(normalized[l.from].base.outputs, k.output_id)->value;
    l.in_value = find_coin(normalized[l.to].base.inputs, k.input_id)->value;
    l.change = members[l.from].is_change(l.out_value);
    links.push_back(l);
    // A user's artificial residual is the sum of its per-member residuals
    // plus, per internal coin it holds, the fees both members priced in.
    delta_lo += std::min<Amount>(0, l.out_value - l.in_value);
    delta_hi += std::max<Amount>(0, l.out_value - l.in_value);
  }

  // Artificial transaction over normalized values; one sub-mapping per user
  // and member bounds its window and size.
  Coinjoin art = out.artificial.tx;
  Amount lo = delta_lo, hi = delta_hi;
  Constraints joint;
  joint.max_inputs_per_user = 0;
  joint.max_outputs_per_user = 0;
  for (std::size_t t = 0; t < n; ++t) {
    lo += std::min<Amount>(0, members[t].window.min);
    hi += std::max<Amount>(0, members[t].window.max);
    joint.max_inputs_per_user += members[t].constraints.max_inputs_per_user;
    joint.max_outputs_per_user += members[t].constraints.max_outputs_per_user;
  }
  for (Coin& c : art.inputs) {
    const std::size_t t = r.position.at(c.tag);
    c.value = find_coin(normalized[t].base.inputs,
                        c.id.substr(c.tag.size() + 1))->value;
  }
  for (Coin& c : art.outputs) {
    const std::size_t t = r.position.at(c.tag);
    c.value = find_coin(normalized[t].base.outputs,
                        c.id.substr(c.tag.size() + 1))->value;
  }
  PolicyParams generic;
  generic.feerate = 0;
  FeePolicy joint_policy = build_policy(Design::kGeneric, generic);
  joint_policy.residual_min = lo;
  joint_policy.residual_max = hi;
  NormalizedCoinjoin ntx = normalize_fees(art, joint_policy);
  ntx.policy = joint_policy;

  SubmappingSet subs = enumerate_submappings(ntx, joint, options.enumerate);
  std::vector<std::size_t> in_tx, out_tx;
  for (const CoinClass& c : subs.layout.inputs) in_tx.push_back(r.position.at(c.tag));
  for (const CoinClass& c : subs.layout.outputs) out_tx.push_back(r.position.at(c.tag));

  Router router(members, links, subs.layout, in_tx, out_tx);
  EnumerateOptions eo = options.enumerate;
  MappingFilter user_filter = eo.filter;
  eo.filter = [&](const std::vector<std::uint32_t>& sigs) {
    if (user_filter && !user_filter(sigs)) return false;
    std::vector<const SubSignature*> users;
    users.reserve(sigs.size());
    for (auto s : sigs) users.push_back(&subs.signatures[s]);
    return router.admissible(users);
  };
  out.result = assemble_mappings(subs, joint, eo);
  out.result.txid = art.txid;
  out.result.design = Design::kGeneric;
  return out;
}

}  // namespace cjmap
