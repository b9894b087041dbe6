#include "cjmap/generator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include "cjmap/error.hpp"

namespace cjmap {

namespace {

// Portable draws; std distributions differ across standard libraries.
std::uint64_t uniform(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi) {
  const std::uint64_t span = hi - lo;
  if (span == UINT64_MAX) return rng();
  const std::uint64_t n = span + 1;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return lo + x % n;
}

Amount uniform_amount(std::mt19937_64& rng, Amount lo, Amount hi) {
  return lo + static_cast<Amount>(uniform(rng, 0, static_cast<std::uint64_t>(hi - lo)));
}

bool coin_flip(std::mt19937_64& rng, double p) {
  return static_cast<double>(uniform(rng, 0, 999'999)) < p * 1e6;
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform(rng, 0, i - 1)]);
  }
}

struct UserCoins {
  std::vector<Coin> inputs;  // value and origin only
  std::vector<Amount> outputs;
};

Amount ladder(const GeneratorParams& p, std::size_t step) {
  return p.ladder_base << step;
}

Amount draw_input(std::mt19937_64& rng, const GeneratorParams& p) {
  const Amount rung = ladder(p, uniform(rng, 0, p.ladder_steps - 1));
  // Half of the inputs sit exactly on the ladder so values repeat.
  return coin_flip(rng, 0.5) ? rung : rung + uniform_amount(rng, 1, rung);
}

Coin input_coin(std::mt19937_64& rng, const GeneratorParams& p, Amount value) {
  Coin c;
  c.value = value;
  c.origin = coin_flip(rng, p.remix_probability) ? Origin::kRemix : Origin::kFresh;
  return c;
}

// Greedy ladder decomposition of `budget`, each output costing `out_fee` on
// top of its value. Returns what is left over.
Amount decompose(const GeneratorParams& p, Amount budget, Amount out_fee,
                 std::size_t max_outputs, std::vector<Amount>& outputs) {
  while (outputs.size() < max_outputs && budget >= p.ladder_base + out_fee) {
    std::size_t step = p.ladder_steps;
    while (step-- > 0) {
      if (ladder(p, step) + out_fee <= budget) break;
    }
    outputs.push_back(ladder(p, step));
    budget -= ladder(p, step) + out_fee;
  }
  return budget;
}

std::vector<UserCoins> make_generic(std::mt19937_64& rng, std::size_t users,
                                    const GeneratorParams& p) {
  std::vector<UserCoins> out(users);
  for (auto& u : out) {
    Amount sum = 0;
    for (auto k = uniform(rng, p.min_inputs_per_user, p.max_inputs_per_user); k > 0; --k) {
      u.inputs.push_back(input_coin(rng, p, draw_input(rng, p)));
      sum += u.inputs.back().value;
    }
    Amount left = decompose(p, sum, 0, p.max_outputs_per_user - 1, u.outputs);
    if (left > 0) u.outputs.push_back(left);  // change
  }
  return out;
}

std::vector<UserCoins> make_wasabi2(std::mt19937_64& rng, std::size_t users,
                                    const GeneratorParams& p, const FeePolicy& policy) {
  const Amount in_fee = policy.mining_feerate * policy.input_vsize;
  const Amount out_fee = policy.mining_feerate * policy.output_vsize;
  std::vector<UserCoins> out(users);
  for (auto& u : out) {
    Amount budget = 0;
    for (auto k = uniform(rng, p.min_inputs_per_user, p.max_inputs_per_user); k > 0; --k) {
      Coin c = input_coin(rng, p, draw_input(rng, p) + in_fee);
      budget += c.value - coordination_fee(policy, c) - in_fee;
      u.inputs.push_back(c);
    }
    Amount left = decompose(p, budget, out_fee, p.max_outputs_per_user - 1, u.outputs);
    // Leftover too small for a change output stays with the coordinator or
    // the miners, inside the fee window.
    if (left >= kDefaultMinRegistrableOutput + out_fee) {
      u.outputs.push_back(left - out_fee);
    }
  }
  return out;
}

std::vector<UserCoins> make_wasabi1(std::mt19937_64& rng, std::size_t users,
                                    const GeneratorParams& p, const FeePolicy& policy) {
  const Amount in_fee = policy.mining_feerate * policy.input_vsize;
  const Amount out_fee = policy.mining_feerate * policy.output_vsize;
  const Amount d = p.standard_denomination;
  const Amount standard_cost = d + out_fee + d * policy.coordination_rate_ppm / 1'000'000;
  std::vector<UserCoins> out(users);
  for (auto& u : out) {
    const auto k = uniform(rng, p.min_inputs_per_user, p.max_inputs_per_user);
    // Enough to buy the standard output, pay for change and keep some.
    const Amount need = standard_cost + out_fee + p.ladder_base;
    Amount budget = 0;
    for (std::uint64_t i = 0; i < k; ++i) {
      Amount share = need / static_cast<Amount>(k) + in_fee + 1;
      Amount v = share + uniform_amount(rng, 0, share / 2);
      u.inputs.push_back(input_coin(rng, p, v));
      budget += v - in_fee;
    }
    u.outputs.push_back(d);
    u.outputs.push_back(budget - standard_cost - out_fee);
  }
  return out;
}

std::vector<UserCoins> make_whirlpool(std::mt19937_64& rng, std::size_t users,
                                      const GeneratorParams& p) {
  std::vector<UserCoins> out(users);
  for (auto& u : out) {
    Coin c = input_coin(rng, p, p.pool_value);
    // Fresh inputs come from the premix and carry the mining fee premium.
    if (!c.is_remix()) c.value += uniform_amount(rng, 1, std::max<Amount>(1, p.pool_value / 100));
    u.inputs.push_back(c);
    u.outputs.push_back(p.pool_value);
  }
  return out;
}

std::vector<UserCoins> make_joinmarket(std::mt19937_64& rng, std::size_t users,
                                       const GeneratorParams& p) {
  const Amount amount = ladder(p, uniform(rng, 0, p.ladder_steps - 1));
  std::vector<UserCoins> out(users);
  Amount fees = 0;
  auto fund = [&](UserCoins& u, Amount need) {
    Amount sum = 0;
    const auto k = uniform(rng, p.min_inputs_per_user, p.max_inputs_per_user);
    for (std::uint64_t i = 0; i < k || sum < need; ++i) {
      u.inputs.push_back(input_coin(rng, p, draw_input(rng, p)));
      sum += u.inputs.back().value;
    }
    return sum;
  };
  // Makers: earn a fee, get the coinjoin amount plus change.
  for (std::size_t m = 1; m < users; ++m) {
    UserCoins& u = out[m];
    const Amount fee = uniform_amount(rng, 0, p.max_maker_fee);
    const Amount sum = fund(u, amount + 1);
    fees += fee;
    u.outputs.push_back(amount);
    u.outputs.push_back(sum + fee - amount);
  }
  // Taker: pays the makers and the miners.
  UserCoins& taker = out[0];
  const Amount mining =
      uniform_amount(rng, 0, std::max<Amount>(0, kDefaultJoinMarketTakerFeeMax - fees));
  const Amount sum = fund(taker, amount + fees + mining + 1);
  taker.outputs.push_back(amount);
  const Amount change = sum - amount - fees - mining;
  if (change > 0) taker.outputs.push_back(change);
  return out;
}

FeePolicy generator_policy(Design design, const GeneratorParams& p,
                           PolicyParams& params) {
  params = PolicyParams{};
  switch (design) {
    case Design::kWasabi1:
      params.feerate = p.mining_feerate;
      params.standard_denomination = p.standard_denomination;
      break;
    case Design::kWasabi2:
      params.feerate = p.mining_feerate;
      break;
    case Design::kWhirlpool:
      params.standard_denomination = p.pool_value;
      break;
    case Design::kJoinMarket:
      params.max_maker_fee = p.max_maker_fee;
      break;
    case Design::kGeneric:
      break;
  }
  return build_policy(design, params);
}

GroundTruth generate_with(std::mt19937_64& rng, Design design, std::size_t users,
                          const GeneratorParams& p) {
  GroundTruth gt;
  gt.design = design;
  const FeePolicy policy = generator_policy(design, p, gt.policy);
  const Constraints constraints = default_constraints(design);

  for (std::size_t attempt = 0; attempt < p.max_attempts; ++attempt) {
    std::vector<UserCoins> coins;
    switch (design) {
      case Design::kGeneric: coins = make_generic(rng, users, p); break;
      case Design::kWasabi2: coins = make_wasabi2(rng, users, p, policy); break;
      case Design::kWasabi1: coins = make_wasabi1(rng, users, p, policy); break;
      case Design::kWhirlpool: coins = make_whirlpool(rng, users, p); break;
      case Design::kJoinMarket: coins = make_joinmarket(rng, users, p); break;
    }

    // Shuffle coins across users, remembering the owner of each.
    std::vector<std::pair<Coin, std::size_t>> ins;
    std::vector<std::pair<Amount, std::size_t>> outs;
    for (std::size_t u = 0; u < coins.size(); ++u) {
      for (const Coin& c : coins[u].inputs) ins.push_back({c, u});
      for (Amount v : coins[u].outputs) outs.push_back({v, u});
    }
    shuffle(ins, rng);
    shuffle(outs, rng);

    Coinjoin tx;
    tx.txid = "gen-" + std::string(design_name(design)) + "-" + std::to_string(users);
    tx.design = design;
    if (gt.policy.feerate) tx.declared_mining_feerate = gt.policy.feerate;
    Mapping truth;
    truth.submappings.resize(users);
    for (std::size_t i = 0; i < ins.size(); ++i) {
      Coin c = ins[i].first;
      c.id = "in" + std::to_string(i);
      truth.submappings[ins[i].second].input_ids.push_back(c.id);
      tx.inputs.push_back(std::move(c));
    }
    for (std::size_t o = 0; o < outs.size(); ++o) {
      Coin c;
      c.id = "out" + std::to_string(o);
      c.value = outs[o].first;
      truth.submappings[outs[o].second].output_ids.push_back(c.id);
      tx.outputs.push_back(std::move(c));
    }

    bool ok = true;
    try {
      validate_coinjoin(tx);
      const NormalizedCoinjoin ntx = normalize_fees(tx, policy);
      std::map<std::string, Amount> in_value, out_value;
      for (const Coin& c : ntx.base.inputs) in_value[c.id] = c.value;
      for (const Coin& c : ntx.base.outputs) out_value[c.id] = c.value;
      std::size_t positive = 0;
      for (auto& s : truth.submappings) {
        s.residual = 0;
        for (const auto& id : s.input_ids) s.residual += in_value.at(id);
        for (const auto& id : s.output_ids) s.residual -= out_value.at(id);
        if (s.residual > 0) ++positive;
        ok = ok && ntx.policy.window().contains(s.residual) &&
             s.input_ids.size() <= constraints.max_inputs_per_user &&
             s.output_ids.size() <= constraints.max_outputs_per_user;
      }
      if (constraints.max_positive_residual_submappings) {
        ok = ok && positive <= *constraints.max_positive_residual_submappings;
      }
    } catch (const Error&) {
      ok = false;
    }
    if (!ok) continue;
    gt.tx = std::move(tx);
    gt.true_mapping = canonical(std::move(truth));
    return gt;
  }
  throw Error(ErrorCode::kInfeasibleParams,
              "no coinjoin inside the fee window after " +
                  std::to_string(p.max_attempts) + " attempts");
}

}  // namespace

void validate_generator_params(Design design, const GeneratorParams& p) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorCode::kInfeasibleParams, msg);
  };
  if (p.min_inputs_per_user < 1 || p.min_inputs_per_user > p.max_inputs_per_user) {
    fail("per-user input range is empty");
  }
  if (p.max_outputs_per_user < 2) fail("users need room for at least two outputs");
  if (p.ladder_base < 1 || p.ladder_steps < 1 || p.ladder_steps > 40) {
    fail("denomination ladder must have a positive base and 1..40 steps");
  }
  if (p.mining_feerate < 0 || p.max_maker_fee < 0) fail("fees must be non-negative");
  if (p.remix_probability < 0 || p.remix_probability > 1) {
    fail("remix probability must lie in [0, 1]");
  }
  const Constraints c = default_constraints(design);
  // Whirlpool users always register one input and one output.
  if (design != Design::kWhirlpool &&
      (p.max_inputs_per_user > c.max_inputs_per_user ||
       p.max_outputs_per_user > c.max_outputs_per_user)) {
    fail("per-user limits exceed the design's constraints");
  }
  if (design == Design::kWasabi2 &&
      p.mining_feerate * 31 > kDefaultFeerateErrorMargin) {
    fail("feerate too high: change leftovers would exceed the wasabi2 window");
  }
  if (design == Design::kWhirlpool && p.pool_value < 1) fail("pool value must be positive");
  if (design == Design::kWasabi1 && p.standard_denomination < 1) {
    fail("standard denomination must be positive");
  }
}

std::mt19937_64 instance_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

GroundTruth generate(Design design, std::size_t users, std::uint64_t seed,
                     const GeneratorParams& params) {
  validate_generator_params(design, params);
  if (users < 1) throw Error(ErrorCode::kInfeasibleParams, "need at least one user");
  if (design == Design::kJoinMarket && users < 2) {
    throw Error(ErrorCode::kInfeasibleParams, "joinmarket needs a taker and a maker");
  }
  auto rng = instance_rng(seed, 0);
  GroundTruth gt = generate_with(rng, design, users, params);
  gt.seed = seed;
  return gt;
}

GroundTruth generate_sized(Design design, std::size_t size, std::uint64_t seed,
                           std::uint64_t index, const GeneratorParams& params) {
  validate_generator_params(design, params);
  const std::size_t min_users = design == Design::kJoinMarket ? 2 : 1;
  const std::size_t max_users = size / 2;
  if (size < 2 || max_users < min_users ||
      (design == Design::kWhirlpool && size % 2 != 0)) {
    throw Error(ErrorCode::kInfeasibleParams,
                "no " + std::string(design_name(design)) + " coinjoin has size " +
                    std::to_string(size));
  }
  auto rng = instance_rng(seed, index);
  for (std::size_t attempt = 0; attempt < params.max_attempts; ++attempt) {
    const std::size_t users = design == Design::kWhirlpool
                                  ? max_users
                                  : uniform(rng, min_users, max_users);
    GroundTruth gt = generate_with(rng, design, users, params);
    if (gt.tx.inputs.size() + gt.tx.outputs.size() == size) {
      gt.seed = seed;
      gt.tx.txid += "-" + std::to_string(index);
      return gt;
    }
  }
  throw Error(ErrorCode::kInfeasibleParams,
              "could not hit size " + std::to_string(size) + " after " +
                  std::to_string(params.max_attempts) + " attempts");
}

std::vector<TrendRow> trend_dataset(Design design, const std::vector<std::size_t>& sizes,
                                    std::size_t per_size, std::uint64_t seed,
                                    const GeneratorParams& params, unsigned threads) {
  const std::size_t total = sizes.size() * per_size;
  std::vector<TrendRow> rows(total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= total) break;
      try {
        const std::size_t size = sizes[i / per_size];
        GroundTruth gt = generate_sized(design, size, seed, i, params);
        const auto t0 = std::chrono::steady_clock::now();
        auto ntx = normalize_fees(gt.tx, build_policy(design, gt.policy));
        EnumerateOptions opt;
        opt.threads = 1;
        auto res = enumerate_mappings(ntx, default_constraints(design), opt);
        rows[i].size = size;
        rows[i].numeric_mappings = res.mappings.size();
        rows[i].concrete_mappings = res.total_concrete;
        rows[i].seconds = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t0).count();
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(total);
      }
    }
  };
  const unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(1, total)));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

}  // namespace cjmap
