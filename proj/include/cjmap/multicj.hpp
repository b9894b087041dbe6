#pragma once

#include <map>
#include <string>
#include <vector>

#include "cjmap/enumerate.hpp"
#include "cjmap/preprocess.hpp"

namespace cjmap {

// An output of an earlier member spent as an input of a later one.
struct InternalCoin {
  std::string from_txid;
  std::string output_id;
  std::string to_txid;
  std::string input_id;
};

struct LinkCapacity {
  std::string from_txid;
  std::string to_txid;
  Amount capacity = 0;
};

struct LinkedSet {
  std::vector<Coinjoin> txs;  // topological order
  std::vector<LinkCapacity> links;
  std::vector<InternalCoin> internal_coins;
};

// Artificial transaction: every coin not consumed by a link, tagged with the
// txid it belongs to. Coin ids are "<txid>:<id>".
struct ArtificialTx {
  Coinjoin tx;
  std::vector<LinkCapacity> capacities;
};

// Throws DanglingLink when a link or internal coin references a missing
// transaction or coin or points backwards, ValueMismatch when linked values
// or capacities disagree.
ArtificialTx build_artificial(const LinkedSet& ls);

// Id of an external coin in the artificial transaction.
std::string artificial_id(const std::string& txid, const std::string& coin_id);

struct LinkedOptions {
  // Per-txid policy parameters; missing entries use the design defaults.
  std::map<std::string, PolicyParams> params;
  // Per-txid constraints; missing entries use default_constraints(design).
  std::map<std::string, Constraints> constraints;
  EnumerateOptions enumerate;
};

struct LinkedResult {
  ArtificialTx artificial;
  EnumerationResult result;
};

// Enumerates the artificial transaction and keeps exactly the mappings that
// some assignment of internal coins to users realizes: every user holds one
// balanced sub-mapping per member transaction it touches, and the members it
// touches are connected through the internal coins it holds.
LinkedResult enumerate_linked(const LinkedSet& ls,
                              const LinkedOptions& options = {});

}  // namespace cjmap
