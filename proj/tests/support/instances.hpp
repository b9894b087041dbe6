#pragma once

#include <random>

#include "cjmap/enumerate.hpp"
#include "cjmap/multicj.hpp"

namespace cjmap::testing {

struct Instance {
  NormalizedCoinjoin ntx;
  Constraints constraints;
};

// Fee-normalized coinjoin built from 1..4 balanced users plus optional
// noise, with a design-specific window and constraints and at most
// `max_coins` coins. Values come from a small alphabet so that classes
// collide often.
Instance random_instance(std::mt19937_64& rng, Design design,
                         std::size_t max_coins = 12);

Coinjoin worked_example_tx();

// Two generic members, tx2 spending `linked` outputs of tx1.
LinkedSet random_linked(std::mt19937_64& rng, std::size_t max_coins = 12);

}  // namespace cjmap::testing
