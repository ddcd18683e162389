#pragma once

#include <cstdint>

#include "lmb/rng.hpp"
#include "lmb/types.hpp"

// Stream keys derived from tuples and labels, so per-component random
// streams survive reordering, pruning, and capping of their containers.

namespace lmb {

inline std::uint64_t tuple_key_seed(std::uint64_t seed, const MeasurementTuple& tuple) {
  std::uint64_t s = mix_key(seed, tuple.size());
  for (MeasurementIndex j : tuple) s = mix_key(s, static_cast<std::uint32_t>(j));
  return s;
}

inline std::uint64_t label_key_seed(std::uint64_t seed, const Label& label) {
  return tuple_key_seed(mix_key(seed, static_cast<std::uint64_t>(label.birth_time)), label.tuple);
}

}  // namespace lmb
