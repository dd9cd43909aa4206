#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace gcsit {

using Rng = std::mt19937_64;

/// Derives an independent seed from a master seed and a stream path such as
/// {stream tag, trial index, restart index}. Pure function; the same inputs
/// always give the same seed.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> stream);

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> stream) {
  return Rng(derive_seed(master, stream));
}

}  // namespace gcsit
