#include "gcsit/rng.hpp"

namespace gcsit {
namespace {

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> stream) {
  std::uint64_t h = mix(master);
  for (std::uint64_t s : stream) {
    h = mix(h ^ mix(s + 0x632be59bd9b4e019ULL));
  }
  return h;
}

}  // namespace gcsit
