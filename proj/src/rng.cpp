#include "hstop/rng.hpp"

namespace hstop {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Engine make_engine(RngStream stream, Substream sub) {
  std::uint64_t h = splitmix64(stream.master_seed);
  h = splitmix64(h ^ stream.path_index);
  h = splitmix64(h ^ static_cast<std::uint64_t>(sub));
  return Engine(h);
}

}  // namespace hstop
