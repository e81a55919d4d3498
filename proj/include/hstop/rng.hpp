#pragma once

#include <cstdint>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace hstop {

/// Identifies the random numbers of one path: a pure function of (master_seed, path_index).
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
};

/// Disjoint substreams of a path. Nature draws never share an engine with Brownian increments.
enum class Substream : std::uint64_t { Nature = 1, Brownian = 2 };

/// Same sequence as std::mt19937_64; Boost's implementation is faster here.
using Engine = boost::random::mt19937_64;

/// Engine for one (path, substream) pair, seeded by hashing the triple.
Engine make_engine(RngStream stream, Substream sub);

/// Standard normal draws for one path.
class NormalSource {
 public:
  explicit NormalSource(RngStream stream) : engine_(make_engine(stream, Substream::Brownian)) {}
  double operator()() { return normal_(engine_); }

 private:
  Engine engine_;
  boost::random::normal_distribution<double> normal_{0.0, 1.0};
};

/// Uniform draws in (0, 1] for the hidden state and the horizon.
class UniformSource {
 public:
  explicit UniformSource(RngStream stream) : engine_(make_engine(stream, Substream::Nature)) {}
  double operator()() { return 1.0 - uniform_(engine_); }

 private:
  Engine engine_;
  boost::random::uniform_01<double> uniform_;
};

}  // namespace hstop
