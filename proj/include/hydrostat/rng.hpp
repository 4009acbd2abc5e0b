#pragma once

#include <cstdint>

namespace hydrostat::rng {

/// Counter-based generator keyed by (seed, stream). Draws depend only on the
/// key and the draw index, so independent streams produce identical values
/// regardless of the order modules consume them in.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller; consumes two counter values per call.
  double normal();
  bool bernoulli(double p);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t next_word();

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace hydrostat::rng
