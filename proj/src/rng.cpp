#include "hydrostat/rng.hpp"

#include <cmath>
#include <numbers>

namespace hydrostat::rng {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(splitmix(splitmix(seed + kGolden) ^ splitmix(stream + 2 * kGolden))) {}

std::uint64_t CounterRng::next_word() {
  return splitmix(key_ + (++counter_) * kGolden);
}

double CounterRng::uniform() {
  return static_cast<double>(next_word() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double CounterRng::normal() {
  // u1 in (0, 1] so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

bool CounterRng::bernoulli(double p) { return uniform() < p; }

std::uint64_t CounterRng::below(std::uint64_t n) {
  return n == 0 ? 0 : next_word() % n;
}

}  // namespace hydrostat::rng
