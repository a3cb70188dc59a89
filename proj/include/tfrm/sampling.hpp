#pragma once
// Deterministic random sampling. Everything is built on splitmix64 so that a
// seed produces the same stream on every platform; standard-library
// distributions are implementation-defined and would break byte-identical
// reruns.

#include <cstdint>
#include <string>
#include <vector>

#include "tfrm/core.hpp"

namespace tfrm {

std::uint64_t splitmix64(std::uint64_t& state);

// Stable per-trial seed: mixing the base seed with the trial index gives
// independent streams regardless of evaluation order.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return splitmix64(state_); }
  double uniform01();  // [0, 1)
  double uniform(double a, double b);
  double normal(double mu, double sigma);
  // Conditional law of normal(mu, sigma) given a nonnegative draw
  // (resampling, not clipping: clipping would pile mass at 0).
  double truncated_normal(double mu, double sigma);
  double lognormal(double mu, double sigma);

 private:
  std::uint64_t state_ = 0;
};

struct Distribution {
  enum class Type { Uniform, Normal, Lognormal };
  Type type = Type::Uniform;
  double a = 0.0;  // uniform bounds
  double b = 1.0;
  double mu = 0.0;  // normal / lognormal parameters
  double sigma = 1.0;

  double sample(Rng& rng) const;
  static Distribution parse(const std::string& name, double p1, double p2);
};

// m independent draws, bids only.
BidProfile sample_profile(const Distribution& dist, std::size_t m,
                          std::uint64_t seed);
// m independent draws used as both bid and valuation (truthful profile).
BidProfile sample_truthful_profile(const Distribution& dist, std::size_t m,
                                   std::uint64_t seed);

}  // namespace tfrm
