// splitmix64-based sampling; identical streams on every platform.

#include "tfrm/sampling.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tfrm {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t state = base ^ (0xD1B54A32D192ED03ULL * (index + 1));
  return splitmix64(state);
}

double Rng::uniform01() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double a, double b) {
  if (!(a <= b)) throw std::invalid_argument("uniform bounds must satisfy a <= b");
  return a + (b - a) * uniform01();
}

double Rng::normal(double mu, double sigma) {
  // Box-Muller, cosine branch. u clamped away from 0 so the log is finite.
  double u = uniform01();
  if (u <= 0.0) u = 0x1.0p-53;
  const double v = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u));
  return mu + sigma * radius * std::cos(2.0 * std::numbers::pi * v);
}

double Rng::truncated_normal(double mu, double sigma) {
  for (;;) {
    const double draw = normal(mu, sigma);
    if (draw >= 0.0) return draw;
  }
}

double Rng::lognormal(double mu, double sigma) {
  return std::exp(normal(mu, sigma));
}

double Distribution::sample(Rng& rng) const {
  switch (type) {
    case Type::Uniform:
      return rng.uniform(a, b);
    case Type::Normal:
      return rng.truncated_normal(mu, sigma);
    case Type::Lognormal:
      return rng.lognormal(mu, sigma);
  }
  throw std::logic_error("unreachable distribution type");
}

Distribution Distribution::parse(const std::string& name, double p1,
                                 double p2) {
  Distribution dist;
  if (name == "uniform") {
    dist.type = Type::Uniform;
    dist.a = p1;
    dist.b = p2;
    if (dist.a < 0.0 || !(dist.a <= dist.b)) {
      throw std::invalid_argument("uniform needs 0 <= a <= b");
    }
  } else if (name == "normal") {
    dist.type = Type::Normal;
    dist.mu = p1;
    dist.sigma = p2;
    if (!(dist.sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  } else if (name == "lognormal") {
    dist.type = Type::Lognormal;
    dist.mu = p1;
    dist.sigma = p2;
    if (!(dist.sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  } else {
    throw std::invalid_argument("unknown distribution: " + name);
  }
  return dist;
}

BidProfile sample_profile(const Distribution& dist, std::size_t m,
                          std::uint64_t seed) {
  Rng rng(seed);
  BidProfile profile;
  profile.bids.reserve(m);
  for (std::size_t i = 0; i < m; ++i) profile.bids.push_back(dist.sample(rng));
  return profile;
}

BidProfile sample_truthful_profile(const Distribution& dist, std::size_t m,
                                   std::uint64_t seed) {
  BidProfile profile = sample_profile(dist, m, seed);
  profile.valuations = profile.bids;
  return profile;
}

}  // namespace tfrm
