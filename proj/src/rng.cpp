#include "fairpost/rng.hpp"

#include <cmath>

#include "fairpost/errors.hpp"

namespace fairpost {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) {
  // Mix the stream id into the seeding chain so nearby ids decorrelate.
  std::uint64_t chain = seed;
  std::uint64_t mixed = splitmix64(chain) ^ (stream_id * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
  for (auto& word : state_) {
    word = splitmix64(mixed);
  }
  // All-zero state is invalid for xoshiro; the seeding above cannot produce
  // it for all four words at once, but keep the guard cheap and explicit.
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) {
    state_[0] = 0x9e3779b97f4a7c15ULL;
  }
}

std::uint64_t RngStream::next_bits() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform01() {
  return static_cast<double>(next_bits() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open01() {
  double u = uniform01();
  while (u == 0.0) {
    u = uniform01();
  }
  return u;
}

std::uint64_t RngStream::uniform_below(std::uint64_t n) {
  if (n == 0) {
    throw InvalidInputError("uniform_below: n must be positive");
  }
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t bits = next_bits();
  while (bits >= limit) {
    bits = next_bits();
  }
  return bits % n;
}

double RngStream::laplace(double scale) {
  const double v = uniform_open01() - 0.5;  // in (-1/2, 1/2)
  const double mag = -scale * std::log(1.0 - 2.0 * std::abs(v));
  return v < 0.0 ? -mag : mag;
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  cached_normal_ = v * factor;
  has_cached_normal_ = true;
  return u * factor;
}

double RngStream::gamma(double alpha) {
  if (!(alpha > 0.0)) {
    throw InvalidInputError("gamma: alpha must be positive");
  }
  if (alpha < 1.0) {
    // Boost: Gamma(a) = Gamma(a+1) * U^(1/a).
    const double g = gamma(alpha + 1.0);
    return g * std::pow(uniform_open01(), 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_open01();
    if (u < 1.0 - 0.0331 * x * x * x * x) {
      return d * v;
    }
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v;
    }
  }
}

std::vector<double> RngStream::dirichlet(const std::vector<double>& alpha) {
  std::vector<double> draws(alpha.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    draws[i] = gamma(alpha[i]);
    total += draws[i];
  }
  if (total <= 0.0) {
    // All gammas underflowed (extremely small alphas); fall back to a vertex.
    draws.assign(alpha.size(), 0.0);
    draws[0] = 1.0;
    return draws;
  }
  for (auto& d : draws) {
    d /= total;
  }
  return draws;
}

int RngStream::categorical(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) {
    total += w;
  }
  if (!(total > 0.0)) {
    throw InvalidInputError("categorical: weights must have positive sum");
  }
  const double u = uniform01() * total;
  double cum = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) {
      cum += weights[i];
      last_positive = static_cast<int>(i);
      if (u < cum) {
        return last_positive;
      }
    }
  }
  return last_positive;
}

}  // namespace fairpost
