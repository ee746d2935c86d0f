#include "dro/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace dro {

std::uint64_t RngStream::next_u64() {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_normal() {
  for (;;) {
    const double u = 2.0 * next_double() - 1.0;
    const double v = 2.0 * next_double() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

double RngStream::next_gamma(double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("next_gamma: alpha must be > 0");
  if (alpha < 1.0) {
    const double x = next_gamma(alpha + 1.0);
    double u = next_double();
    while (u <= 0.0) u = next_double();  // avoid 0^(1/alpha) underflow to exact 0
    return x * std::pow(u, 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = next_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = next_double();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

RngStream make_rng(std::uint64_t base_seed, std::uint64_t replication, std::uint64_t n) {
  return RngStream(base_seed + 17ULL * replication + n);
}

}  // namespace dro
