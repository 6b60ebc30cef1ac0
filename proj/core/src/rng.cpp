#include "rde/rng.hpp"

#include <cmath>

namespace rde {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

}  // namespace

RngStream RngStream::substream(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t a = mix64(seed + kGamma);
  const std::uint64_t b = mix64(index * 0xD1B54A32D192ED03ULL + 0x2545F4914F6CDD1DULL);
  return RngStream(a ^ b);
}

std::uint64_t RngStream::next_u64() {
  state_ += kGamma;
  return mix64(state_);
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::gaussian() {
  const double u1 = uniform_open();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double RngStream::logistic() {
  const double u = uniform_open();
  return std::log(u / (1.0 - u));
}

}  // namespace rde
