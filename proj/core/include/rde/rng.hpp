#pragma once

#include <cstdint>

namespace rde {

/// Deterministic counter-based random stream (splitmix64 core).
///
/// Substreams derived from (seed, index) are independent of evaluation
/// order, so a Monte-Carlo sum over indexed samples produces identical
/// results whether samples are drawn sequentially or concurrently.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  static RngStream substream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in (0, 1); safe for log().
  double uniform_open();
  /// Standard normal via Box-Muller.
  double gaussian();
  /// Standard logistic.
  double logistic();

private:
  std::uint64_t state_;
};

}  // namespace rde
