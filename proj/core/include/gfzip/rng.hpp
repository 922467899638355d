#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gfzip {

/// Seeded random stream with substreams derivable by (purpose, key) pairs.
/// A stream is single-owner: concurrent sampling requires independent
/// substreams. The same seed and call sequence reproduce the same draws.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  RngStream(RngStream&&) = default;
  RngStream& operator=(RngStream&&) = default;
  RngStream(const RngStream&) = delete;
  RngStream& operator=(const RngStream&) = delete;

  /// Derives an independent child stream; does not disturb this stream.
  RngStream substream(std::uint64_t key) const;
  RngStream substream(std::string_view purpose, std::uint64_t key = 0) const;

  std::uint64_t bits();
  double uniform();  // strictly inside (0, 1)
  double normal();
  double exponential();  // rate 1
  double gamma(double shape, double scale);
  std::int64_t poisson(double mean);

 private:
  struct Derived {};
  RngStream(std::uint64_t derived_key, Derived);

  std::uint64_t key_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace gfzip
