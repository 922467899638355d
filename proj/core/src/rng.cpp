#include "gfzip/rng.hpp"

#include <stdexcept>

namespace gfzip {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_text(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed)
    : key_(splitmix64(seed)), engine_(splitmix64(key_ ^ 0xd1b54a32d192ed03ULL)) {}

RngStream::RngStream(std::uint64_t derived_key, Derived)
    : key_(derived_key), engine_(splitmix64(derived_key ^ 0xd1b54a32d192ed03ULL)) {}

RngStream RngStream::substream(std::uint64_t key) const {
  return RngStream(splitmix64(key_ ^ splitmix64(key + 0x9e3779b97f4a7c15ULL)), Derived{});
}

RngStream RngStream::substream(std::string_view purpose, std::uint64_t key) const {
  return substream(hash_text(purpose) + key);
}

std::uint64_t RngStream::bits() { return engine_(); }

double RngStream::uniform() {
  // 53-bit mantissa shifted to the interval midpoints keeps draws in (0,1).
  return (static_cast<double>(bits() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() { return normal_(engine_); }

double RngStream::exponential() {
  return std::exponential_distribution<double>(1.0)(engine_);
}

double RngStream::gamma(double shape, double scale) {
  if (!(shape > 0) || !(scale > 0)) throw std::invalid_argument("gamma parameters must be positive");
  return std::gamma_distribution<double>(shape, scale)(engine_);
}

std::int64_t RngStream::poisson(double mean) {
  if (!(mean >= 0)) throw std::invalid_argument("poisson mean must be non-negative");
  if (mean == 0) return 0;
  return std::poisson_distribution<std::int64_t>(mean)(engine_);
}

}  // namespace gfzip
