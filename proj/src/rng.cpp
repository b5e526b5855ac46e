#include "afs/rng.hpp"

#include <cmath>
#include <numbers>

namespace afs::rng {
namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) {
  const unsigned __int128 p =
      static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

inline void round_once(Block& c, Key& k) {
  std::uint64_t hi0, lo0, hi1, lo1;
  mulhilo(kMul0, c[0], hi0, lo0);
  mulhilo(kMul1, c[2], hi1, lo1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  k[0] += kWeyl0;
  k[1] += kWeyl1;
}

inline void increment(Counter& c) {
  if (++c[0] != 0) return;
  if (++c[1] != 0) return;
  if (++c[2] != 0) return;
  ++c[3];
}

}  // namespace

Block philox4x64(const Counter& counter, const Key& key) {
  Block c = counter;
  Key k = key;
  for (int r = 0; r < 10; ++r) round_once(c, k);
  return c;
}

std::uint64_t derive_seed(std::uint64_t seed, Purpose purpose, std::uint64_t a,
                          std::uint64_t b) {
  const Block out = philox4x64(
      {static_cast<std::uint64_t>(purpose), a, b, 0},
      {seed, 0x9E3779B97F4A7C15ULL});
  return out[0];
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : key_{seed, stream_id},
      counter_{0, 0, 0, 0},
      buffer_{},
      buffer_pos_(4),
      cached_gaussian_(0.0),
      has_cached_gaussian_(false) {}

void RandomStream::refill() {
  buffer_ = philox4x64(counter_, key_);
  increment(counter_);
  buffer_pos_ = 0;
}

std::uint64_t RandomStream::next_u64() {
  if (buffer_pos_ == 4) refill();
  return buffer_[buffer_pos_++];
}

double RandomStream::next_unit() {
  // 53-bit mantissa, shifted into (0,1]: max value is exactly 1.0 and the
  // minimum is 2^-53, so downstream log() calls are always finite.
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double RandomStream::next_gaussian() {
  if (has_cached_gaussian_) {
    has_cached_gaussian_ = false;
    return cached_gaussian_;
  }
  const double u1 = next_unit();
  const double u2 = next_unit();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_gaussian_ = radius * std::sin(angle);
  has_cached_gaussian_ = true;
  return radius * std::cos(angle);
}

void RandomStream::fill_gaussian(std::span<double> out) {
  for (double& v : out) v = next_gaussian();
}

}  // namespace afs::rng
