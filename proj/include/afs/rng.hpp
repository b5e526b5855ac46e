#pragma once

#include <array>
#include <cstdint>
#include <span>

// Counter-based randomness.  Every stochastic draw in the system flows
// through Philox4x64-10 keyed by (seed, stream_id), so a (seed, purpose)
// pair fully determines a stream regardless of evaluation order — branches
// simulated in parallel and sequentially produce identical numbers.
//
// The core block function is the pure Philox bijection; test vectors are
// frozen in tests/test_rng.cpp (cross-checked against an independent
// implementation).  Gaussians come from Box-Muller over (0,1] uniforms, so
// log(u) is always finite.

namespace afs::rng {

using Counter = std::array<std::uint64_t, 4>;
using Key = std::array<std::uint64_t, 2>;
using Block = std::array<std::uint64_t, 4>;

// Philox4x64-10: maps a 256-bit counter under a 128-bit key to 256 bits of
// output.  Stateless and bijective in the counter.
Block philox4x64(const Counter& counter, const Key& key);

// Named sub-stream purposes.  Streams for distinct purposes never collide
// because the purpose is folded into the stream id via derive_seed.
enum class Purpose : std::uint64_t {
  kPrior = 1,        // initial noise draw
  kExploreNoise = 2, // branch perturbation noise
  kRetry = 3,        // per-attempt reseeding
  kTrial = 4,        // per-trial seeds inside a batch
  kStage = 5,        // per-decision-point search seeds
};

// Deterministically mixes (seed, purpose, a, b) into a new 64-bit seed by
// running one Philox block.  Used to split independent streams: e.g. the
// noise for explore-branch j at stage s is seeded by
// derive_seed(seed, Purpose::kExploreNoise, s, j).
std::uint64_t derive_seed(std::uint64_t seed, Purpose purpose,
                          std::uint64_t a = 0, std::uint64_t b = 0);

// A deterministic stream of uniforms/gaussians: key = (seed, stream_id),
// counter starts at zero and increments per block.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t next_u64();

  // Uniform on (0,1]: ((x >> 11) + 1) * 2^-53.  Never returns 0.
  double next_unit();

  // Standard normal via Box-Muller (pairs cached).
  double next_gaussian();

  void fill_gaussian(std::span<double> out);

 private:
  void refill();

  Key key_;
  Counter counter_;
  Block buffer_;
  int buffer_pos_;  // 4 = empty
  double cached_gaussian_;
  bool has_cached_gaussian_;
};

}  // namespace afs::rng
