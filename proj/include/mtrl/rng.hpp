#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace mtrl {

// Which part of a trial a stream feeds. Part of the stream id.
enum class StreamPhase : std::uint32_t {
  kInstance = 0,
  kActions = 1,
  kExploration = 2,
  kNoise = 3,
};

// Every random draw in a simulation belongs to exactly one stream, named by
// (seed, trial, phase, round, task). Any draw can be regenerated in isolation
// from its stream id.
struct StreamId {
  std::uint64_t seed = 0;
  std::uint32_t trial = 0;
  StreamPhase phase = StreamPhase::kInstance;
  std::uint32_t round = 0;
  std::uint32_t task = 0;
};

// Philox4x32-10 (Salmon et al., SC'11). Counter layout:
//   c0 = block index within the stream, c1 = task, c2 = round,
//   c3 = trial << 2 | phase;  key = seed.
// Normals use the Box-Muller transform so sequences do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  using Block = std::array<std::uint32_t, 4>;
  // UniformRandomBitGenerator interface over next_u32.
  using result_type = std::uint32_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xFFFFFFFFu; }
  result_type operator()() { return next_u32(); }

  using Key = std::array<std::uint32_t, 2>;

  explicit Rng(const StreamId& id);

  // One Philox4x32-10 block; exposed for known-answer tests.
  static Block philox(Block counter, Key key);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Standard normal by the ziggurat method, driven by this stream.
  double normal();
  // Unbiased uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n);

 private:
  Key key_;
  Block counter_;
  Block buffer_{};
  int buffered_ = 0;
};

}  // namespace mtrl
