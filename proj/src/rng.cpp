#include "mtrl/rng.hpp"

#include <cmath>
#include <limits>

#include <boost/random/normal_distribution.hpp>

#include "mtrl/errors.hpp"

namespace mtrl {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Rng::Block Rng::philox(Block c, Key k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

Rng::Rng(const StreamId& id)
    : key_{static_cast<std::uint32_t>(id.seed), static_cast<std::uint32_t>(id.seed >> 32)},
      counter_{0u, id.task, id.round,
               (id.trial << 2) | static_cast<std::uint32_t>(id.phase)} {
  if (id.trial >= (1u << 30)) throw InvalidArgument("Rng: trial index must be < 2^30");
}

std::uint32_t Rng::next_u32() {
  if (buffered_ == 0) {
    buffer_ = philox(counter_, key_);
    if (++counter_[0] == 0) throw NumericalFailure("Rng: stream exhausted (2^32 blocks)");
    buffered_ = 4;
  }
  return buffer_[4 - buffered_--];
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t hi = next_u32();
  return (hi << 32) | next_u32();
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  // Stateless apart from its parameters, so a fresh one per call is free.
  boost::random::normal_distribution<double> dist;
  return dist(*this);
}

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw InvalidArgument("Rng::uniform_index: empty range");
  const std::uint64_t range = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<std::size_t>(x % range);
}

}  // namespace mtrl
