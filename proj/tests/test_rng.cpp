#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mtrl/errors.hpp"
#include "mtrl/rng.hpp"

namespace mtrl {
namespace {

// Known-answer vectors for Philox4x32-10 published with Random123.
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(Rng::philox({0, 0, 0, 0}, {0, 0}),
            (Rng::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(Rng::philox({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                        {0xffffffffu, 0xffffffffu}),
            (Rng::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(Rng::philox({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                        {0xa4093822u, 0x299f31d0u}),
            (Rng::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Rng, SameStreamSameDraws) {
  const StreamId id{9, 3, StreamPhase::kNoise, 17, 4};
  Rng a(id);
  Rng b(id);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(Rng, StreamFieldsSeparateStreams) {
  const StreamId base{9, 3, StreamPhase::kNoise, 17, 4};
  std::vector<StreamId> others(5, base);
  others[0].seed = 10;
  others[1].trial = 4;
  others[2].phase = StreamPhase::kActions;
  others[3].round = 18;
  others[4].task = 5;
  Rng ref(base);
  const std::uint64_t first = ref.next_u64();
  for (const auto& id : others) {
    Rng r(id);
    EXPECT_NE(r.next_u64(), first);
  }
}

TEST(Rng, TrialLimit) {
  EXPECT_THROW(Rng(StreamId{1, 1u << 30, StreamPhase::kInstance, 0, 0}), InvalidArgument);
}

TEST(Rng, UniformInUnitInterval) {
  Rng r(StreamId{1, 0, StreamPhase::kInstance, 0, 0});
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 0.005);
}

TEST(Rng, NormalMoments) {
  Rng r(StreamId{2, 0, StreamPhase::kActions, 0, 0});
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s1 += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  EXPECT_NEAR(s1 / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.015);
  EXPECT_NEAR(s4 / n, 3.0, 0.1);
}

TEST(Rng, NormalTailFrequency) {
  Rng r(StreamId{3, 0, StreamPhase::kActions, 0, 0});
  const int n = 200000;
  int beyond2 = 0;
  for (int i = 0; i < n; ++i)
    if (std::abs(r.normal()) > 2.0) ++beyond2;
  // P(|Z| > 2) = 0.0455
  EXPECT_NEAR(static_cast<double>(beyond2) / n, 0.0455, 0.003);
}

TEST(Rng, UniformIndexCoversRangeEvenly) {
  Rng r(StreamId{4, 0, StreamPhase::kExploration, 0, 0});
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[r.uniform_index(7)];
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
  EXPECT_LT(chi2, 22.46);  // chi-square(6) at p = 0.001
  EXPECT_THROW(r.uniform_index(0), InvalidArgument);
  EXPECT_EQ(r.uniform_index(1), 0u);
}

}  // namespace
}  // namespace mtrl
