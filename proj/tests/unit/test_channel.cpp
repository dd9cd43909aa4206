#include <gtest/gtest.h>

#include <filesystem>

#include <gcsit/channel.hpp>
#include <gcsit/errors.hpp>

using namespace gcsit;

namespace {
const SystemDims kBase{3, 5, 3, 2};
}

TEST(SystemDims, Validation) {
  EXPECT_NO_THROW(kBase.validate());
  EXPECT_THROW((SystemDims{1, 5, 3, 2}.validate()), DimensionError);
  EXPECT_THROW((SystemDims{3, 0, 3, 1}.validate()), DimensionError);
  EXPECT_THROW((SystemDims{3, 5, 3, 4}.validate()), DimensionError);
  EXPECT_EQ(kBase.stack_rows(), 6);
  EXPECT_TRUE(kBase.stack_is_tall());
  EXPECT_FALSE((SystemDims{2, 5, 3, 1}.stack_is_tall()));
}

TEST(GenerateChannelSet, ShapesAndCount) {
  Rng rng(1);
  const ChannelSet cs = generate_channel_set(kBase, rng);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_EQ(cs.at(i, j).rows(), 3);
      EXPECT_EQ(cs.at(i, j).cols(), 5);
    }
  }
  EXPECT_THROW(cs.at(3, 0), DimensionError);
}

TEST(GenerateChannelSet, DeterministicPerSeed) {
  Rng a(7);
  Rng b(7);
  Rng c(8);
  const ChannelSet x = generate_channel_set(kBase, a);
  const ChannelSet y = generate_channel_set(kBase, b);
  const ChannelSet z = generate_channel_set(kBase, c);
  EXPECT_EQ(x.at(1, 2), y.at(1, 2));
  EXPECT_NE(x.at(1, 2), z.at(1, 2));
}

TEST(GenerateChannelSet, UnitVarianceEntries) {
  // CN(0,1): E|h|^2 = 1 and each part has variance 1/2.
  Rng rng(3);
  const SystemDims dims{2, 5, 5, 1};
  double power = 0.0;
  double re_sq = 0.0;
  long count = 0;
  while (count < 100000) {
    const ChannelSet cs = generate_channel_set(dims, rng);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        power += cs.at(i, j).squaredNorm();
        re_sq += cs.at(i, j).real().squaredNorm();
        count += 25;
      }
    }
  }
  EXPECT_NEAR(power / count, 1.0, 0.02);
  EXPECT_NEAR(re_sq / count, 0.5, 0.01);
}

TEST(StackedInterference, BlockOrderSkipsOwnUser) {
  Rng rng(4);
  const ChannelSet cs = generate_channel_set(kBase, rng);
  const CMatrix s2 = stacked_interference_matrix(cs, 2);
  ASSERT_EQ(s2.rows(), 6);
  ASSERT_EQ(s2.cols(), 5);
  EXPECT_EQ(CMatrix(s2.topRows(3)), cs.at(0, 2));
  EXPECT_EQ(CMatrix(s2.bottomRows(3)), cs.at(1, 2));
  const CMatrix s0 = stacked_interference_matrix(cs, 0);
  EXPECT_EQ(CMatrix(s0.topRows(3)), cs.at(1, 0));
  EXPECT_EQ(CMatrix(s0.bottomRows(3)), cs.at(2, 0));
  for (int j = 0; j < 3; ++j) {
    const CMatrix s = stacked_interference_matrix(cs, j);
    for (int i = 0; i < 3; ++i) {
      if (i == j) continue;
      EXPECT_EQ(CMatrix(s.middleRows(stack_block_index(i, j) * 3, 3)), cs.at(i, j));
    }
  }
  EXPECT_THROW(stacked_interference_matrix(cs, 3), DimensionError);
}

TEST(StackedInterference, TwoUsersIsTheCrossChannel) {
  Rng rng(5);
  const ChannelSet cs = generate_channel_set(SystemDims{2, 2, 3, 1}, rng);
  EXPECT_EQ(stacked_interference_matrix(cs, 0), cs.at(1, 0));
  EXPECT_EQ(stacked_interference_matrix(cs, 1), cs.at(0, 1));
}

TEST(ChannelSet, RejectsWrongBlocks) {
  std::vector<CMatrix> blocks(9, CMatrix::Zero(3, 5));
  EXPECT_NO_THROW(ChannelSet(kBase, blocks));
  blocks[4] = CMatrix::Zero(3, 4);
  EXPECT_THROW(ChannelSet(kBase, blocks), DimensionError);
  blocks.pop_back();
  EXPECT_THROW(ChannelSet(kBase, blocks), DimensionError);
}

TEST(ChannelJson, RoundTripIsExact) {
  Rng rng(6);
  const ChannelSet cs = generate_channel_set(kBase, rng);
  const ChannelSet back = channel_set_from_json(channel_set_to_json(cs));
  EXPECT_EQ(back.dims(), kBase);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_EQ(back.at(i, j), cs.at(i, j));
  }
  const auto path = std::filesystem::temp_directory_path() / "gcsit_channel_roundtrip.json";
  save_channel_set(cs, path);
  EXPECT_EQ(load_channel_set(path).at(2, 1), cs.at(2, 1));
  std::filesystem::remove(path);
}

TEST(ChannelJson, MalformedInputThrows) {
  EXPECT_THROW(channel_set_from_json("{\"K\": 3}"), Error);
  EXPECT_THROW(channel_set_from_json("not json"), Error);
}
