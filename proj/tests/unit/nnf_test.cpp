#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "deepir/error.hpp"
#include "deepir/nnf.hpp"
#include "deepir/urs.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace deepir {
namespace {

using testing::random_features;

NNField random_field(int h, int w, int sh, int sw, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  NNField f(h, w, sh, sw);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) f.at(i, j) = {static_cast<int>(rng() % sh), static_cast<int>(rng() % sw), 0.0};
  return f;
}

TEST(PatchDistance, MatchesDirectEvaluation) {
  const FeatureMap q = random_features(6, 7, 3, 1);
  const FeatureMap s = random_features(5, 9, 3, 2);
  for (bool normalize : {true, false})
    for (int r = 0; r <= 2; ++r)
      for (auto [qi, qj, si, sj] : {std::array{0, 0, 4, 8}, {3, 3, 2, 4}, {5, 6, 0, 0}, {2, 0, 4, 5}})
        EXPECT_NEAR(patch_distance(q, qi, qj, s, si, sj, r, normalize),
                    oracle::direct_patch_distance(q, qi, qj, s, si, sj, r, normalize), 1e-12);
}

TEST(PatchDistance, NormalizationIgnoresScale) {
  const FeatureMap q = random_features(4, 4, 5, 3);
  FeatureMap s = q;
  for (double& v : s.data()) v *= 7.5;
  EXPECT_NEAR(patch_distance(q, 1, 2, s, 1, 2, 1, true), 0.0, 1e-15);
  EXPECT_GT(patch_distance(q, 1, 2, s, 1, 2, 1, false), 1.0);
}

TEST(PatchMatch, SelfMatchReachesZero) {
  const FeatureMap f = random_features(12, 12, 4, 5);
  const NNField field = patchmatch(f, f, 1, 8, 3);
  for (const Match& m : field.matches()) EXPECT_EQ(m.distance, 0.0);
}

TEST(PatchMatch, ConstantMapsHaveZeroDistance) {
  FeatureMap q(6, 8, 3), s(7, 5, 3);
  for (auto& v : q.data()) v = 2.0;
  for (auto& v : s.data()) v = 0.5;
  const NNField field = patchmatch(q, s, 1, 2, 0);
  for (const Match& m : field.matches()) EXPECT_EQ(m.distance, 0.0);
}

TEST(PatchMatch, StoredDistancesMatchMapping) {
  const FeatureMap q = random_features(10, 9, 4, 6);
  const FeatureMap s = random_features(8, 11, 4, 7);
  const NNField field = patchmatch(q, s, 1, 3, 11);
  for (int i = 0; i < q.height(); ++i)
    for (int j = 0; j < q.width(); ++j) {
      const Match& m = field.at(i, j);
      ASSERT_GE(m.i, 0);
      ASSERT_LT(m.i, s.height());
      ASSERT_GE(m.j, 0);
      ASSERT_LT(m.j, s.width());
      EXPECT_NEAR(m.distance, oracle::direct_patch_distance(q, i, j, s, m.i, m.j, 1), 1e-12);
    }
}

TEST(PatchMatch, NeverWorseThanInitialization) {
  const FeatureMap q = random_features(12, 12, 4, 8);
  const FeatureMap s = random_features(12, 10, 4, 9);
  const NNField init = patchmatch(q, s, 1, 0, 21);
  NNField previous = init;
  for (int iters = 1; iters <= 5; ++iters) {
    const NNField field = patchmatch(q, s, 1, iters, 21);
    for (std::size_t k = 0; k < field.matches().size(); ++k) {
      ASSERT_LE(field.matches()[k].distance, init.matches()[k].distance);
      ASSERT_LE(field.matches()[k].distance, previous.matches()[k].distance);
    }
    previous = field;
  }
}

TEST(PatchMatch, NeverBeatsExhaustiveOptimum) {
  const FeatureMap q = random_features(8, 8, 3, 10);
  const FeatureMap s = random_features(8, 6, 3, 11);
  const auto best = oracle::exhaustive_nnf_distances(q, s, 1);
  const NNField field = patchmatch(q, s, 1, 5, 4);
  for (std::size_t k = 0; k < best.size(); ++k) EXPECT_GE(field.matches()[k].distance, best[k] - 1e-12);
}

TEST(PatchMatch, FindsStructuredCorrespondence) {
  // Query is a column gather of a smooth source. Away from the junction
  // between query columns 5 and 6 every query patch has an exact copy in the
  // source, which propagation can follow.
  FeatureMap s(16, 20, 3);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 20; ++j) s.at(i, j, c) = std::sin(0.3 * i + 0.2 * j * (c + 1)) + 1.5 + 0.1 * c;
  ColumnSelection sel;
  sel.source_width = 20;
  for (int j = 0; j < 20; ++j) (j >= 6 && j < 14 ? sel.removed : sel.preserved).push_back(j);
  const FeatureMap q = resample(s, sel);
  for (std::uint64_t seed : {1, 2, 3}) {
    const NNField field = patchmatch(q, s, 1, 5, seed);
    const auto best = oracle::exhaustive_nnf_distances(q, s, 1);
    int optimal = 0;
    for (int i = 0; i < q.height(); ++i)
      for (int j = 0; j < q.width(); ++j) {
        const double d = field.at(i, j).distance;
        optimal += d <= best[i * q.width() + j] + 1e-9;
        if (j != 5 && j != 6) EXPECT_LE(d, 1e-12) << "seed " << seed << " at " << i << "," << j;
      }
    EXPECT_GE(optimal, static_cast<int>(0.8 * best.size())) << "seed " << seed;
  }
}


TEST(PatchMatch, DeterministicPerSeed) {
  const FeatureMap q = random_features(9, 9, 4, 12);
  const FeatureMap s = random_features(9, 7, 4, 13);
  EXPECT_EQ(patchmatch(q, s, 1, 4, 99), patchmatch(q, s, 1, 4, 99));
  EXPECT_FALSE(patchmatch(q, s, 1, 1, 99).same_mapping(patchmatch(q, s, 1, 1, 100)));
}

TEST(PatchMatch, InitialFieldIsKeptWhenOptimal) {
  const FeatureMap f = random_features(10, 10, 4, 14);
  const NNField id = identity_field(10, 10);
  PatchMatchOptions options;
  options.initial = &id;
  const NNField field = patchmatch(f, f, options);
  EXPECT_TRUE(field.same_mapping(id));
}

TEST(PatchMatch, Errors) {
  const FeatureMap q = random_features(6, 6, 3, 1);
  EXPECT_THROW(patchmatch(q, random_features(6, 6, 2, 1), 1, 1, 0), ShapeError);
  EXPECT_THROW(patchmatch(q, random_features(2, 6, 3, 1), 1, 1, 0), ShapeError);
  EXPECT_THROW(patchmatch(random_features(6, 2, 3, 1), q, 1, 1, 0), ShapeError);
  EXPECT_THROW(patchmatch(q, q, -1, 1, 0), ArgumentError);
  const NNField wrong = identity_field(5, 6);
  PatchMatchOptions options;
  options.initial = &wrong;
  EXPECT_THROW(patchmatch(q, q, options), ShapeError);
}

TEST(Fuse, EndpointsAndMidpoint) {
  const FeatureMap q = random_features(6, 6, 3, 1);
  const FeatureMap s = random_features(10, 10, 3, 2);
  const NNField a = random_field(6, 6, 10, 10, 3);
  const NNField b = random_field(6, 6, 10, 10, 4);
  EXPECT_TRUE(fuse(a, b, 1.0, q, s).same_mapping(a));
  EXPECT_TRUE(fuse(a, b, 0.0, q, s).same_mapping(b));

  NNField x = a, y = b;
  x.at(2, 3) = {2, 4, 0.0};
  y.at(2, 3) = {4, 8, 0.0};
  const NNField mid = fuse(x, y, 0.5, q, s);
  EXPECT_EQ(mid.at(2, 3).i, 3);
  EXPECT_EQ(mid.at(2, 3).j, 6);
  EXPECT_NEAR(mid.at(2, 3).distance, oracle::direct_patch_distance(q, 2, 3, s, 3, 6, 1), 1e-12);
}

TEST(Fuse, RoundsHalfUp) {
  const FeatureMap q = random_features(2, 2, 1, 1, 0.5, 1.0);
  const FeatureMap s = random_features(10, 10, 1, 2, 0.5, 1.0);
  NNField a(2, 2, 10, 10, 0), b(2, 2, 10, 10, 0);
  a.at(0, 0) = {3, 2, 0};
  b.at(0, 0) = {4, 7, 0};
  const NNField f = fuse(a, b, 0.5, q, s);  // 3.5 -> 4, 4.5 -> 5
  EXPECT_EQ(f.at(0, 0).i, 4);
  EXPECT_EQ(f.at(0, 0).j, 5);
}

TEST(Fuse, SelfFusionIsIdentity) {
  const FeatureMap q = random_features(7, 5, 3, 1);
  const FeatureMap s = random_features(7, 9, 3, 2);
  const NNField a = patchmatch(q, s, 1, 2, 5);
  for (double alpha : {0.0, 0.3, 0.7, 1.0}) EXPECT_EQ(fuse(a, a, alpha, q, s), a);
}

TEST(Fuse, Errors) {
  const FeatureMap q = random_features(6, 6, 3, 1);
  const NNField a = random_field(6, 6, 6, 6, 1);
  EXPECT_THROW(fuse(a, random_field(6, 6, 6, 7, 1), 0.5, q, q), ShapeError);
  EXPECT_THROW(fuse(a, a, 1.5, q, q), ArgumentError);
  EXPECT_THROW(fuse(a, a, -0.1, q, q), ArgumentError);
}

TEST(Warp, IdentityConstantAndSpotChecks) {
  const FeatureMap s = random_features(8, 9, 3, 1, 0, 1, 2);
  EXPECT_EQ(warp(s, identity_field(8, 9)), s);

  NNField zero(4, 5, 8, 9);
  const FeatureMap c = warp(s, zero);
  for (int ch = 0; ch < 3; ++ch)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 5; ++j) EXPECT_EQ(c.at(i, j, ch), s.at(0, 0, ch));

  const NNField r = random_field(6, 7, 8, 9, 3);
  const FeatureMap w = warp(s, r);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 10; ++k) {
    const int i = rng() % 6, j = rng() % 7, ch = rng() % 3;
    EXPECT_EQ(w.at(i, j, ch), s.at(r.at(i, j).i, r.at(i, j).j, ch));
  }
  EXPECT_THROW(warp(random_features(8, 8, 3, 1), r), ShapeError);
}

TEST(Vote, IdentityIsExact) {
  const Image img = testing::random_image(17, 23, 3);
  for (int r : {0, 1, 2, 3}) EXPECT_EQ(vote_reconstruct(img, identity_field(17, 23), r), img);
}

TEST(Vote, ConstantSourceGivesConstantOutput) {
  const Image img(20, 20, 77.0);
  const Image out = vote_reconstruct(img, random_field(12, 9, 20, 20, 1), 2);
  for (double v : out.data()) EXPECT_EQ(v, 77.0);
}

TEST(Vote, SingleShiftedEntryMatchesDirectSum) {
  Image img(9, 9, 10.0);
  img.at(4, 4, 0) = 200.0;
  img.at(4, 4, 1) = 50.0;
  NNField field = identity_field(9, 9);
  field.at(3, 5) = {4, 4, 0.0};
  const Image out = vote_reconstruct(img, field, 2);
  const Image ref = oracle::direct_vote(img, field, 2);
  for (std::size_t k = 0; k < out.data().size(); ++k) EXPECT_NEAR(out.data()[k], ref.data()[k], 1e-12);
  EXPECT_NE(out, img);
}

TEST(Vote, RandomFieldsMatchDirectSum) {
  const Image img = testing::random_image(15, 13, 8);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const NNField field = random_field(11, 7, 15, 13, seed);
    const Image out = vote_reconstruct(img, field, 2);
    const Image ref = oracle::direct_vote(img, field, 2);
    for (std::size_t k = 0; k < out.data().size(); ++k) ASSERT_NEAR(out.data()[k], ref.data()[k], 1e-9);
  }
}

TEST(Vote, Errors) {
  const Image img = testing::random_image(5, 5, 1);
  EXPECT_THROW(vote_reconstruct(img, identity_field(5, 6), 2), ShapeError);
  EXPECT_THROW(vote_reconstruct(img, identity_field(5, 5), -1), ArgumentError);
}

TEST(FieldBuilders, GatherTransposeUpsample) {
  ColumnSelection sel{{1, 3}, {0, 2, 4}, 5};
  const NNField g = gather_field(2, sel);
  EXPECT_EQ(g.width(), 3);
  EXPECT_EQ(g.source_width(), 5);
  EXPECT_EQ(g.at(1, 2).i, 1);
  EXPECT_EQ(g.at(1, 2).j, 4);

  const NNField t = transpose_field(g);
  EXPECT_EQ(t.height(), 3);
  EXPECT_EQ(t.width(), 2);
  EXPECT_EQ(t.source_height(), 5);
  EXPECT_EQ(t.at(2, 1).i, 4);
  EXPECT_EQ(t.at(2, 1).j, 1);
  EXPECT_EQ(transpose_field(t), g);

  EXPECT_TRUE(upsample_field(identity_field(4, 5), 8, 10, 8, 10).same_mapping(identity_field(8, 10)));
  EXPECT_TRUE(upsample_field(identity_field(4, 5), 7, 9, 7, 9).same_mapping(identity_field(7, 9)));
  NNField coarse(1, 1, 3, 3);
  coarse.at(0, 0) = {2, 2, 0};
  const NNField fine = upsample_field(coarse, 2, 2, 5, 5);
  EXPECT_EQ(fine.at(1, 1).i, 4);
  EXPECT_EQ(fine.at(1, 1).j, 4);
  const NNField clamped = upsample_field(coarse, 2, 2, 4, 4);
  EXPECT_EQ(clamped.at(1, 1).i, 3);
}

TEST(FieldDump, RoundTripAndErrors) {
  testing::TempDir dir;
  const FeatureMap q = random_features(5, 6, 2, 1);
  const FeatureMap s = random_features(7, 4, 2, 2);
  const NNField f = patchmatch(q, s, 1, 2, 3);
  write_field_dump(dir / "f.dirn", f);
  const NNField g = read_field_dump(dir / "f.dirn");
  EXPECT_TRUE(g.same_mapping(f));
  EXPECT_EQ(g.patch_radius(), 1);
  for (std::size_t k = 0; k < f.matches().size(); ++k)
    EXPECT_EQ(g.matches()[k].distance, static_cast<float>(f.matches()[k].distance));

  std::filesystem::resize_file(dir / "f.dirn", 40);
  EXPECT_THROW(read_field_dump(dir / "f.dirn"), FormatError);
  {
    std::ofstream os(dir / "x.dirn", std::ios::binary);
    os << "NOPE0000000000000000000000000000";
  }
  EXPECT_THROW(read_field_dump(dir / "x.dirn"), FormatError);
}

}  // namespace
}  // namespace deepir
