#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "deepir/tensor.hpp"

namespace deepir {

struct ColumnSelection;

struct Match {
  int i = 0;
  int j = 0;
  double distance = 0.0;

  friend bool operator==(const Match&, const Match&) = default;
};

/// Dense correspondence from every position of a query map into a source map.
class NNField {
 public:
  NNField() = default;
  NNField(int height, int width, int source_height, int source_width, int patch_radius = 1,
          std::uint64_t seed = 0);

  int height() const { return height_; }
  int width() const { return width_; }
  int source_height() const { return source_height_; }
  int source_width() const { return source_width_; }
  int patch_radius() const { return patch_radius_; }
  std::uint64_t seed() const { return seed_; }

  Match& at(int i, int j) { return matches_[static_cast<std::size_t>(i) * width_ + j]; }
  const Match& at(int i, int j) const { return matches_[static_cast<std::size_t>(i) * width_ + j]; }
  const std::vector<Match>& matches() const { return matches_; }

  bool same_mapping(const NNField& other) const;
  bool same_dims(const NNField& other) const;

  friend bool operator==(const NNField&, const NNField&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int source_height_ = 0;
  int source_width_ = 0;
  int patch_radius_ = 1;
  std::uint64_t seed_ = 0;
  std::vector<Match> matches_;
};

struct PatchMatchOptions {
  int patch_radius = 1;
  int iterations = 5;
  std::uint64_t seed = 0;
  /// L2-normalize every position's channel vector before comparing patches.
  bool normalize = true;
  /// Starting field instead of a random one; must match query/source dims.
  const NNField* initial = nullptr;
};

/// Patch distance: mean over the patch offsets that are inside both maps of
/// the squared L2 difference between (optionally normalized) channel vectors.
double patch_distance(const FeatureMap& query, int qi, int qj, const FeatureMap& source, int si, int sj,
                      int patch_radius, bool normalize = true);

/// Randomized PatchMatch: random (or supplied) initialization, then
/// `iterations` rounds of scan-order propagation (reversed on odd rounds)
/// and exponentially shrinking random search.
NNField patchmatch(const FeatureMap& query, const FeatureMap& source, const PatchMatchOptions& options);
NNField patchmatch(const FeatureMap& query, const FeatureMap& source, int patch_radius, int iterations,
                   std::uint64_t seed);

/// Recomputes every stored distance from the field's mapping.
void recompute_distances(NNField& field, const FeatureMap& query, const FeatureMap& source, bool normalize = true);

/// Per-position coordinate blend round(alpha * a + (1 - alpha) * b), clamped
/// into the source, with distances recomputed between `query` and `source`.
NNField fuse(const NNField& a, const NNField& b, double alpha, const FeatureMap& query, const FeatureMap& source,
             bool normalize = true);

/// out(i, j) = source(field(i, j)).
FeatureMap warp(const FeatureMap& source, const NNField& field);

/// Patch voting: each output pixel p averages O(field(x) + (p - x)) over the
/// positions x of the (2r+1)^2 window around p whose terms fall inside both
/// images.
Image vote_reconstruct(const Image& source, const NNField& field, int patch_radius = 2);

NNField identity_field(int height, int width);
/// (i, k) -> (i, preserved[k]) for a column gather of a height x source_width map.
NNField gather_field(int height, const ColumnSelection& selection);
/// Swaps the roles of rows and columns in both query and source coordinates.
NNField transpose_field(const NNField& field);
/// Coarse-to-fine transfer: (i, j) -> 2 * field(i / 2, j / 2) + (i % 2, j % 2), clamped.
NNField upsample_field(const NNField& field, int height, int width, int source_height, int source_width);

/// DIRN debugging dump: "DIRN", u32 version, u32 h, u32 w, u32 source_h,
/// u32 source_w, u32 patch_radius, then per position i32 i, i32 j, f32 distance.
void write_field_dump(const std::filesystem::path& path, const NNField& field);
NNField read_field_dump(const std::filesystem::path& path);

}  // namespace deepir
