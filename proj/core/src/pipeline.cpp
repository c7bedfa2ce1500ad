#include "deepir/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "deepir/error.hpp"
#include "deepir/image_io.hpp"

namespace deepir {

void RetargetConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ArgumentError("epsilon must be in (0,1]");
  for (double a : alphas)
    if (!(a >= 0.0 && a <= 1.0)) throw ArgumentError("alpha must be in [0,1]");
  if (patchmatch_iterations < 0) throw ArgumentError("patchmatch iterations must be non-negative");
  if (feature_patch_radius < 0 || vote_patch_radius < 0) throw ArgumentError("patch radius must be non-negative");
  if (inversion.max_iterations < 1) throw ArgumentError("max_iterations must be at least 1");
  if (!(inversion.tolerance > 0.0)) throw ArgumentError("tolerance must be positive");
}

std::array<int, kPyramidDepth> level_targets(int extent, double epsilon) {
  std::array<int, kPyramidDepth> t{};
  t[0] = retargeted_extent(epsilon, extent);
  if (t[0] < 1) throw ArgumentError("epsilon leaves no columns");
  for (int l = 1; l < kPyramidDepth; ++l) t[l] = (t[l - 1] + 1) / 2;
  return t;
}

namespace {

using Clock = std::chrono::steady_clock;

class StageClock {
 public:
  StageClock(std::vector<StageTiming>& sink, std::optional<double> timeout) : sink_(sink), timeout_(timeout) {}

  void finish(const std::string& stage) {
    const auto now = Clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - start_).count();
    start_ = now;
    bool merged = false;
    for (auto& t : sink_)
      if (t.stage == stage) {
        t.millis += ms;
        merged = true;
      }
    if (!merged) sink_.push_back({stage, ms});
    if (timeout_ && ms > *timeout_ * 1000.0) throw Error("stage '" + stage + "' exceeded its timeout");
  }

 private:
  std::vector<StageTiming>& sink_;
  std::optional<double> timeout_;
  Clock::time_point start_ = Clock::now();
};

std::uint64_t level_seed(std::uint64_t seed, int level) {
  return seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(level + 1));
}

struct LevelDims {
  int height;
  int width;
};

/// Dumps and previews written when a dump directory is configured.
class Dumper {
 public:
  Dumper(const RetargetConfig& cfg, const Image& original, const std::array<LevelDims, kPyramidDepth>& source,
         const std::array<LevelDims, kPyramidDepth>& target)
      : dir_(cfg.dump_dir), original_(original), source_(source), target_(target),
        vote_radius_(cfg.vote_patch_radius) {
    if (dir_) std::filesystem::create_directories(*dir_);
  }

  void features(int level, const std::string& stage, const FeatureMap& f) const {
    if (dir_) write_feature_dump(*dir_ / name(level, stage, ".dirf"), f);
  }

  void field(int level, const std::string& stage, const NNField& field) const {
    if (!dir_) return;
    write_field_dump(*dir_ / name(level, stage, ".dirn"), field);
    write_png(*dir_ / name(level, stage, ".png"), preview(level, field));
  }

  void loss(int level, const std::vector<double>& trace) const {
    if (dir_) write_loss_trace(*dir_ / name(level, "loss", ".csv"), trace);
  }

 private:
  static std::string name(int level, const std::string& stage, const char* ext) {
    return std::to_string(level) + "_" + stage + ext;
  }

  /// Renders a level field at pixel resolution by repeated 2x upsampling.
  Image preview(int level, NNField f) const {
    for (int l = level - 1; l >= 1; --l) {
      const auto& s = source_[l - 1];
      const auto& t = target_[l - 1];
      f = upsample_field(f, t.height, t.width, s.height, s.width);
    }
    return vote_reconstruct(original_, f, vote_radius_);
  }

  std::optional<std::filesystem::path> dir_;
  const Image& original_;
  const std::array<LevelDims, kPyramidDepth>& source_;
  const std::array<LevelDims, kPyramidDepth>& target_;
  int vote_radius_;
};

}  // namespace

RetargetResult retarget(const Image& original, const WeightsBundle& w, const RetargetConfig& cfg) {
  cfg.validate();
  RetargetResult result;
  StageClock clock(result.timings, cfg.stage_timeout_seconds);

  const FeaturePyramid pyramid = extract_pyramid(original, w);
  clock.finish("extract");

  const bool columns = cfg.axis == Axis::Columns;
  const auto targets = level_targets(columns ? original.width() : original.height(), cfg.epsilon);
  std::array<LevelDims, kPyramidDepth> source_dims{}, target_dims{};
  for (int l = 1; l <= kPyramidDepth; ++l) {
    const FeatureMap& f = pyramid.level(l);
    source_dims[l - 1] = {f.height(), f.width()};
    target_dims[l - 1] = columns ? LevelDims{f.height(), targets[l - 1]} : LevelDims{targets[l - 1], f.width()};
  }
  const Dumper dump(cfg, original, source_dims, target_dims);

  OperatorOutput top = apply_feature_operator(cfg.op, pyramid.level(4), targets[3], cfg.axis);
  FeatureMap current = std::move(top.features);  // retargeted features at the level being refined
  NNField coarse_field = std::move(top.mapping);
  clock.finish("resample");
  dump.features(4, "original", pyramid.level(4));
  dump.features(4, "resampled", current);
  dump.field(4, "resampled", coarse_field);

  for (int level = kPyramidDepth; level >= 2; --level) {
    const int lower = level - 1;
    const FeatureMap& source = pyramid.level(lower);

    OperatorOutput resampled = apply_feature_operator(cfg.op, source, targets[lower - 1], cfg.axis);
    resampled.features.set_layer(lower);
    clock.finish("resample");

    const FeatureMap init =
        cfg.inversion.init == InversionInit::UrsResized
            ? resampled.features
            : random_init(resampled.features, cfg.inversion.random_lo, cfg.inversion.random_hi,
                          level_seed(cfg.seed, lower));
    InversionResult inverted = invert(current, w, init, cfg.inversion);
    inverted.features.set_layer(lower);
    clock.finish("inversion");

    const int radius = fitting_patch_radius(inverted.features, source, cfg.feature_patch_radius);
    const NNField start = upsample_field(coarse_field, inverted.features.height(), inverted.features.width(),
                                         source.height(), source.width());
    PatchMatchOptions options;
    options.patch_radius = radius;
    options.iterations = cfg.patchmatch_iterations;
    options.seed = level_seed(cfg.seed, lower);
    options.normalize = cfg.normalize_features;
    options.initial = &start;
    const NNField inverted_field = patchmatch(inverted.features, source, options);

    NNField resampled_field;
    if (cfg.search_resampled) {
      PatchMatchOptions search = options;
      search.initial = nullptr;
      resampled_field = patchmatch(resampled.features, source, search);
    } else {
      resampled_field = std::move(resampled.mapping);
      recompute_distances(resampled_field, resampled.features, source, cfg.normalize_features);
    }

    NNField fused =
        fuse(inverted_field, resampled_field, cfg.alphas[lower - 1], inverted.features, source, cfg.normalize_features);
    current = warp(source, fused);
    current.set_layer(lower);
    clock.finish("matching");

    dump.features(lower, "original", source);
    dump.features(lower, "inverted", inverted.features);
    dump.features(lower, "resampled", resampled.features);
    dump.features(lower, "fused", current);
    dump.field(lower, "inverted", inverted_field);
    dump.field(lower, "resampled", resampled_field);
    dump.field(lower, "fused", fused);
    dump.loss(lower, inverted.loss_trace);
    clock.finish("dump");

    result.loss_traces[lower - 1] = std::move(inverted.loss_trace);
    result.per_layer_fields[lower - 1] = fused;
    coarse_field = std::move(fused);
  }
  // The level-1 tap has stride 1, so the finest field is already pixel-level.
  result.pixel_map = result.per_layer_fields[0];
  result.image = vote_reconstruct(original, result.pixel_map, cfg.vote_patch_radius);
  clock.finish("vote");

  const bool measurable = result.image.height() >= kMinImageExtent && result.image.width() >= kMinImageExtent;
  if (cfg.compute_metrics && measurable) {
    result.metrics = evaluate(pyramid, extract_pyramid(result.image, w));
    clock.finish("metrics");
  }
  return result;
}

}  // namespace deepir
