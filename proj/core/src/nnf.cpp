#include "deepir/nnf.hpp"

#include <algorithm>
#include <cmath>

#include "binary_io.hpp"
#include "deepir/error.hpp"
#include "deepir/urs.hpp"

namespace deepir {

NNField::NNField(int height, int width, int source_height, int source_width, int patch_radius,
                 std::uint64_t seed)
    : height_(height),
      width_(width),
      source_height_(source_height),
      source_width_(source_width),
      patch_radius_(patch_radius),
      seed_(seed) {
  if (height < 1 || width < 1 || source_height < 1 || source_width < 1)
    throw ShapeError("field dimensions must be positive");
  matches_.resize(static_cast<std::size_t>(height) * width);
}

bool NNField::same_dims(const NNField& other) const {
  return height_ == other.height_ && width_ == other.width_ && source_height_ == other.source_height_ &&
         source_width_ == other.source_width_;
}

bool NNField::same_mapping(const NNField& other) const {
  if (!same_dims(other)) return false;
  for (std::size_t k = 0; k < matches_.size(); ++k)
    if (matches_[k].i != other.matches_[k].i || matches_[k].j != other.matches_[k].j) return false;
  return true;
}

namespace {

/// Channel vectors stored contiguously per position (HWC).
struct PositionVectors {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  const double* at(int i, int j) const {
    return data.data() + (static_cast<std::size_t>(i) * width + j) * channels;
  }
};

PositionVectors make_vectors(const FeatureMap& f, bool normalize) {
  PositionVectors v{f.height(), f.width(), f.channels(), {}};
  v.data.resize(f.size());
  for (int i = 0; i < f.height(); ++i) {
    for (int j = 0; j < f.width(); ++j) {
      double* dst = v.data.data() + (static_cast<std::size_t>(i) * f.width() + j) * f.channels();
      double norm2 = 0.0;
      for (int c = 0; c < f.channels(); ++c) {
        dst[c] = f.at(i, j, c);
        norm2 += dst[c] * dst[c];
      }
      if (normalize) {
        const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
        for (int c = 0; c < f.channels(); ++c) dst[c] *= inv;
      }
    }
  }
  return v;
}

double distance(const PositionVectors& q, int qi, int qj, const PositionVectors& s, int si, int sj, int r) {
  double sum = 0.0;
  int n = 0;
  for (int di = -r; di <= r; ++di) {
    const int a = qi + di, b = si + di;
    if (a < 0 || a >= q.height || b < 0 || b >= s.height) continue;
    for (int dj = -r; dj <= r; ++dj) {
      const int x = qj + dj, y = sj + dj;
      if (x < 0 || x >= q.width || y < 0 || y >= s.width) continue;
      const double* u = q.at(a, x);
      const double* v = s.at(b, y);
      double d = 0.0;
      for (int c = 0; c < q.channels; ++c) {
        const double e = u[c] - v[c];
        d += e * e;
      }
      sum += d;
      ++n;
    }
  }
  return sum / n;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// SplitMix64 stream; one independent stream per (seed, position, round).
class Stream {
 public:
  Stream(std::uint64_t seed, int i, int j, int round) {
    state_ = mix64(seed + 0x9e3779b97f4a7c15ULL);
    state_ = mix64(state_ ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)));
    state_ = mix64(state_ ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(j)) << 32));
    state_ = mix64(state_ ^ static_cast<std::uint64_t>(round + 2));
  }

  std::uint64_t next() { return mix64(state_ += 0x9e3779b97f4a7c15ULL); }

  /// Uniform integer in [lo, hi].
  int uniform(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }

 private:
  std::uint64_t state_;
};

int clamp_to(int v, int extent) { return std::clamp(v, 0, extent - 1); }

void check_patchmatch_inputs(const FeatureMap& query, const FeatureMap& source, int r) {
  if (query.channels() != source.channels()) throw ShapeError("patchmatch: channel mismatch");
  if (r < 0) throw ArgumentError("patch radius must be non-negative");
  const int extent = 2 * r + 1;
  if (query.height() < extent || query.width() < extent || source.height() < extent || source.width() < extent)
    throw ShapeError("patchmatch: map smaller than patch");
}

}  // namespace

double patch_distance(const FeatureMap& query, int qi, int qj, const FeatureMap& source, int si, int sj,
                      int patch_radius, bool normalize) {
  const auto q = make_vectors(query, normalize);
  const auto s = make_vectors(source, normalize);
  return distance(q, qi, qj, s, si, sj, patch_radius);
}

NNField patchmatch(const FeatureMap& query, const FeatureMap& source, const PatchMatchOptions& options) {
  const int r = options.patch_radius;
  check_patchmatch_inputs(query, source, r);
  const int h = query.height(), w = query.width();
  const int sh = source.height(), sw = source.width();
  const auto q = make_vectors(query, options.normalize);
  const auto s = make_vectors(source, options.normalize);

  NNField field(h, w, sh, sw, r, options.seed);
  if (options.initial) {
    const NNField& init = *options.initial;
    if (init.height() != h || init.width() != w || init.source_height() != sh || init.source_width() != sw)
      throw ShapeError("patchmatch: initial field dims do not match query/source");
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        field.at(i, j).i = clamp_to(init.at(i, j).i, sh);
        field.at(i, j).j = clamp_to(init.at(i, j).j, sw);
      }
  } else {
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        Stream rng(options.seed, i, j, -1);
        field.at(i, j).i = rng.uniform(0, sh - 1);
        field.at(i, j).j = rng.uniform(0, sw - 1);
      }
  }
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      Match& m = field.at(i, j);
      m.distance = distance(q, i, j, s, m.i, m.j, r);
    }

  auto try_candidate = [&](Match& best, int qi, int qj, int ci, int cj) {
    if (ci == best.i && cj == best.j) return;
    const double d = distance(q, qi, qj, s, ci, cj, r);
    if (d < best.distance) best = {ci, cj, d};
  };

  const int max_radius = std::max(sh, sw);
  for (int round = 0; round < options.iterations; ++round) {
    const bool forward = round % 2 == 0;
    const int step = forward ? 1 : -1;
    for (int ii = 0; ii < h; ++ii) {
      const int i = forward ? ii : h - 1 - ii;
      for (int jj = 0; jj < w; ++jj) {
        const int j = forward ? jj : w - 1 - jj;
        Match& best = field.at(i, j);

        const int ni = i - step, nj = j - step;
        if (nj >= 0 && nj < w) {
          const Match& n = field.at(i, nj);
          try_candidate(best, i, j, n.i, clamp_to(n.j + step, sw));
        }
        if (ni >= 0 && ni < h) {
          const Match& n = field.at(ni, j);
          try_candidate(best, i, j, clamp_to(n.i + step, sh), n.j);
        }

        Stream rng(options.seed, i, j, round);
        for (int radius = max_radius; radius >= 1; radius /= 2) {
          const int lo_i = std::max(0, best.i - radius), hi_i = std::min(sh - 1, best.i + radius);
          const int lo_j = std::max(0, best.j - radius), hi_j = std::min(sw - 1, best.j + radius);
          const int ci = rng.uniform(lo_i, hi_i);
          const int cj = rng.uniform(lo_j, hi_j);
          try_candidate(best, i, j, ci, cj);
        }
      }
    }
  }
  return field;
}

NNField patchmatch(const FeatureMap& query, const FeatureMap& source, int patch_radius, int iterations,
                   std::uint64_t seed) {
  PatchMatchOptions options;
  options.patch_radius = patch_radius;
  options.iterations = iterations;
  options.seed = seed;
  return patchmatch(query, source, options);
}

void recompute_distances(NNField& field, const FeatureMap& query, const FeatureMap& source, bool normalize) {
  if (query.height() != field.height() || query.width() != field.width() ||
      source.height() != field.source_height() || source.width() != field.source_width())
    throw ShapeError("field dims do not match query/source maps");
  if (query.channels() != source.channels()) throw ShapeError("query/source channel mismatch");
  const auto q = make_vectors(query, normalize);
  const auto s = make_vectors(source, normalize);
  for (int i = 0; i < field.height(); ++i)
    for (int j = 0; j < field.width(); ++j) {
      Match& m = field.at(i, j);
      m.distance = distance(q, i, j, s, m.i, m.j, field.patch_radius());
    }
}

NNField fuse(const NNField& a, const NNField& b, double alpha, const FeatureMap& query, const FeatureMap& source,
             bool normalize) {
  if (!a.same_dims(b)) throw ShapeError("fuse: field dimensions differ");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("alpha must be in [0,1]");
  NNField out(a.height(), a.width(), a.source_height(), a.source_width(), a.patch_radius(), a.seed());
  for (int i = 0; i < a.height(); ++i)
    for (int j = 0; j < a.width(); ++j) {
      const Match& x = a.at(i, j);
      const Match& y = b.at(i, j);
      const double fi = alpha * x.i + (1.0 - alpha) * y.i;
      const double fj = alpha * x.j + (1.0 - alpha) * y.j;
      out.at(i, j).i = clamp_to(static_cast<int>(std::floor(fi + 0.5)), a.source_height());
      out.at(i, j).j = clamp_to(static_cast<int>(std::floor(fj + 0.5)), a.source_width());
    }
  recompute_distances(out, query, source, normalize);
  return out;
}

FeatureMap warp(const FeatureMap& source, const NNField& field) {
  if (source.height() != field.source_height() || source.width() != field.source_width())
    throw ShapeError("warp: source map does not match field");
  FeatureMap out(field.height(), field.width(), source.channels(), source.layer());
  for (int c = 0; c < source.channels(); ++c)
    for (int i = 0; i < field.height(); ++i)
      for (int j = 0; j < field.width(); ++j) {
        const Match& m = field.at(i, j);
        out.at(i, j, c) = source.at(m.i, m.j, c);
      }
  return out;
}

Image vote_reconstruct(const Image& source, const NNField& field, int patch_radius) {
  if (source.height() != field.source_height() || source.width() != field.source_width())
    throw ShapeError("vote: source image does not match field");
  if (patch_radius < 0) throw ArgumentError("patch radius must be non-negative");
  const int h = field.height(), w = field.width();
  const int sh = source.height(), sw = source.width();
  Image out(h, w);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const Match& center = field.at(i, j);
      for (int c = 0; c < Image::kChannels; ++c) {
        // Accumulate deviations from the center vote so that unanimous votes
        // reproduce the source value exactly.
        const double ref = source.at(center.i, center.j, c);
        double dev = 0.0;
        int n = 0;
        for (int di = -patch_radius; di <= patch_radius; ++di) {
          const int xi = i + di;
          if (xi < 0 || xi >= h) continue;
          for (int dj = -patch_radius; dj <= patch_radius; ++dj) {
            const int xj = j + dj;
            if (xj < 0 || xj >= w) continue;
            const Match& m = field.at(xi, xj);
            const int si = m.i - di, sj = m.j - dj;
            if (si < 0 || si >= sh || sj < 0 || sj >= sw) continue;
            dev += source.at(si, sj, c) - ref;
            ++n;
          }
        }
        out.at(i, j, c) = ref + dev / n;
      }
    }
  }
  return out;
}

NNField identity_field(int height, int width) {
  NNField f(height, width, height, width);
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j) f.at(i, j) = {i, j, 0.0};
  return f;
}

NNField gather_field(int height, const ColumnSelection& selection) {
  NNField f(height, selection.target_width(), height, selection.source_width);
  for (int i = 0; i < height; ++i)
    for (int k = 0; k < selection.target_width(); ++k) f.at(i, k) = {i, selection.preserved[k], 0.0};
  return f;
}

NNField transpose_field(const NNField& field) {
  NNField out(field.width(), field.height(), field.source_width(), field.source_height(), field.patch_radius(),
              field.seed());
  for (int i = 0; i < field.height(); ++i)
    for (int j = 0; j < field.width(); ++j) {
      const Match& m = field.at(i, j);
      out.at(j, i) = {m.j, m.i, m.distance};
    }
  return out;
}

NNField upsample_field(const NNField& field, int height, int width, int source_height, int source_width) {
  NNField out(height, width, source_height, source_width, field.patch_radius(), field.seed());
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j) {
      const Match& m = field.at(std::min(i / 2, field.height() - 1), std::min(j / 2, field.width() - 1));
      out.at(i, j).i = clamp_to(2 * m.i + i % 2, source_height);
      out.at(i, j).j = clamp_to(2 * m.j + j % 2, source_width);
    }
  return out;
}

namespace {
constexpr std::string_view kFieldMagic = "DIRN";
constexpr std::uint32_t kFieldVersion = 1;
}  // namespace

void write_field_dump(const std::filesystem::path& path, const NNField& field) {
  detail::ByteWriter w;
  w.put_bytes(kFieldMagic);
  w.put_u32(kFieldVersion);
  w.put_u32(static_cast<std::uint32_t>(field.height()));
  w.put_u32(static_cast<std::uint32_t>(field.width()));
  w.put_u32(static_cast<std::uint32_t>(field.source_height()));
  w.put_u32(static_cast<std::uint32_t>(field.source_width()));
  w.put_u32(static_cast<std::uint32_t>(field.patch_radius()));
  for (const Match& m : field.matches()) {
    w.put_i32(m.i);
    w.put_i32(m.j);
    w.put_f32(static_cast<float>(m.distance));
  }
  detail::write_file(path, w.bytes());
}

NNField read_field_dump(const std::filesystem::path& path) {
  auto bytes = detail::read_file(path);
  detail::ByteReader r(bytes);
  if (r.get_bytes(4) != kFieldMagic) throw FormatError("bad magic in field dump " + path.string());
  if (r.get_u32() != kFieldVersion) throw FormatError("unsupported field dump version");
  const int h = static_cast<int>(r.get_u32());
  const int w = static_cast<int>(r.get_u32());
  const int sh = static_cast<int>(r.get_u32());
  const int sw = static_cast<int>(r.get_u32());
  const int radius = static_cast<int>(r.get_u32());
  if (h < 1 || w < 1 || sh < 1 || sw < 1) throw FormatError("field dump has empty dimensions");
  if (r.remaining() != static_cast<std::size_t>(h) * w * 12) throw FormatError("field dump payload size mismatch");
  NNField field(h, w, sh, sw, radius);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      Match& m = field.at(i, j);
      m.i = r.get_i32();
      m.j = r.get_i32();
      m.distance = r.get_f32();
      if (m.i < 0 || m.i >= sh || m.j < 0 || m.j >= sw) throw FormatError("field dump coordinate out of range");
    }
  return field;
}

}  // namespace deepir
