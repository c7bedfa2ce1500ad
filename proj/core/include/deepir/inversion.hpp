#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "deepir/tensor.hpp"
#include "deepir/weights.hpp"

namespace deepir {

enum class Optimizer { Lbfgs, GradientDescent };
enum class InversionInit { UrsResized, RandomUniform };

struct InversionConfig {
  int max_iterations = 200;
  /// Stop when the relative loss decrease of an iteration falls below this.
  double tolerance = 1e-5;
  Optimizer optimizer = Optimizer::Lbfgs;
  int history = 10;
  InversionInit init = InversionInit::UrsResized;
  double random_lo = 0.0;
  double random_hi = 1.0;
  /// Clamp iterates to be non-negative (ablation; off by default).
  bool project_nonneg = false;
};

struct InversionResult {
  FeatureMap features;
  /// Loss at the starting point followed by the loss after every accepted step.
  std::vector<double> loss_trace;
  int iterations = 0;
  bool converged = false;
};

/// Finds level L-1 features whose forward image under the backbone matches
/// `target` (level L) in squared Frobenius norm, starting from `init`.
InversionResult invert(const FeatureMap& target, const WeightsBundle& w, const FeatureMap& init,
                       const InversionConfig& cfg = {});

/// Uniform random starting point in [lo, hi) with the shape of `like`.
FeatureMap random_init(const FeatureMap& like, double lo, double hi, std::uint64_t seed);

/// CSV with header "iteration,loss".
void write_loss_trace(const std::filesystem::path& path, std::span<const double> trace);

}  // namespace deepir
