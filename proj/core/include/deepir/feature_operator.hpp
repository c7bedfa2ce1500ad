#pragma once

#include <optional>
#include <string_view>

#include "deepir/nnf.hpp"
#include "deepir/tensor.hpp"

namespace deepir {

/// Resizing operator applied to each feature level inside the pipeline.
enum class FeatureOperator { Urs, Scl, Crop, SeamCarving, ColumnRemoval };

inline constexpr FeatureOperator kAllFeatureOperators[] = {FeatureOperator::Urs, FeatureOperator::Scl,
                                                           FeatureOperator::Crop, FeatureOperator::SeamCarving,
                                                           FeatureOperator::ColumnRemoval};

/// Short names used on the command line and in score files: urs, scl, cr, sc, colrm.
std::string_view operator_name(FeatureOperator op);
std::optional<FeatureOperator> parse_operator(std::string_view name);

/// Resized features together with the exact map from every resized position
/// back to the position of `f` it came from.
struct OperatorOutput {
  FeatureMap features;
  NNField mapping;
};

OperatorOutput apply_feature_operator(FeatureOperator op, const FeatureMap& f, int target_extent, Axis axis);

}  // namespace deepir
