#include "deepir/feature_operator.hpp"

#include "deepir/baselines.hpp"
#include "deepir/error.hpp"
#include "deepir/urs.hpp"

namespace deepir {

std::string_view operator_name(FeatureOperator op) {
  switch (op) {
    case FeatureOperator::Urs:
      return "urs";
    case FeatureOperator::Scl:
      return "scl";
    case FeatureOperator::Crop:
      return "cr";
    case FeatureOperator::SeamCarving:
      return "sc";
    case FeatureOperator::ColumnRemoval:
      return "colrm";
  }
  return "unknown";
}

std::optional<FeatureOperator> parse_operator(std::string_view name) {
  for (FeatureOperator op : kAllFeatureOperators)
    if (operator_name(op) == name) return op;
  return std::nullopt;
}

namespace {

OperatorOutput urs_output(const FeatureMap& f, int target, Axis axis) {
  const int extent = axis == Axis::Columns ? f.width() : f.height();
  if (target < 1 || target > extent) throw ArgumentError("target extent must be in [1, source extent]");
  ColumnSelection sel = urs_selection(f, target, axis);
  if (axis == Axis::Columns) return {resample(f, sel), gather_field(f.height(), sel)};
  const FeatureMap t = transpose_spatial(f);
  return {transpose_spatial(resample(t, sel)), transpose_field(gather_field(t.height(), sel))};
}

template <typename R>
OperatorOutput from_retargeted(R&& r) {
  return {std::move(r.result), std::move(r.mapping)};
}

}  // namespace

OperatorOutput apply_feature_operator(FeatureOperator op, const FeatureMap& f, int target, Axis axis) {
  switch (op) {
    case FeatureOperator::Urs:
      return urs_output(f, target, axis);
    case FeatureOperator::Scl:
      return from_retargeted(scl(f, target, axis));
    case FeatureOperator::Crop:
      return from_retargeted(crop(f, target, axis));
    case FeatureOperator::SeamCarving:
      return from_retargeted(seam_carve(f, target, axis));
    case FeatureOperator::ColumnRemoval:
      return from_retargeted(column_removal(f, target, axis));
  }
  throw ArgumentError("unknown feature operator");
}

}  // namespace deepir
