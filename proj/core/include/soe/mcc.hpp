#pragma once

#include <span>
#include <vector>

#include "soe/model.hpp"

namespace soe {

/// Family-wise adjusted p-values, aligned with the input order and capped
/// at 1. Holm uses the step-down running maximum over the sorted family.
/// Throws Error(Parameter) when a p-value lies outside (0, 1].
std::vector<double> adjust_family(std::span<const double> ps, MccMethod method);

}  // namespace soe
