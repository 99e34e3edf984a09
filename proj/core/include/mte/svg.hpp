#pragma once

#include <string>

#include "mte/second_stage.hpp"

namespace mte {

// Minimal self-contained SVG line plot of an MTE curve: the point-estimate
// polyline plus a shaded confidence band when bounds are present.
std::string curve_to_svg(const MTECurve& curve, const std::string& title = "marginal response");

}  // namespace mte
