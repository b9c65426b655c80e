#pragma once

#include <cmath>

namespace metacast::detail {

// Position in node units along one axis. Values within 1e-9 of a node snap onto it,
// so positions produced by GridSpec::node_position map back to exact integers.
inline double node_coordinate(double r, double lo, double cell) {
    const double t = (r - lo) / cell;
    const double nearest = std::round(t);
    return std::abs(t - nearest) < 1e-9 ? nearest : t;
}

}  // namespace metacast::detail
