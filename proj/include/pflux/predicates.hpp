#pragma once

#include "pflux/geometry.hpp"

namespace pflux::predicates {

/// Sign of the orientation determinant of (a, b, c): > 0 counter-clockwise.
/// Exact: falls back to rational arithmetic when the float filter is inconclusive.
int orient2d(const Point& a, const Point& b, const Point& c);

/// > 0 when d lies strictly inside the circumcircle of the CCW triangle (a, b, c).
int incircle(const Point& a, const Point& b, const Point& c, const Point& d);

}  // namespace pflux::predicates
