/// @file masks.hpp
/// @brief Region masks, midpoint quadrature, flood fill and Lipschitz proxies.

#pragma once

#include <functional>

#include "s2lab/fields.hpp"

namespace s2lab {

struct IntegralResult {
    double value = 0.0;
    bool empty_mask = false;  ///< warning flag: no nodes were active
};

/// Midpoint-rule integral  sum_{mask} f * h^dim.
IntegralResult integrate(const ScalarField& f, const RegionMask& mask);

/// Nodes with |x - center| <= radius (center defaults to the origin).
RegionMask ball_mask(const Grid& grid, double radius);
RegionMask ball_mask(const Grid& grid, double radius, const std::vector<double>& center);

/// Nodes at least `margin` node layers away from every box face.
RegionMask box_interior_mask(const Grid& grid, int margin);

/// Generic predicate mask; fn receives the node coordinates.
RegionMask mask_from_predicate(const Grid& grid, const std::function<bool(const double*)>& fn);

RegionMask mask_and(const RegionMask& a, const RegionMask& b);
RegionMask mask_or(const RegionMask& a, const RegionMask& b);
bool mask_subset(const RegionMask& inner, const RegionMask& outer);

/// Face-adjacency connected component of `mask` containing `seed` (flat
/// index).  Throws std::invalid_argument if the seed is not in the mask.
RegionMask connected_component(const RegionMask& mask, Index seed);

struct LipschitzReport {
    double sup = 0.0;  ///< max |f| over the mask
    double lip = 0.0;  ///< max |grad f|_2 over the mask (FD gradient)
};

/// C^{0,1} proxy on a mask: sup-norm plus max FD gradient magnitude.
LipschitzReport lipschitz_norm(const ScalarField& f, const RegionMask& mask);

}  // namespace s2lab
