#include "s2lab/grid.hpp"

#include <cmath>

namespace s2lab {

Grid::Grid(int dim_, std::vector<int> shape_, double spacing_, std::vector<double> origin_)
    : dim(dim_), shape(std::move(shape_)), spacing(spacing_), origin(std::move(origin_)) {
    validate();
    stride.assign(dim, 1);
    for (int a = dim - 2; a >= 0; --a) stride[a] = stride[a + 1] * shape[a + 1];
    total_ = stride.empty() ? 0 : stride[0] * shape[0];
}

Grid Grid::centered_box(int dim, double half_width, double spacing) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("Grid: dim out of range");
    if (!(half_width > 0) || !(spacing > 0))
        throw std::invalid_argument("Grid: half_width and spacing must be positive");
    const int m = static_cast<int>(std::lround(half_width / spacing));
    if (m < 2) throw std::invalid_argument("Grid: box too coarse, need >= 2 cells per half-width");
    std::vector<int> shape(dim, 2 * m + 1);
    std::vector<double> origin(dim, -m * spacing);
    return Grid(dim, std::move(shape), spacing, std::move(origin));
}

Index Grid::origin_node() const {
    Index f = 0;
    for (int a = 0; a < dim; ++a) {
        const double pos = -origin[a] / spacing;
        const int i = static_cast<int>(std::lround(pos));
        f += stride[a] * i;
    }
    return f;
}

bool Grid::same_layout(const Grid& o) const {
    return dim == o.dim && shape == o.shape && spacing == o.spacing && origin == o.origin;
}

void Grid::validate() const {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("Grid: dim out of range");
    if (static_cast<int>(shape.size()) != dim || static_cast<int>(origin.size()) != dim)
        throw std::invalid_argument("Grid: shape/origin size mismatch");
    if (!(spacing > 0)) throw std::invalid_argument("Grid: spacing must be positive");
    for (int a = 0; a < dim; ++a) {
        if (shape[a] < 5)
            throw std::invalid_argument("Grid: need at least 5 nodes per axis (second-order stencils)");
        const double pos = -origin[a] / spacing;
        const double nearest = std::lround(pos);
        if (std::abs(pos - nearest) > 1e-9)
            throw std::invalid_argument("Grid: x = 0 must coincide with a node on axis " + std::to_string(a));
        if (nearest < 0 || nearest >= shape[a])
            throw std::invalid_argument("Grid: x = 0 lies outside the box on axis " + std::to_string(a));
    }
}

}  // namespace s2lab
