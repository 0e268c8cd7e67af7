/// @file grid.hpp
/// @brief Uniform isotropic node-centred grids on axis-aligned boxes.
///
/// Every field in the lab lives on a Grid: `shape[a]` nodes along axis `a`,
/// one spacing `h` for all axes, and `origin` giving the coordinate of node
/// (0,...,0).  Grids are value types; fields carry a copy and compatibility
/// is checked by exact equality of shape/spacing/origin.

#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace s2lab {

using Index = std::int64_t;

/// Hard cap on the spatial dimension.  Pointwise kernels use fixed-size
/// scratch arrays of this length instead of heap allocation.
inline constexpr int kMaxDim = 10;

struct Grid {
    int dim = 0;
    std::vector<int> shape;      ///< nodes per axis, each >= 5
    double spacing = 0.0;        ///< h > 0, identical for all axes
    std::vector<double> origin;  ///< coordinate of node (0,...,0)

    /// Row-major strides, last axis fastest.
    std::vector<Index> stride;

    Grid() = default;
    Grid(int dim_, std::vector<int> shape_, double spacing_, std::vector<double> origin_);

    /// Box [-half_width, half_width]^dim sampled so that x = 0 is a node.
    /// half_width/h is rounded to the nearest integer number of cells per side.
    static Grid centered_box(int dim, double half_width, double spacing);

    Index size() const { return total_; }

    Index flatten(const int* idx) const {
        Index f = 0;
        for (int a = 0; a < dim; ++a) f += stride[a] * idx[a];
        return f;
    }

    void unflatten(Index flat, int* idx) const {
        for (int a = 0; a < dim; ++a) {
            idx[a] = static_cast<int>(flat / stride[a]);
            flat -= stride[a] * idx[a];
        }
    }

    double coord(int axis, int i) const { return origin[axis] + spacing * i; }

    void node_coords(const int* idx, double* x) const {
        for (int a = 0; a < dim; ++a) x[a] = coord(a, idx[a]);
    }

    /// Flat index of the node at x = 0.  Throws if 0 is not a node (grid
    /// construction already guarantees it is).
    Index origin_node() const;

    bool same_layout(const Grid& o) const;

    /// Validates shape >= 5 per axis, spacing > 0, and that x = 0 lies on a
    /// node of every axis.  Called by the constructor; throws std::invalid_argument.
    void validate() const;

  private:
    Index total_ = 0;
};

/// Walks all flat indices [0, grid.size()) keeping the multi-index in sync.
/// Cheaper than unflatten per node and keeps loops readable.
class GridWalker {
  public:
    explicit GridWalker(const Grid& g) : grid_(g) { idx_.fill(0); }

    bool done() const { return flat_ >= grid_.size(); }
    Index flat() const { return flat_; }
    const int* idx() const { return idx_.data(); }

    void advance() {
        ++flat_;
        for (int a = grid_.dim - 1; a >= 0; --a) {
            if (++idx_[a] < grid_.shape[a]) return;
            idx_[a] = 0;
        }
    }

  private:
    const Grid& grid_;
    Index flat_ = 0;
    std::array<int, kMaxDim> idx_{};
};

}  // namespace s2lab
