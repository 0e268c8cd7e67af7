/// @file fields.hpp
/// @brief Scalar, vector and symmetric-matrix fields plus region masks.
///
/// Storage is a flat std::vector<double> in grid row-major order.  Vector and
/// matrix fields interleave their per-node components (component index
/// fastest), which keeps pointwise kernels on one cache line per node.
/// Symmetric matrices are packed upper-triangular row by row:
/// (0,0),(0,1),...,(0,n-1),(1,1),...,(n-1,n-1).

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "s2lab/grid.hpp"

namespace s2lab {

/// Packed index of entry (i,j), i <= j, of a symmetric dim x dim matrix.
inline int sym_index(int dim, int i, int j) {
    if (i > j) { const int t = i; i = j; j = t; }
    return i * dim - i * (i - 1) / 2 + (j - i);
}

inline int sym_size(int dim) { return dim * (dim + 1) / 2; }

struct ScalarField {
    Grid grid;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const Grid& g, double fill = 0.0) : grid(g), v(g.size(), fill) {}

    double& operator[](Index i) { return v[i]; }
    double operator[](Index i) const { return v[i]; }
    Index size() const { return grid.size(); }
};

struct VectorField {
    Grid grid;
    std::vector<double> v;  ///< v[node*dim + c]

    VectorField() = default;
    explicit VectorField(const Grid& g, double fill = 0.0) : grid(g), v(g.size() * g.dim, fill) {}

    double* at(Index node) { return v.data() + node * grid.dim; }
    const double* at(Index node) const { return v.data() + node * grid.dim; }
};

struct SymmetricMatrixField {
    Grid grid;
    std::vector<double> v;  ///< v[node*sym_size(dim) + packed]

    SymmetricMatrixField() = default;
    explicit SymmetricMatrixField(const Grid& g, double fill = 0.0)
        : grid(g), v(g.size() * sym_size(g.dim), fill) {}

    double* at(Index node) { return v.data() + node * sym_size(grid.dim); }
    const double* at(Index node) const { return v.data() + node * sym_size(grid.dim); }
};

/// Full (not necessarily symmetric) matrix field, row-major per node.
struct MatrixField {
    Grid grid;
    std::vector<double> v;  ///< v[node*dim*dim + i*dim + j]

    MatrixField() = default;
    explicit MatrixField(const Grid& g, double fill = 0.0)
        : grid(g), v(g.size() * g.dim * g.dim, fill) {}

    double* at(Index node) { return v.data() + node * grid.dim * grid.dim; }
    const double* at(Index node) const { return v.data() + node * grid.dim * grid.dim; }
};

struct RegionMask {
    Grid grid;
    std::vector<std::uint8_t> m;

    RegionMask() = default;
    explicit RegionMask(const Grid& g, bool fill = false)
        : grid(g), m(g.size(), fill ? 1 : 0) {}

    bool contains(Index i) const { return m[i] != 0; }
    Index count() const {
        Index c = 0;
        for (auto b : m) c += b;
        return c;
    }
};

/// How the derivative entries of a FieldBundle were produced.  Estimate
/// checks accept either, so discretisation error can be isolated from the
/// inequality under test.
enum class DerivProvenance { finite_difference, analytic };

/// A scalar field together with its gradient and Hessian.
struct FieldBundle {
    ScalarField value;
    VectorField grad;
    SymmetricMatrixField hess;
    DerivProvenance provenance = DerivProvenance::finite_difference;
};

inline void require_same_layout(const Grid& a, const Grid& b, const char* what) {
    if (!a.same_layout(b)) throw std::invalid_argument(std::string("grid mismatch: ") + what);
}

}  // namespace s2lab
