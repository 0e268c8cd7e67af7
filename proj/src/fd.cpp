#include "s2lab/fd.hpp"

#include "s2lab/parallel.hpp"

namespace s2lab {

namespace {

// Applies a 1-D stencil along `axis` for every line of the grid.  `kernel`
// receives (line base pointer, stride, node count, output base pointer) and
// must fill the whole line.
template <class Kernel>
void for_each_line(const ScalarField& f, int axis, ScalarField& out, Kernel&& kernel) {
    const Grid& g = f.grid;
    const Index n_axis = g.shape[axis];
    const Index stride = g.stride[axis];
    const Index lines = g.size() / n_axis;

    // Enumerate the base node of every line: all indices with idx[axis] == 0.
    // A line is identified by splitting the flat index around `axis`.
    const Index inner = stride;  // product of shapes after axis

    parallel_for(lines, [&](Index lo, Index hi) {
        for (Index line = lo; line < hi; ++line) {
            const Index o = line / inner;
            const Index i = line % inner;
            const Index base = o * (n_axis * inner) + i;
            kernel(f.v.data() + base, stride, n_axis, out.v.data() + base);
        }
    });
}

}  // namespace

ScalarField fd_derivative(const ScalarField& f, int axis) {
    if (axis < 0 || axis >= f.grid.dim) throw std::invalid_argument("fd_derivative: axis out of range");
    ScalarField out(f.grid);
    const double inv2h = 1.0 / (2.0 * f.grid.spacing);
    for_each_line(f, axis, out, [inv2h](const double* p, Index s, Index n, double* q) {
        q[0] = (-3.0 * p[0] + 4.0 * p[s] - p[2 * s]) * inv2h;
        for (Index i = 1; i + 1 < n; ++i) q[i * s] = (p[(i + 1) * s] - p[(i - 1) * s]) * inv2h;
        q[(n - 1) * s] = (3.0 * p[(n - 1) * s] - 4.0 * p[(n - 2) * s] + p[(n - 3) * s]) * inv2h;
    });
    return out;
}

ScalarField fd_second_derivative(const ScalarField& f, int axis) {
    if (axis < 0 || axis >= f.grid.dim) throw std::invalid_argument("fd_second_derivative: axis out of range");
    ScalarField out(f.grid);
    const double invh2 = 1.0 / (f.grid.spacing * f.grid.spacing);
    for_each_line(f, axis, out, [invh2](const double* p, Index s, Index n, double* q) {
        q[0] = (2.0 * p[0] - 5.0 * p[s] + 4.0 * p[2 * s] - p[3 * s]) * invh2;
        for (Index i = 1; i + 1 < n; ++i)
            q[i * s] = (p[(i + 1) * s] - 2.0 * p[i * s] + p[(i - 1) * s]) * invh2;
        q[(n - 1) * s] =
            (2.0 * p[(n - 1) * s] - 5.0 * p[(n - 2) * s] + 4.0 * p[(n - 3) * s] - p[(n - 4) * s]) * invh2;
    });
    return out;
}

VectorField fd_gradient(const ScalarField& f) {
    VectorField out(f.grid);
    const int dim = f.grid.dim;
    for (int a = 0; a < dim; ++a) {
        ScalarField da = fd_derivative(f, a);
        parallel_for(f.size(), [&](Index lo, Index hi) {
            for (Index i = lo; i < hi; ++i) out.v[i * dim + a] = da.v[i];
        });
    }
    return out;
}

SymmetricMatrixField fd_hessian(const ScalarField& f) {
    const int dim = f.grid.dim;
    SymmetricMatrixField out(f.grid);
    const int nsym = sym_size(dim);
    for (int a = 0; a < dim; ++a) {
        ScalarField daa = fd_second_derivative(f, a);
        const int k = sym_index(dim, a, a);
        parallel_for(f.size(), [&](Index lo, Index hi) {
            for (Index i = lo; i < hi; ++i) out.v[i * nsym + k] = daa.v[i];
        });
    }
    for (int b = 0; b < dim; ++b) {
        ScalarField db;
        bool have_db = false;
        for (int a = 0; a < b; ++a) {
            if (!have_db) {
                db = fd_derivative(f, b);
                have_db = true;
            }
            ScalarField dab = fd_derivative(db, a);
            const int k = sym_index(dim, a, b);
            parallel_for(f.size(), [&](Index lo, Index hi) {
                for (Index i = lo; i < hi; ++i) out.v[i * nsym + k] = dab.v[i];
            });
        }
    }
    return out;
}

ScalarField fd_laplacian(const ScalarField& f) {
    ScalarField out(f.grid);
    for (int a = 0; a < f.grid.dim; ++a) {
        ScalarField daa = fd_second_derivative(f, a);
        for (Index i = 0; i < f.size(); ++i) out.v[i] += daa.v[i];
    }
    return out;
}

FieldBundle make_fd_bundle(const ScalarField& u) {
    FieldBundle b;
    b.value = u;
    b.grad = fd_gradient(u);
    b.hess = fd_hessian(u);
    b.provenance = DerivProvenance::finite_difference;
    return b;
}

}  // namespace s2lab
