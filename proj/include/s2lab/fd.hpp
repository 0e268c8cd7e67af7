/// @file fd.hpp
/// @brief Second-order finite-difference gradient and Hessian on uniform grids.
///
/// Interior nodes use central stencils; the two outermost layers per axis fall
/// back to one-sided stencils of the same order, so derivatives are defined on
/// the whole box.  All stencils are exact on polynomials of degree <= 2
/// (checked in the tests to 1e-12), and mixed derivatives are built by
/// composing the two one-dimensional first-derivative operators, which keeps
/// O(h^2) accuracy uniformly.

#pragma once

#include "s2lab/fields.hpp"

namespace s2lab {

/// d/dx_axis with central (f_{i+1}-f_{i-1})/2h in the interior and the
/// 3-point one-sided stencil (-3f_0+4f_1-f_2)/2h on the faces.
ScalarField fd_derivative(const ScalarField& f, int axis);

/// d^2/dx_axis^2 with central (f_{i+1}-2f_i+f_{i-1})/h^2 in the interior and
/// the 4-point one-sided stencil (2f_0-5f_1+4f_2-f_3)/h^2 on the faces.
ScalarField fd_second_derivative(const ScalarField& f, int axis);

VectorField fd_gradient(const ScalarField& f);

/// Full symmetric Hessian: diagonal entries from fd_second_derivative, mixed
/// entries from composed first derivatives.
SymmetricMatrixField fd_hessian(const ScalarField& f);

/// Trace of fd_hessian without materialising the matrix field.
ScalarField fd_laplacian(const ScalarField& f);

/// value + FD gradient + FD Hessian with provenance recorded.
FieldBundle make_fd_bundle(const ScalarField& u);

}  // namespace s2lab
