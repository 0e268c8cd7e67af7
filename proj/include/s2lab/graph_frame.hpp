/// @file graph_frame.hpp
/// @brief Induced geometry of the graph (x, u(x)) and its surface operators.
///
/// From a derivative bundle of u the frame collects, per node:
///   W      = sqrt(1 + |Du|^2)                (area element; dM = W dx)
///   g      = I + Du Du^T                     (induced metric; det g = W^2)
///   g_inv  = I - Du Du^T / W^2               (closed-form inverse)
///   II     = D^2 u / W                        (second fundamental form, lower)
///   shape  = g_inv * II                      (principal curvatures = eigenvalues)
///   kappa  = spectrum of g^{-1/2} II g^{-1/2} (symmetric similarity of shape)
///   H      = trace shape,  sigma2_kappa = e_2(kappa)
///   F      = H g_inv - g_inv II g_inv        (linearised operator, contravariant)
///
/// Scalar fields on the hypersurface are handled through the coordinate
/// covariant Hessian  v_{;ij} = D_ij v - (Du . Dv / W^2) D_ij u, so all
/// surface operators below are plain contractions, no orthonormal frames.

#pragma once

#include "s2lab/fields.hpp"

namespace s2lab {

struct GraphFrame {
    Grid grid;
    VectorField du;                        ///< copy of the u-bundle gradient
    SymmetricMatrixField d2u;              ///< copy of the u-bundle Hessian
    ScalarField W;
    SymmetricMatrixField g;
    SymmetricMatrixField g_inv;
    SymmetricMatrixField second_fundamental;
    MatrixField shape_op;
    VectorField kappa;                     ///< principal curvatures, descending
    ScalarField H;
    ScalarField sigma2_kappa;
    SymmetricMatrixField F;                ///< linearised operator coefficients
};

GraphFrame build_graph_frame(const FieldBundle& u);

/// Coordinate covariant Hessian of v over the graph of u.
SymmetricMatrixField covariant_hessian(const FieldBundle& v, const GraphFrame& frame);

/// Laplace-Beltrami  g^{ij} v_{;ij}.
ScalarField laplace_beltrami(const FieldBundle& v, const GraphFrame& frame);

/// Linearised-operator trace  F^{ij} v_{;ij}.
ScalarField laplace_F(const FieldBundle& v, const GraphFrame& frame);

/// F^{ij} v_i w_j  (set w = v for |grad_F v|^2).
ScalarField gradF_inner(const VectorField& v, const VectorField& w, const GraphFrame& frame);

/// g^{ij} v_i w_j  (surface gradient inner product).
ScalarField grad_surface_inner(const VectorField& v, const VectorField& w, const GraphFrame& frame);

/// Projection P = I - Du Du^T / (W (1 + W)) at one node; row-major output.
/// P is symmetric with eigenvalues 1 (perp to Du) and 1/W (along Du), and
/// P^2 = g_inv, so P D^2 v P is a symmetric matrix with the same spectrum as
/// g_inv D^2 v.
void projection_matrix(const double* du, int dim, double* P_full);

/// Conjugated Hessian  P D^2 v P  (packed in, packed out).
void conjugated_hessian(const double* du, const double* hess_packed, int dim, double* out_packed);

/// Field version of conjugated_hessian over the whole grid.
SymmetricMatrixField project_hessian_field(const FieldBundle& v, const FieldBundle& u);

}  // namespace s2lab
