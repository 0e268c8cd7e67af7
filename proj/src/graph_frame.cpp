#include "s2lab/graph_frame.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace s2lab {

namespace {

void unpack_full(const double* packed, int dim, double* full) {
    int k = 0;
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            full[i * dim + j] = packed[k];
            full[j * dim + i] = packed[k];
            ++k;
        }
}

void pack_symmetrized(const double* full, int dim, double* packed) {
    int k = 0;
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) packed[k++] = 0.5 * (full[i * dim + j] + full[j * dim + i]);
}

void matmul(const double* A, const double* B, int dim, double* C) {
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            double s = 0.0;
            for (int k = 0; k < dim; ++k) s += A[i * dim + k] * B[k * dim + j];
            C[i * dim + j] = s;
        }
}

double packed_contract(const double* A, const double* B, int dim) {
    // sum_{ij} A^{ij} B_{ij} for two packed symmetric matrices.
    double s = 0.0;
    int k = 0;
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            s += (i == j ? 1.0 : 2.0) * A[k] * B[k];
            ++k;
        }
    return s;
}

double bilinear(const double* A_packed, const double* x, const double* y, int dim) {
    // x^T A y for packed symmetric A.
    double s = 0.0;
    int k = 0;
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            const double a = A_packed[k++];
            s += (i == j) ? a * x[i] * y[i] : a * (x[i] * y[j] + x[j] * y[i]);
        }
    return s;
}

}  // namespace

GraphFrame build_graph_frame(const FieldBundle& u) {
    const Grid& grid = u.value.grid;
    require_same_layout(grid, u.grad.grid, "build_graph_frame grad");
    require_same_layout(grid, u.hess.grid, "build_graph_frame hess");

    const int dim = grid.dim;
    const int nsym = sym_size(dim);

    GraphFrame fr;
    fr.grid = grid;
    fr.du = u.grad;
    fr.d2u = u.hess;
    fr.W = ScalarField(grid);
    fr.g = SymmetricMatrixField(grid);
    fr.g_inv = SymmetricMatrixField(grid);
    fr.second_fundamental = SymmetricMatrixField(grid);
    fr.shape_op = MatrixField(grid);
    fr.kappa = VectorField(grid);
    fr.H = ScalarField(grid);
    fr.sigma2_kappa = ScalarField(grid);
    fr.F = SymmetricMatrixField(grid);

    // Scratch reused across nodes to avoid per-node allocation.
    std::vector<double> ginv_full(dim * dim), ii_full(dim * dim), tmp(dim * dim), tmp2(dim * dim);
    Eigen::MatrixXd B(dim, dim);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;

    for (Index node = 0; node < grid.size(); ++node) {
        const double* p = u.grad.at(node);
        const double* h = u.hess.at(node);

        double p2 = 0.0;
        for (int a = 0; a < dim; ++a) p2 += p[a] * p[a];
        const double W = std::sqrt(1.0 + p2);
        fr.W.v[node] = W;

        double* gp = fr.g.at(node);
        double* gi = fr.g_inv.at(node);
        double* ii = fr.second_fundamental.at(node);
        {
            int k = 0;
            for (int i = 0; i < dim; ++i)
                for (int j = i; j < dim; ++j) {
                    const double id = (i == j) ? 1.0 : 0.0;
                    gp[k] = id + p[i] * p[j];
                    gi[k] = id - p[i] * p[j] / (W * W);
                    ii[k] = h[k] / W;
                    ++k;
                }
        }

        unpack_full(gi, dim, ginv_full.data());
        unpack_full(ii, dim, ii_full.data());

        // shape operator g^{-1} II (full, generally nonsymmetric in coordinates)
        double* sh = fr.shape_op.at(node);
        matmul(ginv_full.data(), ii_full.data(), dim, sh);
        double H = 0.0;
        for (int i = 0; i < dim; ++i) H += sh[i * dim + i];
        fr.H.v[node] = H;

        // principal curvatures via the symmetric similarity g^{-1/2} II g^{-1/2};
        // g^{-1/2} = I + c p p^T with c = (1/W - 1)/|p|^2
        const double c = (p2 > 1e-300) ? (1.0 / W - 1.0) / p2 : 0.0;
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                tmp[i * dim + j] = (i == j ? 1.0 : 0.0) + c * p[i] * p[j];
        matmul(tmp.data(), ii_full.data(), dim, tmp2.data());
        matmul(tmp2.data(), tmp.data(), dim, ii_full.data());  // reuse as B storage
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) B(i, j) = ii_full[i * dim + j];
        es.compute(B, Eigen::EigenvaluesOnly);

        double* kap = fr.kappa.at(node);
        double sum2 = 0.0;
        for (int i = 0; i < dim; ++i) {
            kap[i] = es.eigenvalues()(dim - 1 - i);  // descending
            sum2 += kap[i] * kap[i];
        }
        fr.sigma2_kappa.v[node] = 0.5 * (H * H - sum2);

        // F = H g_inv - g_inv II g_inv  (packed, symmetrized against roundoff)
        unpack_full(ii, dim, ii_full.data());
        matmul(ginv_full.data(), ii_full.data(), dim, tmp.data());
        matmul(tmp.data(), ginv_full.data(), dim, tmp2.data());
        double* Fp = fr.F.at(node);
        pack_symmetrized(tmp2.data(), dim, Fp);
        for (int k = 0; k < nsym; ++k) Fp[k] = H * gi[k] - Fp[k];
    }
    return fr;
}

SymmetricMatrixField covariant_hessian(const FieldBundle& v, const GraphFrame& frame) {
    const Grid& grid = frame.grid;
    require_same_layout(grid, v.value.grid, "covariant_hessian");
    const int dim = grid.dim;
    const int nsym = sym_size(dim);
    SymmetricMatrixField out(grid);
    for (Index node = 0; node < grid.size(); ++node) {
        const double* du = frame.du.at(node);
        const double* dv = v.grad.at(node);
        const double W = frame.W.v[node];
        double dot = 0.0;
        for (int a = 0; a < dim; ++a) dot += du[a] * dv[a];
        const double s = dot / (W * W);  // g^{kl} u_k v_l
        const double* hv = v.hess.at(node);
        const double* hu = frame.d2u.at(node);
        double* o = out.at(node);
        for (int k = 0; k < nsym; ++k) o[k] = hv[k] - s * hu[k];
    }
    return out;
}

namespace {

ScalarField contract_with(const SymmetricMatrixField& coeff, const FieldBundle& v, const GraphFrame& frame) {
    SymmetricMatrixField cov = covariant_hessian(v, frame);
    const int dim = frame.grid.dim;
    ScalarField out(frame.grid);
    for (Index node = 0; node < frame.grid.size(); ++node)
        out.v[node] = packed_contract(coeff.at(node), cov.at(node), dim);
    return out;
}

}  // namespace

ScalarField laplace_beltrami(const FieldBundle& v, const GraphFrame& frame) {
    return contract_with(frame.g_inv, v, frame);
}

ScalarField laplace_F(const FieldBundle& v, const GraphFrame& frame) {
    return contract_with(frame.F, v, frame);
}

ScalarField gradF_inner(const VectorField& v, const VectorField& w, const GraphFrame& frame) {
    require_same_layout(frame.grid, v.grid, "gradF_inner v");
    require_same_layout(frame.grid, w.grid, "gradF_inner w");
    ScalarField out(frame.grid);
    for (Index node = 0; node < frame.grid.size(); ++node)
        out.v[node] = bilinear(frame.F.at(node), v.at(node), w.at(node), frame.grid.dim);
    return out;
}

ScalarField grad_surface_inner(const VectorField& v, const VectorField& w, const GraphFrame& frame) {
    require_same_layout(frame.grid, v.grid, "grad_surface_inner v");
    require_same_layout(frame.grid, w.grid, "grad_surface_inner w");
    ScalarField out(frame.grid);
    for (Index node = 0; node < frame.grid.size(); ++node)
        out.v[node] = bilinear(frame.g_inv.at(node), v.at(node), w.at(node), frame.grid.dim);
    return out;
}

void projection_matrix(const double* du, int dim, double* P_full) {
    double p2 = 0.0;
    for (int a = 0; a < dim; ++a) p2 += du[a] * du[a];
    const double W = std::sqrt(1.0 + p2);
    const double c = 1.0 / (W * (1.0 + W));
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            P_full[i * dim + j] = (i == j ? 1.0 : 0.0) - c * du[i] * du[j];
}

void conjugated_hessian(const double* du, const double* hess_packed, int dim, double* out_packed) {
    std::vector<double> P(dim * dim), Hf(dim * dim), T(dim * dim), R(dim * dim);
    projection_matrix(du, dim, P.data());
    unpack_full(hess_packed, dim, Hf.data());
    matmul(P.data(), Hf.data(), dim, T.data());
    matmul(T.data(), P.data(), dim, R.data());
    pack_symmetrized(R.data(), dim, out_packed);
}

SymmetricMatrixField project_hessian_field(const FieldBundle& v, const FieldBundle& u) {
    const Grid& grid = u.value.grid;
    require_same_layout(grid, v.value.grid, "project_hessian_field");
    SymmetricMatrixField out(grid);
    for (Index node = 0; node < grid.size(); ++node)
        conjugated_hessian(u.grad.at(node), v.hess.at(node), grid.dim, out.at(node));
    return out;
}

}  // namespace s2lab
