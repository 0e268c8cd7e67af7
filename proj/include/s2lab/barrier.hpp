/// @file barrier.hpp
/// @brief Quadratic cutting functions ("barriers") that pinch the solution
///        inside a thin tube, plus the tube-gap search and certificates.
///
/// The construction, for a normalized solution u_hat (u_hat(0)=0,
/// Du_hat(0)=0, u_hat >= 0, sigma2 of its Hessian >= 1 on the unit ball):
///
///  1. find a rotation y = R x such that u_hat > delta on the tube wall
///     {|(y1,y2)| = r_t} intersected with B1  (tube-gap search);
///  2. build the explicit barrier
///        flat  kind: w = delta [2(n-2)|y12|^2 - |y3..|^2 + 1/8]
///        graph kind: w = delta [M |y12|^2 - |y3..|^2 + 1/4] + L(x),
///     whose Hessian is constant and at least weakly 2-convex;
///  3. verify the four admission conditions on the grid:
///     (1) u_hat(0) < w(0); (2) 2-convexity (conjugated by the gradient
///     projection for the graph kind); (3) w - L < delta on the wall band;
///     (4) w - L < 0 on the outer spherical cap  {|x|=1, |y12| <= r_t};
///  4. extract the connected component Omega of {u_hat < w} through 0 and
///     the quartic cutoff field phi = (w - u_hat)^4 restricted to it.
///
/// Then u_hat > w on the entire boundary of the tube piece, so Omega stays
/// strictly inside the tube: the localization needed by the integral
/// estimates downstream.

#pragma once

#include <vector>

#include "s2lab/fields.hpp"

namespace s2lab {

// ---------------------------------------------------------------------------
// normalization
// ---------------------------------------------------------------------------

struct NormalizedSolution {
    ScalarField u_hat;  ///< scale * (u - u(0) - x . Du(0))
    ScalarField f_hat;  ///< scale^2 * f  (degree-2 homogeneity of sigma2)
    double scale = 1.0;
};

/// Subtracts the tangent plane at 0 and rescales so the forcing is >= 1:
/// scale = 1 when min f >= 1 already, otherwise a hair above sqrt(1/min f)
/// so that min f_hat >= 1 holds exactly in floating point (downstream
/// hypotheses test f >= 1 with no tolerance).  Throws if f <= 0 somewhere.
NormalizedSolution normalize_solution(const FieldBundle& u, const ScalarField& f);

// ---------------------------------------------------------------------------
// tube gap
// ---------------------------------------------------------------------------

struct TubeGap {
    std::vector<double> rotation;  ///< n x n row-major, y = R x
    double delta = 0.0;            ///< min of u_hat over the wall band
    double tube_radius = 0.0;
    double band = 0.0;             ///< half-width of the discrete wall shell
    Index wall_nodes = 0;          ///< nodes the minimum was taken over
};

struct TubeGapOptions {
    double band = -1.0;         ///< shell half-width; <0 means grid spacing
    int random_candidates = 48;
    int refine_sweeps = 24;
    unsigned seed = 20240901;
    double sigma2_floor = 0.5;  ///< loose FD check of the sigma2 >= 1 input
    double min_delta = 1e-10;   ///< search fails below this
};

/// Maximizes, over rotations, the minimum of u_hat on the discrete tube
/// wall {| |y12| - r_t | <= band} inside B1.  Candidates: all axis pairs,
/// seeded random rotations, then greedy Givens refinement; deterministic
/// for a fixed seed.  Throws domain_error when the normalization
/// preconditions fail and runtime_error when no rotation clears min_delta.
TubeGap find_tube_gap(const ScalarField& u_hat, double tube_radius,
                      const TubeGapOptions& opt = {});

// ---------------------------------------------------------------------------
// barriers
// ---------------------------------------------------------------------------

enum class BarrierKind { euclidean, curvature };

struct AffineFunction {
    double c0 = 0.0;
    std::vector<double> c1;  ///< length n; L(x) = c0 + c1 . x

    double eval(const double* x) const {
        double s = c0;
        for (std::size_t i = 0; i < c1.size(); ++i) s += c1[i] * x[i];
        return s;
    }
};

struct Barrier {
    BarrierKind kind = BarrierKind::euclidean;
    int dim = 0;
    double delta = 0.0;
    double M = 0.0;                ///< curvature kind only
    double r = 0.0;                ///< curvature kind: sqrt(1/(4(M+1)))
    std::vector<double> rotation;  ///< n x n row-major, y = R x
    AffineFunction support_plane;  ///< L; identically 0 for the flat kind

    double value(const double* x) const;
    void gradient(const double* x, double* g) const;
    /// Constant Hessian, packed upper-triangular (x coordinates).
    void hessian_packed(double* h) const;
    /// w - L, the pure quadratic part used by the wall/cap conditions.
    double quadratic_part(const double* x) const;
};

/// w = delta [2(n-2)|y12|^2 - |y3..|^2 + 1/8]; requires n >= 3, delta > 0.
/// Principal Hessian entries delta * (4(n-2), 4(n-2), -2, ..., -2), so
/// sigma1 = 6 delta (n-2) > 0 and sigma2 = 2 delta^2 (n-2)(n-3) >= 0.
Barrier build_barrier_euclidean(double delta, int n,
                                const std::vector<double>& rotation);

/// w = delta [M |y12|^2 - |y3..|^2 + 1/4] + L(x); requires delta > 0, M > 0.
/// Sets r = sqrt(1/(4(M+1))), so (M+1) r^2 + 1/4 = 1/2 exactly.
Barrier build_barrier_curvature(double delta, double M, const AffineFunction& L,
                                const std::vector<double>& rotation);

// ---------------------------------------------------------------------------
// certificates
// ---------------------------------------------------------------------------

struct BarrierCertificate {
    bool valid = false;
    bool origin_ok = false;      ///< (1) u_hat(0) < w(0)
    bool two_convex_ok = false;  ///< (2)
    bool wall_ok = false;        ///< (3) w - L < delta on the wall band
    bool cap_ok = false;         ///< (4) w - L < 0 on the outer cap

    double origin_margin = 0.0;      ///< w(0) - u_hat(0)
    double sigma1_min = 0.0;         ///< min sigma1 of the (conjugated) Hessian
    double two_convex_margin = 0.0;  ///< min sigma2 of the (conjugated) Hessian
    double wall_margin = 0.0;        ///< gap_delta - max(w - L) over the wall band
    double cap_margin = 0.0;         ///< -max(w - L) over the cap band

    double tube_radius = 0.0;
    double gap_delta = 0.0;      ///< measured tube gap the wall test compares against
    double barrier_delta = 0.0;  ///< coefficient actually baked into w
    double band = 0.0;
    Index wall_count = 0;
    Index cap_count = 0;
    Index omega_count = 0;  ///< size of the component of {u_hat < w} through 0
};

struct VerifyOptions {
    double band = -1.0;      ///< <0 means grid spacing
    double cone_tol = 1e-12; ///< weak-2-convexity admission tolerance
};

/// Checks admission conditions (1)-(4) on the grid of u.  The graph kind
/// conjugates D^2 w by the gradient projection of u at every B1 node.
/// gap_delta is the measured tube gap (min of u_hat on the wall): the wall
/// test requires max(w - L) < gap_delta there, which is what lets u_hat > w
/// on the wall be concluded.  An over-inflated barrier coefficient therefore
/// fails condition (3) even though w's shape is unchanged.
///
/// The cap condition involves only the barrier's closed form, so the shell
/// {| |x| - 1 | <= band} acts purely as a direction sampler: every shell
/// node is projected radially onto the unit sphere before w - L is
/// evaluated.  (Evaluating at the off-sphere node itself would inflate the
/// maximum by O(band) and reject sound barriers on coarse grids.)
BarrierCertificate verify_barrier(const FieldBundle& u, const Barrier& barrier,
                                  double tube_radius, double gap_delta,
                                  const VerifyOptions& opt = {});

// ---------------------------------------------------------------------------
// Omega and the cutoff field
// ---------------------------------------------------------------------------

struct OmegaField {
    RegionMask omega;  ///< connected component of {u_hat < w} through 0
    ScalarField phi;   ///< (w - u_hat)^4 on omega, 0 elsewhere
};

/// Throws domain_error when 0 is not in {u_hat < w}.
OmegaField extract_omega(const ScalarField& u_hat, const Barrier& barrier);

// ---------------------------------------------------------------------------
// end-to-end convenience
// ---------------------------------------------------------------------------

struct BarrierPipelineResult {
    TubeGap gap;
    Barrier barrier;
    BarrierCertificate certificate;
};

/// Tube gap at the given radius, then the flat barrier with
/// delta = 0.9 * measured gap, then verification.
BarrierPipelineResult make_euclidean_barrier(const FieldBundle& u_hat,
                                             double tube_radius,
                                             const TubeGapOptions& opt = {});

/// Adaptive graph-kind pipeline: for M = 1, 2, 4, ... the tube radius
/// r(M) = sqrt(1/(4(M+1))) shrinks until the certificate passes; the
/// smallest admissible power of two is kept.  Throws runtime_error when
/// max_power_steps is exhausted.
BarrierPipelineResult make_curvature_barrier(const FieldBundle& u_hat,
                                             const TubeGapOptions& opt = {},
                                             int max_power_steps = 16);

}  // namespace s2lab
