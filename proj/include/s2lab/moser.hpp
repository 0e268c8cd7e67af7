/// @file moser.hpp
/// @brief Integral iteration machinery: the exponent/radius schedule for the
///        Moser-style sup bound, the L^p recursion ledger for Delta u (or H),
///        the p = 1 base-case mass bound, and the sup-versus-integral
///        comparison that upgrades W^{2,p} control to a C^{1,1} bound.
///
/// Schedule.  With gamma = n/(n-2) and k0 iteration steps,
///   p_0 = gamma^{k0},  p_k = p_{k-1}/gamma + 2   (fixed point n, from above)
///   q_0 = 2 n p_0,     q_k = q_{k-1}/gamma - 2   (stays >= n up to k0)
///   r_k = 1/2 + sum_{i=1..k} 2^{-(k0-i+2)}       (1/2 -> 1 - 2^{-(k0+1)})
/// The validator enforces, with a small numerical tolerance:
///   p_k >= n, q_k >= 2, q_k/p_k <= 2n  for all k <= k0,
///   p_{k0} <= n+1, q_{k0} >= n, r_{k0} < 1,
/// and k0 >= 2 (a one-step schedule is rejected).  p_k > n can hold only
/// weakly: p_k = n + gamma^{-k} (gamma^{k0} - n), so whenever gamma^{k0} = n
/// exactly (n = 3, 4) the sequence sits at the fixed point; `strict_pk`
/// records whether strictness held.
///
/// Recursion ledger.  I_p = integral over Omega of A^p phi^{p-1} (dx for the
/// flat variant with A = Delta u, dM = W dx for the graph variant with
/// A = H), and rho_p = I_{p+1} / (p I_p).  The estimate content is that
/// max_p rho_p is a constant: the ledger checks every rho_p against a
/// configured cap and the factorial envelope I_p <= p! c_*^{p-1} I_1
/// (in log domain).

#pragma once

#include <limits>
#include <vector>

#include "s2lab/fields.hpp"
#include "s2lab/jacobi.hpp"
#include "s2lab/masks.hpp"

namespace s2lab {

// ---------------------------------------------------------------------------
// exponent / radius schedule
// ---------------------------------------------------------------------------

struct MoserSchedule {
    int n = 0;            ///< dimension (>= 3)
    double gamma = 0.0;   ///< n / (n - 2)
    int k0 = 0;           ///< number of iteration steps
    int k0_minimal = 0;   ///< ceil(ln n / ln gamma), before the k0 >= 2 floor
    bool strict_pk = false;  ///< whether p_k > n held strictly for every k
    std::vector<double> p;   ///< size k0 + 1
    std::vector<double> q;   ///< size k0 + 1
    std::vector<double> r;   ///< size k0 + 1
};

/// Evaluates the recurrences at a given k0 and validates every schedule
/// invariant (throws std::domain_error on failure; n = 2 is rejected with a
/// dedicated message since the Sobolev embedding already gives the bound
/// there and no iteration is defined).
MoserSchedule schedule_with_k0(int n, int k0);

/// Smallest admissible schedule: k0 = max(2, ceil(ln n / ln gamma)),
/// incremented until every invariant passes (no increment is needed for
/// n in 3..10; the loop is a safety net).
MoserSchedule build_schedule(int n);

// ---------------------------------------------------------------------------
// L^p recursion ledger
// ---------------------------------------------------------------------------

struct RecursionLedger {
    std::vector<double> integral;  ///< I_p for p = 1..p_max
    std::vector<double> ratio;     ///< rho_p = I_{p+1}/(p I_p), p = 1..p_max-1
    double c_star = 0.0;           ///< max_p rho_p (0 when all I_p vanish)
    double c_cap = std::numeric_limits<double>::infinity();  ///< configured cap
    int p_max = 0;
    double h = 0.0;                ///< quadrature spacing (max over axes)
    double sup_excess = 0.0;       ///< max phi^{1/4} = sup (w - u)^+ on Omega
    bool envelope_ok = false;      ///< I_p <= p! c_*^{p-1} I_1 for all p
    JacobiVariant variant = JacobiVariant::hessian;
};

struct W2pOptions {
    int p_max = 8;
    /// If finite, every rho_p is asserted <= c_cap (std::runtime_error).
    double c_cap = std::numeric_limits<double>::infinity();
};

/// Computes the ledger of I_p and rho_p on the region `omega` with cutoff
/// field `phi` (typically (w - u)^4 from the barrier pipeline).  Hypotheses
/// checked on omega: Delta u > 0 and f >= 1 (flat) or H > 0 and f > 0
/// (graph); phi >= 0 everywhere.  An empty omega yields an all-zero ledger.
RecursionLedger w2p_recursion_check(const FieldBundle& u, const ScalarField& f,
                                    const ScalarField& phi, const RegionMask& omega,
                                    JacobiVariant variant, const W2pOptions& opt = {});

// ---------------------------------------------------------------------------
// p = 1 base case: mass bounded by gradient data
// ---------------------------------------------------------------------------

struct MassReport {
    double mass = 0.0;   ///< integral of Delta u dx (or H dM) over the mask
    double bound = 0.0;  ///< divergence-theorem bound 2 max(W)^s int |Dphi| |Du|
    bool ok = false;     ///< mass <= bound
};

/// Integrates A over the mask and compares against the divergence-structure
/// bound computed with a fixed C^2 radial bump (quintic smoothstep, = 1 on
/// B_1, supported strictly inside the grid).  The mask must sit inside B_1;
/// Delta u (resp. H) must be >= 0 on the whole grid so the cutoff comparison
/// is one-sided.  The factor 2 and (for the graph variant) max W over the
/// bump support absorb quadrature error.
MassReport base_case_mass(const FieldBundle& u, const RegionMask& mask,
                          JacobiVariant variant);

// ---------------------------------------------------------------------------
// sup-versus-integral comparison
// ---------------------------------------------------------------------------

struct C11Report {
    double lhs = 0.0;    ///< max over B_{1/2} of phi^{2n} A
    double rhs = 0.0;    ///< integral over B_1 of phi^n A^{n+1} (dx or dM)
    double ratio = 0.0;  ///< lhs / rhs; defined as 0 when both vanish
    Index argmax = -1;   ///< node realising the max; -1 if lhs = 0
};

/// The comparison behind the C^{1,1} bound: the weighted sup of A on the
/// half ball against the top-exponent weighted integral on the unit ball.
/// The ratio is the quantity expected to be stable under h-refinement.
/// Throws std::runtime_error if rhs = 0 while lhs > 0 (a mask/cutoff bug),
/// std::invalid_argument if the grid does not cover B_1.
C11Report c11_comparison(const FieldBundle& u, const ScalarField& phi,
                         const MoserSchedule& schedule, JacobiVariant variant);

// ---------------------------------------------------------------------------
// closed-form iteration constants
// ---------------------------------------------------------------------------

struct IterationConstants {
    double sum_a = 0.0;        ///< gamma^{-k0} sum_{k=1..k0} gamma^k
    double sum_b = 0.0;        ///< gamma^{-k0} sum_{k=1..k0} (k0 - k) gamma^k
    double product_log = 0.0;  ///< gamma^{-k0} sum_{k=1..k0} 4 gamma^k ln(p_k - 2)
    double cap_sums = 0.0;     ///< gamma^2/(gamma-1)^2 + gamma/(gamma-1)
    double cap_product_log = 0.0;  ///< 4 ln(gamma) g/(g-1)^2 + 4 ln(n) g/(g-1)
};

/// Normalized geometric sums of the iteration, asserted against their caps
/// (sum_a, sum_b against cap_sums; product_log against cap_product_log,
/// which is n-dependent because p_0 - 2 grows like gamma^{k0} ~ n).
/// Violations throw std::runtime_error.
IterationConstants iteration_constants(const MoserSchedule& schedule);

}  // namespace s2lab
