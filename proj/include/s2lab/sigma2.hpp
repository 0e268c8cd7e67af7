/// @file sigma2.hpp
/// @brief Pointwise algebra of the second elementary symmetric polynomial.
///
/// Everything here acts on a single spectrum or a single packed symmetric
/// matrix; no grids involved.  These kernels back the operator linearisation,
/// the cone tests and the concavity-defect quadratic used by the interior
/// estimates, so they carry the tightest tolerances in the lab.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace s2lab {

/// Eigenvalue list.  Generators produce descending order; the algebra below
/// is order-independent.
using Spectrum = std::vector<double>;

/// Elementary symmetric polynomial e_k via the stable product recurrence
/// (expand prod_i (1 + s_i t) one factor at a time).  k=0 gives 1.
double sigma_k(const Spectrum& s, int k);

/// sigma_2 of a packed symmetric matrix without eigenvalues:
/// ((tr S)^2 - |S|_F^2) / 2.
double sigma2_direct(const double* packed, int dim);

/// Linearisation of sigma_2 at S: F = tr(S) I - S (packed).  For convex S the
/// smallest eigenvalue of F is tr(S) - lambda_max.
void linearized_coefficients(const double* packed, int dim, double* F_packed);

enum class ConeClass { convex, strictly_2_convex, weakly_2_convex, outside };

struct ConeReport {
    ConeClass label = ConeClass::outside;
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    double lambda_min = 0.0;
};

std::string cone_class_name(ConeClass c);

/// Classifies S against the degenerate-ellipticity cone:
///   convex            lambda_min >= -tol
///   strictly_2_convex sigma1 > tol and sigma2 > tol
///   weakly_2_convex   sigma1 > tol and sigma2 >= -tol
///   outside           otherwise
/// Labels are checked in this order, so a convex matrix reports `convex`
/// even though it also satisfies the 2-convex inequalities.
ConeReport cone_classify(const double* packed, int dim, double tol = 1e-10);

struct PsdReport {
    double value = 0.0;  ///< 1 - sum_i <L,e_i>^2 / a_i
    bool psd = false;    ///< value >= -tol
};

/// Rank-one-update PSD test: Lambda = diag(a) - L^T L is PSD iff
/// 1 - sum_i L_i^2 / a_i >= 0 (all a_i > 0; throws otherwise).
PsdReport psd_criterion(const std::vector<double>& a, const std::vector<double>& L, double tol = 1e-10);

/// Concavity-defect quadratic for direction k:
///   Qhat_k = 1 - (1/3) (1 + delta (T - s_k)/T) sum_{i != k} (1 - (T - s_i)/T)^2
///              -       (1 + delta (T - s_k)/T) (1 - (T - s_k)/T)^2
/// with T = sigma_1(s).  Preconditions: T > 0, f > 0, sigma_2(s) consistent
/// with f to relative 1e-8.  For convex s with delta <= 1.75 the value is
/// provably >= 0 because T^2 = sum s_i^2 + 2 f.
double qhat(const Spectrum& s, int k, double delta, double f);

/// Power-sum Chebyshev gap  sigma_1(s) * sum s_i^3 - (sum s_i^2)^2, which is
/// >= 0 for nonnegative spectra (Cauchy-Schwarz).  Throws on negative entries.
double commutator_gap(const Spectrum& s);

/// Deterministic random convex spectrum: |N(0,1)| draws sorted descending and
/// rescaled so that sigma_2 equals f_target.
Spectrum make_convex_spectrum(std::mt19937_64& rng, int n, double f_target);

}  // namespace s2lab
