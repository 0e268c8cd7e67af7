#include "s2lab/sigma2.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace s2lab {

namespace {

int checked_dim(size_t n) {
    if (n == 0) throw std::invalid_argument("sigma2: empty spectrum");
    return static_cast<int>(n);
}

Eigen::MatrixXd unpack(const double* packed, int dim) {
    Eigen::MatrixXd S(dim, dim);
    int k = 0;
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            S(i, j) = packed[k];
            S(j, i) = packed[k];
            ++k;
        }
    return S;
}

}  // namespace

double sigma_k(const Spectrum& s, int k) {
    const int n = checked_dim(s.size());
    if (k < 0 || k > n) throw std::invalid_argument("sigma_k: k out of range");
    std::vector<double> e(k + 1, 0.0);
    e[0] = 1.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::min(k, i + 1); j >= 1; --j) e[j] += s[i] * e[j - 1];
    return e[k];
}

double sigma2_direct(const double* packed, int dim) {
    double tr = 0.0, frob2 = 0.0;
    int k = 0;
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            const double v = packed[k++];
            if (i == j) {
                tr += v;
                frob2 += v * v;
            } else {
                frob2 += 2.0 * v * v;  // off-diagonal entries appear twice
            }
        }
    return 0.5 * (tr * tr - frob2);
}

void linearized_coefficients(const double* packed, int dim, double* F_packed) {
    double tr = 0.0;
    for (int i = 0; i < dim; ++i) tr += packed[i * dim - i * (i - 1) / 2];
    int k = 0;
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            F_packed[k] = (i == j ? tr : 0.0) - packed[k];
            ++k;
        }
}

std::string cone_class_name(ConeClass c) {
    switch (c) {
        case ConeClass::convex: return "convex";
        case ConeClass::strictly_2_convex: return "strictly_2_convex";
        case ConeClass::weakly_2_convex: return "weakly_2_convex";
        case ConeClass::outside: return "outside";
    }
    return "?";
}

ConeReport cone_classify(const double* packed, int dim, double tol) {
    ConeReport rep;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(unpack(packed, dim),
                                                      Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    rep.lambda_min = ev(0);
    double tr = 0.0, frob2 = 0.0;
    for (int i = 0; i < dim; ++i) {
        tr += ev(i);
        frob2 += ev(i) * ev(i);
    }
    rep.sigma1 = tr;
    rep.sigma2 = 0.5 * (tr * tr - frob2);
    if (rep.lambda_min >= -tol) rep.label = ConeClass::convex;
    else if (rep.sigma1 > tol && rep.sigma2 > tol) rep.label = ConeClass::strictly_2_convex;
    else if (rep.sigma1 > tol && rep.sigma2 >= -tol) rep.label = ConeClass::weakly_2_convex;
    else rep.label = ConeClass::outside;
    return rep;
}

PsdReport psd_criterion(const std::vector<double>& a, const std::vector<double>& L, double tol) {
    if (a.size() != L.size() || a.empty())
        throw std::invalid_argument("psd_criterion: a and L must be nonempty and the same size");
    PsdReport rep;
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        if (!(a[i] > 0)) throw std::invalid_argument("psd_criterion: weights a_i must be positive");
        s += L[i] * L[i] / a[i];
    }
    rep.value = 1.0 - s;
    rep.psd = rep.value >= -tol;
    return rep;
}

double qhat(const Spectrum& s, int k, double delta, double f) {
    const int n = checked_dim(s.size());
    if (k < 0 || k >= n) throw std::invalid_argument("qhat: direction index out of range");
    const double T = sigma_k(s, 1);
    if (!(T > 0)) throw std::invalid_argument("qhat: trace must be positive");
    if (!(f > 0)) throw std::invalid_argument("qhat: f must be positive");
    const double e2 = sigma_k(s, 2);
    if (std::abs(e2 - f) > 1e-8 * std::max(1.0, std::abs(f)))
        throw std::invalid_argument("qhat: sigma_2(s) inconsistent with f");

    const double wk = 1.0 + delta * (T - s[k]) / T;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        if (i == k) continue;
        const double t = 1.0 - (T - s[i]) / T;  // = s_i / T
        sum += t * t;
    }
    const double tk = 1.0 - (T - s[k]) / T;
    return 1.0 - (wk / 3.0) * sum - wk * tk * tk;
}

double commutator_gap(const Spectrum& s) {
    checked_dim(s.size());
    double p1 = 0.0, p2 = 0.0, p3 = 0.0;
    for (double v : s) {
        if (v < 0.0) throw std::invalid_argument("commutator_gap: spectrum must be nonnegative");
        p1 += v;
        p2 += v * v;
        p3 += v * v * v;
    }
    return p1 * p3 - p2 * p2;
}

Spectrum make_convex_spectrum(std::mt19937_64& rng, int n, double f_target) {
    if (n < 2) throw std::invalid_argument("make_convex_spectrum: need n >= 2");
    if (!(f_target > 0)) throw std::invalid_argument("make_convex_spectrum: target must be positive");
    std::normal_distribution<double> gauss(0.0, 1.0);
    Spectrum s(n);
    double e2 = 0.0;
    do {
        for (int i = 0; i < n; ++i) s[i] = std::abs(gauss(rng));
        e2 = sigma_k(s, 2);
    } while (!(e2 > 1e-30));
    const double c = std::sqrt(f_target / e2);
    for (double& v : s) v *= c;
    std::sort(s.begin(), s.end(), std::greater<double>());
    return s;
}

}  // namespace s2lab
