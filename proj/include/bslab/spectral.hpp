#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "bslab/bskernel.hpp"
#include "bslab/errors.hpp"
#include "bslab/measure.hpp"

// Principal eigenvalue curve gamma(k) of the discrete Birman-Schwinger
// operator, the bound-state solve alpha*gamma(k) = 1, and the weak-coupling
// predictors built from the R quadratic form.

namespace bslab {

struct SpectralPoint {
    double k = 0.0;
    double gamma = 0.0;
    Eigen::VectorXd eigvec;  // unit vector in weighted coordinates, positive overlap with sqrt(w)
    int iterations = 0;
    double residual = 0.0;
};

struct BoundState {
    double alpha = 0.0;
    double k_alpha = 0.0;
    double lambda = 0.0;  // always exactly -k_alpha^2
    Eigen::VectorXd eigvec;
    std::pair<double, double> bracket{0.0, 0.0};
    double gamma_at_solution = 0.0;
};

struct PerturbationRow {
    double k = 0.0;
    double omega = 0.0;        // -2 pi gamma(k) / (mu_T ln k)
    double gap = 0.0;          // distance from omega to the second scaled eigenvalue
    double dev = 0.0;          // || phi_k - sqrt(w)/||sqrt(w)|| ||
    double omega_scaled = 0.0; // (omega - 1) ln k
    double dev_scaled = 0.0;   // dev |ln k|
};

namespace detail {

inline constexpr double power_tol = 1e-13;
inline constexpr int power_cap = 20000;

// Top eigenpair of a symmetric PSD matrix by power iteration from the given
// start; falls back to a dense solve.  The start sqrt(w) is the exact k->0
// limit eigenvector, so the overlap cannot vanish.
inline SpectralPoint top_eigenpair(const BSMatrix& M, double k) {
    const int n = M.size();
    SpectralPoint out;
    out.k = k;
    Eigen::VectorXd v = M.weights.cwiseSqrt();
    v.normalize();
    double gamma = 0.0, residual = 0.0;
    for (int it = 1; it <= power_cap; ++it) {
        const Eigen::VectorXd u = M.entries * v;
        gamma = v.dot(u);
        residual = (u - gamma * v).norm();
        if (gamma > 0.0 && residual <= power_tol * gamma) {
            out.gamma = gamma;
            out.eigvec = v;
            out.iterations = it;
            out.residual = residual;
            return out;
        }
        const double norm = u.norm();
        if (!(norm > 0.0)) break;
        v = u / norm;
    }
    // dense fallback
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M.entries);
    gamma = es.eigenvalues()(n - 1);
    v = es.eigenvectors().col(n - 1);
    if (v.dot(M.weights.cwiseSqrt()) < 0.0) v = -v;
    residual = (M.entries * v - gamma * v).norm();
    if (!(gamma > 0.0) || residual > 10.0 * power_tol * std::abs(gamma))
        throw spectral_failure("gamma_top: eigenpair did not converge", residual);
    out.gamma = gamma;
    out.eigvec = v;
    out.iterations = power_cap;
    out.residual = residual;
    return out;
}

inline double r_quadratic_form(const AtomicMeasure& m) {
    const BSMatrix R = assemble_R(m);
    const Eigen::VectorXd sw = R.weights.cwiseSqrt();
    return sw.dot(R.entries * sw);
}

} // namespace detail

inline SpectralPoint gamma_top(const AtomicMeasure& m, double k) {
    return detail::top_eigenpair(assemble_Q(m, k), k);
}

// Finds the unique k with alpha*gamma(k) = 1: bracket expansion from k = 1
// by factors of 4, bisection in ln k, then a short secant polish.  gamma is
// near-affine in ln k, so the polish lands at the noise floor.
inline BoundState solve_bound_state(const AtomicMeasure& m, double alpha) {
    if (!(alpha > 0.0)) throw validation_error("solve_bound_state: alpha must be positive");
    const auto f = [&](double k) { return alpha * gamma_top(m, k).gamma - 1.0; };

    double k_lo = 1.0, k_hi = 1.0;
    double f_lo = f(1.0), f_hi = f_lo;
    // gamma decreases in k, so f does too: positive f(1) sends the root up
    int steps = 0;
    while (f_hi > 0.0) {
        if (++steps > 200)
            throw numerical_error("solve_bound_state: bracket expansion did not close");
        k_lo = k_hi;
        f_lo = f_hi;
        k_hi *= 4.0;
        if (k_hi > detail::k_max)
            throw numerical_error(
                "solve_bound_state: bracket left the k range (alpha too large)");
        f_hi = f(k_hi);
    }
    while (f_lo < 0.0) {
        if (++steps > 200)
            throw numerical_error("solve_bound_state: bracket expansion did not close");
        k_hi = k_lo;
        f_hi = f_lo;
        k_lo /= 4.0;
        if (k_lo < detail::k_min)
            throw numerical_error(
                "solve_bound_state: bracket left the k range (alpha too small)");
        f_lo = f(k_lo);
    }
    const std::pair<double, double> bracket{k_lo, k_hi};

    double lo = std::log(k_lo), hi = std::log(k_hi);
    double g_lo = f_lo, g_hi = f_hi;
    while (hi - lo > 1e-12 * std::max(1.0, std::abs(0.5 * (hi + lo)))) {
        const double mid = 0.5 * (lo + hi);
        const double g_mid = f(std::exp(mid));
        if ((g_mid > 0.0) == (g_lo > 0.0)) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
    }
    double x0 = lo, x1 = hi, g0 = g_lo, g1 = g_hi;
    for (int i = 0; i < 3; ++i) {
        if (g1 == g0) break;
        const double x2 = x1 - g1 * (x1 - x0) / (g1 - g0);
        if (!std::isfinite(x2) || x2 < lo - (hi - lo) || x2 > hi + (hi - lo)) break;
        x0 = x1;
        g0 = g1;
        x1 = x2;
        g1 = f(std::exp(x1));
    }

    BoundState out;
    out.alpha = alpha;
    out.k_alpha = std::exp(std::abs(g1) <= std::abs(g0) ? x1 : x0);
    const SpectralPoint sp = gamma_top(m, out.k_alpha);
    out.lambda = -(out.k_alpha * out.k_alpha);
    out.eigvec = sp.eigvec;
    out.bracket = bracket;
    out.gamma_at_solution = sp.gamma;
    if (std::abs(alpha * sp.gamma - 1.0) > 1e-10)
        throw numerical_error("solve_bound_state: root residual exceeds 1e-10");
    return out;
}

inline double c_mu(const AtomicMeasure& m) {
    const double mu = m.total_mass();
    const double exponent = 4.0 * M_PI * detail::r_quadratic_form(m) / (mu * mu);
    if (exponent > 700.0)
        throw numerical_error("c_mu: exponent overflows double precision (" +
                              std::to_string(exponent) + ")");
    return std::exp(exponent);
}

inline double lambda_asymptotic(const AtomicMeasure& m, double alpha,
                                bool* underflow = nullptr) {
    if (!(alpha > 0.0)) throw validation_error("lambda_asymptotic: alpha must be positive");
    if (underflow) *underflow = false;
    const double factor = std::exp(-4.0 * M_PI / (alpha * m.total_mass()));
    if (factor == 0.0) {
        if (underflow) *underflow = true;
        return -0.0;
    }
    return -c_mu(m) * factor;
}

inline double predict_ln_k(const AtomicMeasure& m, double alpha) {
    if (!(alpha > 0.0)) throw validation_error("predict_ln_k: alpha must be positive");
    const double mu = m.total_mass();
    return -2.0 * M_PI / (alpha * mu) + 2.0 * M_PI * detail::r_quadratic_form(m) / (mu * mu);
}

inline std::vector<PerturbationRow> perturbation_report(const AtomicMeasure& m,
                                                        const std::vector<double>& k_list) {
    if (k_list.empty()) throw validation_error("perturbation_report: empty k list");
    for (std::size_t i = 0; i < k_list.size(); ++i) {
        if (!(k_list[i] > 0.0 && k_list[i] < 1.0))
            throw validation_error("perturbation_report: k values must lie in (0, 1)");
        if (i > 0 && !(k_list[i] < k_list[i - 1]))
            throw validation_error("perturbation_report: k list must be strictly decreasing");
    }
    const double mu = m.total_mass();
    Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<int>(m.size()));
    for (int i = 0; i < u.size(); ++i) u[i] = std::sqrt(m.atoms()[i].weight);
    u.normalize();

    std::vector<PerturbationRow> rows;
    rows.reserve(k_list.size());
    for (double k : k_list) {
        const BSMatrix M = assemble_Q(m, k);
        const double scale = -2.0 * M_PI / (mu * std::log(k));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M.entries);
        const int n = M.size();
        Eigen::VectorXd v = es.eigenvectors().col(n - 1);
        if (v.dot(u) < 0.0) v = -v;

        PerturbationRow row;
        row.k = k;
        row.omega = scale * es.eigenvalues()(n - 1);
        row.gap = std::abs(row.omega - scale * es.eigenvalues()(n - 2));
        row.dev = (v - u).norm();
        row.omega_scaled = (row.omega - 1.0) * std::log(k);
        row.dev_scaled = row.dev * std::abs(std::log(k));
        rows.push_back(row);
    }
    return rows;
}

} // namespace bslab
