#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "bslab/errors.hpp"
#include "bslab/measure.hpp"
#include "bslab/specfun.hpp"

// Dense assembly of the discrete Birman-Schwinger family on L^2_mu:
//
//   M^Q(k) = D^{1/2} K(k) D^{1/2},  K_ij = (1/2pi) K0(k |x_i - x_j|)
//   M^P    = (1/2pi) (sqrt w)(sqrt w)^T
//   M^R    = D^{1/2} K^R D^{1/2},   K^R_ij = (1/2pi)(-ln|x_i-x_j| - euler_gamma + ln 2)
//
// with the log-singular self-interaction replaced by the exact panel average
// of the small-argument kernel.  An M-eigenvector v corresponds to the
// L^2_mu function with values v_i / sqrt(w_i).

namespace bslab {

enum class MatrixKind { Q, P, R, residual };

struct BSMatrix {
    Eigen::MatrixXd entries;
    Eigen::VectorXd weights;
    double k = 0.0;
    MatrixKind kind = MatrixKind::Q;

    int size() const { return static_cast<int>(entries.rows()); }
};

namespace detail {

inline constexpr int max_atoms = 4096;
inline constexpr double k_min = 1e-8;
inline constexpr double k_max = 1e3;
inline constexpr double inv_2pi = 0.15915494309189535;

// Gauss-Legendre 16 on [0,1], for the self-panel fallback quadrature.
inline constexpr double gl16_x[16] = {
    0.0052995325041750307, 0.0277124884633837,   0.067184398806084122,
    0.1222977958224985,    0.19106187779867811,  0.27099161117138632,
    0.35919822461037054,   0.45249374508118129,  0.54750625491881877,
    0.64080177538962946,   0.72900838882861363,  0.80893812220132189,
    0.87770220417750155,   0.93281560119391593,  0.9722875115366163,
    0.99470046749582497};
inline constexpr double gl16_w[16] = {
    0.013576229705877019, 0.031126761969323853, 0.047579255841246296,
    0.062314485627767015, 0.074797994408288382, 0.08457825969750131,
    0.091301707522461806, 0.094725305227534293, 0.094725305227534293,
    0.091301707522461806, 0.08457825969750131,  0.074797994408288382,
    0.062314485627767015, 0.047579255841246296, 0.031126761969323853,
    0.013576229705877019};

inline int thread_count() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("BSLAB_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1 && static_cast<unsigned>(cap) < hw) hw = static_cast<unsigned>(cap);
    }
    return static_cast<int>(hw);
}

// Mean of -ln|s| over the panel: arc [-h/2, h/2] or disc of radius a.
inline double log_panel_average(double scale, PanelKind kind) {
    if (kind == PanelKind::curve) return 1.0 - std::log(0.5 * scale);
    return 0.5 - std::log(scale);
}

// Mean of the Macdonald remainder s(k|s|) over the panel, Gauss-Legendre.
// s and its low derivatives are small on k*scale <= O(1), so 16 points are
// ample; this keeps the fallback accurate without a singular quadrature.
inline double remainder_panel_average(double k, double scale, PanelKind kind) {
    double acc = 0.0;
    if (kind == PanelKind::curve) {
        for (int i = 0; i < 16; ++i)
            acc += gl16_w[i] * specfun::k0_remainder(k * 0.5 * scale * gl16_x[i]);
    } else {
        for (int i = 0; i < 16; ++i)
            acc += gl16_w[i] * specfun::k0_remainder(k * scale * gl16_x[i]) * 2.0 * gl16_x[i];
    }
    return acc;
}

// Row-block parallel fill of a symmetric kernel matrix; every entry is a
// pure function of (i, j), so the partition cannot change the bits.
template <class EntryFn>
inline Eigen::MatrixXd fill_symmetric(int n, const EntryFn& entry) {
    Eigen::MatrixXd a(n, n);
    const int threads = std::min(thread_count(), n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) a(i, j) = entry(i, j);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                for (int i = t; i < n; i += threads)
                    for (int j = i; j < n; ++j) a(i, j) = entry(i, j);
            });
        }
        for (auto& th : pool) th.join();
    }
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) a(j, i) = a(i, j);
    return a;
}

inline void require_assemblable(const AtomicMeasure& m) {
    if (m.size() > static_cast<std::size_t>(max_atoms))
        throw validation_error("assemble: measure exceeds the " + std::to_string(max_atoms) +
                               " atom cap");
    for (const Atom& a : m.atoms())
        if (a.scale == 0.0)
            throw validation_error("assemble: atom without a panel scale (bare point atom)");
}

inline void require_k_range(double k) {
    if (!(k >= k_min && k <= k_max))
        throw validation_error("assemble: k outside [1e-8, 1e3]");
}

} // namespace detail

// Free-resolvent kernel value between quadrature panels with the analytic
// self-panel average.  For rho >= panel_scale this is (1/2pi) K0(k rho);
// below it, the mean of the kernel over the panel.  The closed-form mean
// uses the small-argument law and is valid for k*scale <= 0.1; past that
// the remainder of K0 is added by local quadrature and the optional flag
// reports the accuracy fallback.
inline double green_kernel(double k, double rho, double panel_scale, PanelKind panel_kind,
                           bool* accuracy_warning = nullptr) {
    if (!(k > 0.0)) throw validation_error("green_kernel: k must be positive");
    if (!(rho >= 0.0)) throw validation_error("green_kernel: rho must be nonnegative");
    if (!(panel_scale > 0.0))
        throw validation_error("green_kernel: panel scale must be positive");
    if (accuracy_warning) *accuracy_warning = false;
    if (rho >= panel_scale) return detail::inv_2pi * specfun::k0(k * rho);
    double avg = -std::log(0.5 * k) - specfun::euler_gamma +
                 detail::log_panel_average(panel_scale, panel_kind);
    if (k * panel_scale > 0.1) {
        if (accuracy_warning) *accuracy_warning = true;
        avg += detail::remainder_panel_average(k, panel_scale, panel_kind);
    }
    return detail::inv_2pi * avg;
}

inline BSMatrix assemble_Q(const AtomicMeasure& m, double k) {
    detail::require_assemblable(m);
    detail::require_k_range(k);
    const auto& atoms = m.atoms();
    const int n = static_cast<int>(atoms.size());
    BSMatrix out;
    out.k = k;
    out.kind = MatrixKind::Q;
    out.weights.resize(n);
    for (int i = 0; i < n; ++i) out.weights[i] = atoms[i].weight;
    // Only i = j is a self-panel.  Neighbor chords can be shorter than the
    // panel scale (a circle's chord is below its arc), but they are genuine
    // pair interactions and take the plain kernel.
    out.entries = detail::fill_symmetric(n, [&](int i, int j) {
        if (i == j)
            return atoms[i].weight *
                   green_kernel(k, 0.0, atoms[i].scale, atoms[i].panel_kind);
        const double rho = distance(atoms[i].position, atoms[j].position);
        return std::sqrt(atoms[i].weight * atoms[j].weight) * detail::inv_2pi *
               specfun::k0(k * rho);
    });
    return out;
}

inline BSMatrix assemble_P(const AtomicMeasure& m) {
    const auto& atoms = m.atoms();
    const int n = static_cast<int>(atoms.size());
    BSMatrix out;
    out.k = 0.0;
    out.kind = MatrixKind::P;
    out.weights.resize(n);
    for (int i = 0; i < n; ++i) out.weights[i] = atoms[i].weight;
    const Eigen::VectorXd sw = out.weights.cwiseSqrt();
    out.entries = detail::inv_2pi * (sw * sw.transpose());
    // mirror to make the symmetry bit-exact, not just mathematically true
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) out.entries(j, i) = out.entries(i, j);
    return out;
}

inline BSMatrix assemble_R(const AtomicMeasure& m) {
    detail::require_assemblable(m);
    const auto& atoms = m.atoms();
    const int n = static_cast<int>(atoms.size());
    BSMatrix out;
    out.k = 0.0;
    out.kind = MatrixKind::R;
    out.weights.resize(n);
    for (int i = 0; i < n; ++i) out.weights[i] = atoms[i].weight;
    out.entries = detail::fill_symmetric(n, [&](int i, int j) {
        double kval;
        if (i == j)
            kval = -specfun::euler_gamma + M_LN2 +
                   detail::log_panel_average(atoms[i].scale, atoms[i].panel_kind);
        else
            kval = -std::log(distance(atoms[i].position, atoms[j].position)) -
                   specfun::euler_gamma + M_LN2;
        return std::sqrt(atoms[i].weight * atoms[j].weight) * detail::inv_2pi * kval;
    });
    return out;
}

inline double spectral_norm(const BSMatrix& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.entries,
                                                      Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

// Discrete residual S(k) = M^Q(k) + ln(k) M^P - M^R.  Assembled directly
// from the Macdonald remainder, entry by entry, so the diagonal is exactly
// zero: the panel-averaged leading terms cancel algebraically.
inline std::pair<BSMatrix, double> decomposition_residual(const AtomicMeasure& m, double k) {
    detail::require_assemblable(m);
    if (!(k > 0.0 && k <= 0.5))
        throw validation_error("decomposition_residual: k must lie in (0, 0.5]");
    const auto& atoms = m.atoms();
    const int n = static_cast<int>(atoms.size());
    BSMatrix out;
    out.k = k;
    out.kind = MatrixKind::residual;
    out.weights.resize(n);
    for (int i = 0; i < n; ++i) out.weights[i] = atoms[i].weight;
    out.entries = detail::fill_symmetric(n, [&](int i, int j) {
        if (i == j) return 0.0;  // panel-averaged leading terms cancel exactly
        const double rho = distance(atoms[i].position, atoms[j].position);
        return std::sqrt(atoms[i].weight * atoms[j].weight) * detail::inv_2pi *
               specfun::k0_remainder(k * rho);
    });
    const double norm = spectral_norm(out);
    return {std::move(out), norm};
}

} // namespace bslab
