#pragma once

// Physical-space evaluation of the bound-state eigenfunction and its exact
// L2(R^2) norm. The norm uses the squared-resolvent kernel rho*K1(k rho)/
// (4 pi k), which is finite on the diagonal, so no truncation box enters;
// grid quadrature is kept only as an independent cross-check.

#include <cmath>
#include <complex>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "bslab/bskernel.hpp"
#include "bslab/errors.hpp"
#include "bslab/measure.hpp"
#include "bslab/specfun.hpp"
#include "bslab/spectral.hpp"

namespace bslab {

struct FieldGrid {
    Box box;
    int nx = 0;
    int ny = 0;
    // values(iy, ix): y-outer, x-inner, matching the CSV export order
    Eigen::MatrixXd values;
    double k = 0.0;
    double l2_norm_kernel = 0.0;
    double l2_norm_grid = 0.0;
};

struct NormLimitRow {
    double alpha = 0.0;
    double k = 0.0;
    double f_norm = 0.0;
    double limit = 0.0;
    double deviation = 0.0;
};

namespace detail {

inline void require_phi(const AtomicMeasure& m, const Eigen::VectorXd& phi,
                        const char* who) {
    if (phi.size() != static_cast<Eigen::Index>(m.size()))
        throw validation_error(std::string(who) +
                               ": phi needs one coordinate per atom");
}

} // namespace detail

// Kernel of the squared free resolvent at -k^2: the density of
// <R(-k^2) delta_x, R(-k^2) delta_y> over R^2, finite at coinciding points.
inline double resolvent_square_kernel(double k, double rho) {
    detail::require_k_range(k);
    if (!(rho >= 0.0))
        throw validation_error("resolvent_square_kernel: rho must be nonnegative");
    if (rho == 0.0)
        return 1.0 / (4.0 * M_PI * k * k);
    return rho * specfun::k1(k * rho) / (4.0 * M_PI * k);
}

// Converts a unit eigenvector of the symmetrized matrix into function values
// on the atoms, scaled so the constant function 1 is the small-k limit and
// signed so the ground state comes out positive.
inline Eigen::VectorXd mu_coordinates(const AtomicMeasure& m,
                                      const Eigen::VectorXd& eigvec) {
    detail::require_phi(m, eigvec, "mu_coordinates");
    const auto& atoms = m.atoms();
    const double root_mass = std::sqrt(m.total_mass());
    double overlap = 0.0;
    for (std::size_t j = 0; j < atoms.size(); ++j)
        overlap += eigvec(static_cast<Eigen::Index>(j)) * std::sqrt(atoms[j].weight);
    const double sign = overlap < 0.0 ? -1.0 : 1.0;
    Eigen::VectorXd phi(eigvec.size());
    for (std::size_t j = 0; j < atoms.size(); ++j)
        phi(static_cast<Eigen::Index>(j)) = sign * root_mass *
            eigvec(static_cast<Eigen::Index>(j)) / std::sqrt(atoms[j].weight);
    return phi;
}

// f(x) = (k/2pi) sum_j w_j phi_j K0(k|x - x_j|); inside a panel the term
// switches to the same panel average the assembler uses, keeping the field
// and matrix representations consistent. far_field reports that x sits in
// the deep exponential tail (k dist > 20), where the value is a clean zero
// rather than information.
inline double eval_eigenfunction(const AtomicMeasure& m, double k,
                                 const Eigen::VectorXd& phi, Point x,
                                 bool* far_field = nullptr) {
    detail::require_k_range(k);
    detail::require_phi(m, phi, "eval_eigenfunction");
    const auto& atoms = m.atoms();
    double acc = 0.0;
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < atoms.size(); ++j) {
        const Atom& a = atoms[j];
        const double rho = distance(x, a.position);
        min_dist = std::min(min_dist, rho);
        double g;
        if (a.scale > 0.0) {
            g = green_kernel(k, rho, a.scale, a.panel_kind);
        } else if (rho > 0.0) {
            g = detail::inv_2pi * specfun::k0(k * rho);
        } else {
            throw validation_error(
                "eval_eigenfunction: point coincides with a bare point atom");
        }
        acc += a.weight * phi(static_cast<Eigen::Index>(j)) * g;
    }
    if (far_field != nullptr)
        *far_field = k * min_dist > 20.0;
    return k * acc;
}

// ||k R_{mu dx}(-k^2) phi||_{L2(R^2)} by the exact double sum over atoms.
inline double l2_norm_via_k1(const AtomicMeasure& m, double k,
                             const Eigen::VectorXd& phi) {
    detail::require_k_range(k);
    detail::require_phi(m, phi, "l2_norm_via_k1");
    const auto& atoms = m.atoms();
    const std::size_t n = atoms.size();
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ci = atoms[i].weight * phi(static_cast<Eigen::Index>(i));
        quad += ci * ci / (4.0 * M_PI * k * k);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double cj = atoms[j].weight * phi(static_cast<Eigen::Index>(j));
            quad += 2.0 * ci * cj *
                    resolvent_square_kernel(k, distance(atoms[i].position,
                                                        atoms[j].position));
        }
    }
    if (quad < -1e-12)
        throw numerical_error(
            "l2_norm_via_k1: the resolvent Gram form came out negative (" +
            std::to_string(quad) + ")");
    return k * std::sqrt(std::max(quad, 0.0));
}

// Samples the eigenfunction on a midpoint grid and fills both norm fields.
// warn is raised when the box misses part of the support, in which case the
// kernel/grid norm comparison carries no meaning.
inline FieldGrid eigenfunction_grid(const AtomicMeasure& m, const BoundState& bs,
                                    Box box, int nx, int ny,
                                    bool* warn = nullptr) {
    if (nx < 2 || ny < 2)
        throw validation_error("eigenfunction_grid: nx and ny must be at least 2");
    if (!(box.xmax > box.xmin) || !(box.ymax > box.ymin))
        throw validation_error("eigenfunction_grid: box must have positive extent");
    if (warn != nullptr) {
        *warn = false;
        for (const Atom& a : m.atoms())
            if (!box.contains(a.position)) {
                *warn = true;
                break;
            }
    }

    const Eigen::VectorXd phi = mu_coordinates(m, bs.eigvec);
    FieldGrid out;
    out.box = box;
    out.nx = nx;
    out.ny = ny;
    out.k = bs.k_alpha;
    out.values.resize(ny, nx);

    const double dx = (box.xmax - box.xmin) / nx;
    const double dy = (box.ymax - box.ymin) / ny;
    const int threads = std::min(detail::thread_count(), ny);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (int iy = t; iy < ny; iy += threads) {
                const double y = box.ymin + (iy + 0.5) * dy;
                for (int ix = 0; ix < nx; ++ix) {
                    const double x = box.xmin + (ix + 0.5) * dx;
                    out.values(iy, ix) = eval_eigenfunction(m, bs.k_alpha, phi,
                                                            Point{x, y});
                }
            }
        });
    }
    for (auto& th : pool)
        th.join();

    out.l2_norm_kernel = l2_norm_via_k1(m, bs.k_alpha, phi);
    double sq = 0.0;
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            sq += out.values(iy, ix) * out.values(iy, ix);
    out.l2_norm_grid = std::sqrt(sq * dx * dy);
    return out;
}

// (1/2pi) sum_j w_j phi_j exp(-i p.x_j)
inline std::complex<double> fourier_hat(const AtomicMeasure& m,
                                        const Eigen::VectorXd& phi, Point p) {
    detail::require_phi(m, phi, "fourier_hat");
    const auto& atoms = m.atoms();
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t j = 0; j < atoms.size(); ++j) {
        const double theta = -(p.x * atoms[j].position.x + p.y * atoms[j].position.y);
        acc += atoms[j].weight * phi(static_cast<Eigen::Index>(j)) *
               std::complex<double>(std::cos(theta), std::sin(theta));
    }
    return acc * detail::inv_2pi;
}

// For each coupling: solve the bound state and report how far ||f_alpha||
// sits from its weak-coupling limit mu_T/(2 sqrt(pi)).
inline std::vector<NormLimitRow> norm_limit_report(
    const AtomicMeasure& m, const std::vector<double>& alpha_list) {
    if (alpha_list.empty())
        throw validation_error("norm_limit_report: alpha list is empty");
    for (std::size_t i = 0; i < alpha_list.size(); ++i) {
        if (!(alpha_list[i] > 0.0) || !std::isfinite(alpha_list[i]))
            throw validation_error("norm_limit_report: alphas must be positive");
        if (i > 0 && !(alpha_list[i] < alpha_list[i - 1]))
            throw validation_error("norm_limit_report: alphas must decrease");
    }
    const double limit = m.total_mass() / (2.0 * std::sqrt(M_PI));
    std::vector<NormLimitRow> rows;
    rows.reserve(alpha_list.size());
    for (double alpha : alpha_list) {
        const BoundState bs = solve_bound_state(m, alpha);
        const Eigen::VectorXd phi = mu_coordinates(m, bs.eigvec);
        NormLimitRow row;
        row.alpha = alpha;
        row.k = bs.k_alpha;
        row.f_norm = l2_norm_via_k1(m, bs.k_alpha, phi);
        row.limit = limit;
        row.deviation = std::abs(row.f_norm - limit) / limit;
        rows.push_back(row);
    }
    return rows;
}

} // namespace bslab
