#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "bslab/bskernel.hpp"
#include "bslab/measure.hpp"
#include "bslab/spectral.hpp"
#include "bslab/specfun.hpp"

using bslab::AtomicMeasure;
using bslab::BoundState;
using bslab::SpectralPoint;
using bslab::specfun::i0;
using bslab::specfun::k0;

namespace {

double relerr(double got, double want) {
    return std::abs(got - want) / std::abs(want);
}

// Root of alpha * r * I0(k r) K0(k r) = 1 in k, the closed-form scalar
// counterpart of the circle bound state; independent of the matrix path.
double circle_scalar_root(double r, double alpha) {
    double lo = 1e-8, hi = 1e3;
    for (int i = 0; i < 200; ++i) {
        const double mid = std::sqrt(lo * hi);
        (alpha * r * i0(mid * r) * k0(mid * r) > 1.0 ? lo : hi) = mid;
    }
    return std::sqrt(lo * hi);
}

} // namespace

TEST_CASE("gamma_top matches the circle Bessel product") {
    const auto m = bslab::circle(1.0, 512);
    const SpectralPoint sp = bslab::gamma_top(m, 0.1);
    CHECK(relerr(sp.gamma, i0(0.1) * k0(0.1)) <= 1e-3);
    CHECK(sp.gamma > 0.0);
    CHECK(sp.residual <= 1e-12 * sp.gamma);
    CHECK(std::abs(sp.eigvec.norm() - 1.0) <= 1e-13);
    CHECK(sp.iterations >= 1);
    CHECK(sp.k == 0.1);
}

TEST_CASE("gamma_top circle oracle across four decades of k") {
    const auto m = bslab::circle(1.0, 512);
    for (double k : {1e-3, 1e-2, 1e-1, 1.0}) {
        const SpectralPoint sp = bslab::gamma_top(m, k);
        CHECK(relerr(sp.gamma, i0(k) * k0(k)) <= 1e-3);
    }
}

TEST_CASE("gamma decays strictly in k") {
    const AtomicMeasure ms[] = {
        bslab::circle(1.0, 128),
        bslab::segment({0, 0}, {1, 0}, 96),
        bslab::radial_density(3.0, 24, 8),
    };
    for (const auto& m : ms) {
        const double g0 = bslab::gamma_top(m, 0.01).gamma;
        const double g1 = bslab::gamma_top(m, 0.1).gamma;
        const double g2 = bslab::gamma_top(m, 1.0).gamma;
        CHECK(g0 > g1);
        CHECK(g1 > g2);
    }
}

TEST_CASE("gamma grows like -ln k with slope mu_T/(2 pi)") {
    const auto m = bslab::circle(1.0, 512);
    const double g = bslab::gamma_top(m, 1e-6).gamma;
    const double ratio = g / (-std::log(1e-6) * m.total_mass() / (2.0 * M_PI));
    CHECK(ratio > 0.9);
    CHECK(ratio < 1.1);
}

TEST_CASE("solve_bound_state agrees with the scalar circle equation") {
    const auto m = bslab::circle(1.0, 512);
    const BoundState bs = bslab::solve_bound_state(m, 0.5);
    CHECK(relerr(bs.k_alpha, circle_scalar_root(1.0, 0.5)) <= 1e-3);
    CHECK(bs.lambda == -(bs.k_alpha * bs.k_alpha));
    CHECK(std::abs(0.5 * bs.gamma_at_solution - 1.0) <= 1e-10);
    CHECK(bs.bracket.first <= bs.k_alpha);
    CHECK(bs.bracket.second >= bs.k_alpha);
    CHECK(std::abs(bs.eigvec.norm() - 1.0) <= 1e-12);
    CHECK(bs.alpha == 0.5);
    // re-evaluating through the public path reproduces the consistency bound
    CHECK(std::abs(0.5 * bslab::gamma_top(m, bs.k_alpha).gamma - 1.0) <= 1e-10);
}

TEST_CASE("bound-state energy rises toward zero as the coupling weakens") {
    const auto m = bslab::circle(1.0, 256);
    const double l2 = bslab::solve_bound_state(m, 0.2).lambda;
    const double l1 = bslab::solve_bound_state(m, 0.1).lambda;
    CHECK(l2 < l1);
    CHECK(l1 < 0.0);
}

TEST_CASE("solver is deterministic") {
    const auto m = bslab::circle(1.0, 128);
    const BoundState a = bslab::solve_bound_state(m, 0.3);
    const BoundState b = bslab::solve_bound_state(m, 0.3);
    CHECK(a.k_alpha == b.k_alpha);
    CHECK(a.gamma_at_solution == b.gamma_at_solution);
}

TEST_CASE("c_mu closed forms on circles") {
    // C_mu = (4/r^2) exp(-2 euler_gamma)
    CHECK(relerr(bslab::c_mu(bslab::circle(1.0, 512)), 1.2609470067487736) <= 1e-3);
    CHECK(relerr(bslab::c_mu(bslab::circle(2.0, 512)), 0.3152367516871934) <= 1e-3);
    const double a = bslab::c_mu(bslab::circle(1.0, 512));
    const double b = bslab::c_mu(bslab::circle(1.0, 1024));
    CHECK(std::abs(a - b) <= 1e-3 * a);
}

TEST_CASE("lambda_asymptotic arithmetic, trend, and underflow") {
    const auto m = bslab::circle(1.0, 512);
    const double lam = bslab::lambda_asymptotic(m, 0.2);
    CHECK(lam < 0.0);
    CHECK(relerr(lam, -1.2609470067487736 * std::exp(-10.0)) <= 2e-3);

    bool uf = false;
    const double tiny = bslab::lambda_asymptotic(m, 1e-3, &uf);
    CHECK(uf);
    CHECK(tiny == 0.0);
    CHECK(std::signbit(tiny));

    uf = true;
    bslab::lambda_asymptotic(m, 0.2, &uf);
    CHECK_FALSE(uf);
}

TEST_CASE("predict_ln_k closed forms on circles") {
    // -2 pi/(alpha mu_T) + (2 pi/mu_T^2)(R 1, 1)
    CHECK(std::abs(bslab::predict_ln_k(bslab::circle(1.0, 512), 0.1) -
                   (-9.8840684843415882)) <= 1e-3);
    CHECK(std::abs(bslab::predict_ln_k(bslab::circle(2.0, 512), 0.1) -
                   (-5.5772156649015328)) <= 1e-3);
}

TEST_CASE("ln k expansion error shrinks with alpha") {
    const auto m = bslab::circle(1.0, 512);
    double prev = std::numeric_limits<double>::infinity();
    for (double alpha : {0.4, 0.2, 0.1}) {
        const double got = std::log(bslab::solve_bound_state(m, alpha).k_alpha);
        const double err = std::abs(got - bslab::predict_ln_k(m, alpha));
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev <= 0.1);
}

TEST_CASE("perturbation report converges to the first-order coefficient") {
    const auto m = bslab::circle(1.0, 512);
    const auto rows = bslab::perturbation_report(m, {1e-3, 1e-5, 1e-7});
    REQUIRE(rows.size() == 3);
    // (omega - 1) ln k -> -(2 pi / mu_T^2)(R 1, 1) = -(ln 2 - euler_gamma)
    const double target = -0.11593151565841242;
    CHECK(relerr(rows[2].omega_scaled, target) <= 0.05);
    // in k the limit is the quadrature R form; the gap to it closes even
    // while the mesh error floor (~2.4e-3 here) stays put
    const auto R = bslab::assemble_R(m);
    const Eigen::VectorXd sw = R.weights.cwiseSqrt();
    const double mu = m.total_mass();
    const double mesh_limit = -2.0 * M_PI * sw.dot(R.entries * sw) / (mu * mu);
    CHECK(relerr(mesh_limit, target) <= 5e-3);
    CHECK(std::abs(rows[2].omega_scaled - mesh_limit) <
          std::abs(rows[0].omega_scaled - mesh_limit));
    // omega -> 1 monotonically from above
    CHECK(rows[0].omega > rows[1].omega);
    CHECK(rows[1].omega > rows[2].omega);
    CHECK(rows[2].omega > 1.0);
    // eigenvector deviation stays bounded on the 1/ln k scale
    CHECK(rows[1].dev_scaled <= 10.0 * rows[0].dev_scaled + 1e-12);
    CHECK(rows[2].dev_scaled <= 10.0 * rows[0].dev_scaled + 1e-12);
    for (const auto& r : rows) {
        CHECK(r.gap > 0.0);
        CHECK(r.dev >= 0.0);
        CHECK(r.omega_scaled == (r.omega - 1.0) * std::log(r.k));
    }
}

TEST_CASE("perturbation report validates its k list") {
    const auto m = bslab::circle(1.0, 32);
    CHECK_THROWS_AS(bslab::perturbation_report(m, {}), bslab::validation_error);
    CHECK_THROWS_AS(bslab::perturbation_report(m, {1.5, 0.5}), bslab::validation_error);
    CHECK_THROWS_AS(bslab::perturbation_report(m, {0.5, 0.5}), bslab::validation_error);
    CHECK_THROWS_AS(bslab::perturbation_report(m, {0.1, 0.5}), bslab::validation_error);
}

TEST_CASE("second eigenvalue stays below the R norm bound") {
    const auto m = bslab::circle(1.0, 256);
    const double bound = bslab::spectral_norm(bslab::assemble_R(m)) + 1.0;
    for (double k : {1e-3, 1e-5}) {
        const auto M = bslab::assemble_Q(m, k);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M.entries,
                                                          Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues()(M.size() - 2) <= bound);
    }
}

TEST_CASE("coupling validation and unreachable brackets") {
    const auto m = bslab::circle(1.0, 64);
    CHECK_THROWS_AS(bslab::solve_bound_state(m, 0.0), bslab::validation_error);
    CHECK_THROWS_AS(bslab::solve_bound_state(m, -0.1), bslab::validation_error);
    CHECK_THROWS_AS(bslab::solve_bound_state(m, 1e9), bslab::numerical_error);
    CHECK_THROWS_AS(bslab::solve_bound_state(m, 1e-12), bslab::numerical_error);
    CHECK_THROWS_AS(bslab::lambda_asymptotic(m, 0.0), bslab::validation_error);
    CHECK_THROWS_AS(bslab::predict_ln_k(m, -1.0), bslab::validation_error);
}
