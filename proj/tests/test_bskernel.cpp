#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <cstdlib>
#include <random>

#include "bslab/bskernel.hpp"
#include "bslab/measure.hpp"
#include "bslab/specfun.hpp"

using bslab::AtomicMeasure;
using bslab::BSMatrix;
using bslab::PanelKind;
using namespace bslab::specfun;

namespace {

constexpr double inv_2pi = 0.15915494309189535;

double relerr(double got, double want) {
    return std::abs(got - want) / std::abs(want);
}

double quadratic_form_ones(const BSMatrix& m) {
    const Eigen::VectorXd sw = m.weights.cwiseSqrt();
    return sw.dot(m.entries * sw);
}

bool bit_identical(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (a.data()[i] != b.data()[i]) return false;
    return true;
}

} // namespace

TEST_CASE("green_kernel far field and self panel") {
    // rho = 1, k = 1: plain Macdonald value
    CHECK(relerr(bslab::green_kernel(1.0, 1.0, 0.01, PanelKind::curve),
                 inv_2pi * 0.42102443824070823) <= 1e-13);
    // self panel, small-argument average, curve and area
    bool warn = true;
    const double curve = bslab::green_kernel(0.1, 0.0, 0.01, PanelKind::curve, &warn);
    CHECK_FALSE(warn);
    CHECK(relerr(curve, inv_2pi * (-std::log(0.05) - euler_gamma + 1.0 - std::log(0.005))) <=
          1e-15);
    const double area = bslab::green_kernel(0.1, 0.0, 0.01, PanelKind::area);
    CHECK(relerr(area, inv_2pi * (-std::log(0.05) - euler_gamma + 0.5 - std::log(0.01))) <=
          1e-15);
    // monotone decay in k at fixed rho
    CHECK(bslab::green_kernel(2.0, 1.0, 0.01, PanelKind::curve) <
          bslab::green_kernel(1.0, 1.0, 0.01, PanelKind::curve));
}

TEST_CASE("green_kernel self-panel fallback for large k*scale") {
    const double k = 30.0, h = 0.01;  // k*h = 0.3, past the small-argument regime
    bool warn = false;
    const double got = bslab::green_kernel(k, 0.0, h, PanelKind::curve, &warn);
    CHECK(warn);
    // reference: leading average plus dense Simpson quadrature of the remainder
    const int n = 4096;
    const double dt = 0.5 * h / n;
    double rem = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        const double t = i * dt;
        rem += w * (t == 0.0 ? 0.0 : k0_remainder(k * t));
    }
    rem *= dt / 3.0 / (0.5 * h);
    const double want =
        inv_2pi * (-std::log(0.5 * k) - euler_gamma + 1.0 - std::log(0.5 * h) + rem);
    CHECK(relerr(got, want) <= 1e-9);
}

TEST_CASE("green_kernel validation") {
    CHECK_THROWS_AS(bslab::green_kernel(0.0, 1.0, 0.01, PanelKind::curve),
                    bslab::validation_error);
    CHECK_THROWS_AS(bslab::green_kernel(1.0, -1.0, 0.01, PanelKind::curve),
                    bslab::validation_error);
    CHECK_THROWS_AS(bslab::green_kernel(1.0, 0.0, 0.0, PanelKind::curve),
                    bslab::validation_error);
}

TEST_CASE("assemble_Q on the circle reproduces the Bessel product eigenvalue") {
    const auto m = bslab::circle(1.0, 512);
    const auto M = bslab::assemble_Q(m, 0.1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M.entries);
    const double top = es.eigenvalues().maxCoeff();
    CHECK(relerr(top, i0(0.1) * k0(0.1)) <= 1e-3);

    // top eigenvector is the constant L^2_mu function: proportional to sqrt(w)
    Eigen::VectorXd u = M.weights.cwiseSqrt();
    u.normalize();
    const Eigen::VectorXd v = es.eigenvectors().col(M.size() - 1);
    CHECK((v - u * u.dot(v)).norm() <= 1e-10);
}

TEST_CASE("assemble_Q single panel matches the closed-form average") {
    const double h = 0.05, k = 0.3;
    const auto m = AtomicMeasure::from_atoms(
        {bslab::Atom{{0.7, -0.2}, h, h, PanelKind::curve}}, "one panel");
    const auto M = bslab::assemble_Q(m, k);
    REQUIRE(M.size() == 1);
    const double want =
        h * inv_2pi * (-std::log(0.5 * k) - euler_gamma + 1.0 - std::log(0.5 * h));
    CHECK(relerr(M.entries(0, 0), want) <= 1e-15);
}

TEST_CASE("assemble_Q is entrywise monotone decreasing in k") {
    const auto m = bslab::circle(1.0, 64);
    const auto lo = bslab::assemble_Q(m, 0.1);
    const auto hi = bslab::assemble_Q(m, 0.5);
    CHECK(((hi.entries - lo.entries).array() <= 0.0).all());
    CHECK((lo.entries.array() >= 0.0).all());
    CHECK((hi.entries.array() >= 0.0).all());
}

TEST_CASE("assembled matrices are exactly symmetric") {
    const auto m = bslab::polyline({{0, 0}, {1, 0}, {1, 1}}, 40.0);
    for (const BSMatrix& M :
         {bslab::assemble_Q(m, 0.2), bslab::assemble_P(m), bslab::assemble_R(m)}) {
        bool sym = true;
        for (int i = 0; i < M.size() && sym; ++i)
            for (int j = i + 1; j < M.size(); ++j)
                if (M.entries(i, j) != M.entries(j, i)) {
                    sym = false;
                    break;
                }
        CHECK(sym);
    }
}

TEST_CASE("assemble_P is the weighted rank-one projector") {
    const auto m = bslab::circle(1.0, 257);
    const auto P = bslab::assemble_P(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P.entries);
    const int n = P.size();
    CHECK(std::abs(es.eigenvalues()(n - 1) - 1.0) <= 1e-12);  // mu_T/(2pi) = 1 for circle(1)
    CHECK(std::abs(es.eigenvalues()(n - 2)) <= 1e-12);
    CHECK(relerr(P.entries.trace(), m.total_mass() * inv_2pi) <= 1e-13);
    CHECK((P.entries.array() >= 0.0).all());

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P.entries);
    CHECK(svd.singularValues()(1) <= 1e-12 * svd.singularValues()(0));
}

TEST_CASE("assemble_R reproduces the circle quadratic form") {
    // (R 1, 1) = 2 pi r^2 (-ln(r/2) - euler_gamma + ln 2); the discretization
    // error is first order in the panel count
    const double want1 = 0.72841919582399706;
    const double e512 = quadratic_form_ones(bslab::assemble_R(bslab::circle(1.0, 512))) - want1;
    const double e1024 =
        quadratic_form_ones(bslab::assemble_R(bslab::circle(1.0, 1024))) - want1;
    CHECK(std::abs(e512) / want1 <= 3e-3);
    CHECK(std::abs(e1024) >= 0.4 * std::abs(e512));
    CHECK(std::abs(e1024) <= 0.6 * std::abs(e512));

    const auto r2 = bslab::assemble_R(bslab::circle(2.0, 512));
    CHECK(relerr(quadratic_form_ones(r2), -14.507011939132827) <= 1e-3);
}

TEST_CASE("assemble_R norm is stable under refinement") {
    const double n512 = bslab::spectral_norm(bslab::assemble_R(bslab::circle(1.0, 512)));
    const double n1024 = bslab::spectral_norm(bslab::assemble_R(bslab::circle(1.0, 1024)));
    CHECK(relerr(n1024, n512) <= 1e-2);
}

TEST_CASE("decomposition residual: direct assembly equals the three-term difference") {
    const auto m = bslab::circle(1.0, 64);
    const double k = 0.01;
    const auto [S, norm] = bslab::decomposition_residual(m, k);
    CHECK(norm > 0.0);
    for (int i = 0; i < S.size(); ++i) CHECK(S.entries(i, i) == 0.0);

    const auto Q = bslab::assemble_Q(m, k);
    const auto P = bslab::assemble_P(m);
    const auto R = bslab::assemble_R(m);
    const Eigen::MatrixXd diff = Q.entries + std::log(k) * P.entries - R.entries;
    CHECK((S.entries - diff).cwiseAbs().maxCoeff() <= 1e-14);

    // entries are the weighted Macdonald remainder
    const auto& atoms = m.atoms();
    const double rho = bslab::distance(atoms[0].position, atoms[1].position);
    const double want = atoms[0].weight * inv_2pi * k0_remainder(k * rho);
    CHECK(relerr(S.entries(0, 1), want) <= 1e-14);
}

TEST_CASE("decomposition residual follows the k^2 ln k order") {
    const auto m = bslab::circle(1.0, 256);
    const double n2 = bslab::decomposition_residual(m, 1e-2).second;
    const double n3 = bslab::decomposition_residual(m, 1e-3).second;
    const double expected_ratio = (1e-4 * std::abs(std::log(1e-2))) /
                                  (1e-6 * std::abs(std::log(1e-3)));  // 66.7
    CHECK(n2 / n3 >= expected_ratio / 2.0);
    CHECK(n2 / n3 <= expected_ratio * 2.0);
}

TEST_CASE("Q matrices are positive semi-definite under random probing") {
    std::mt19937 rng(12345);
    std::normal_distribution<double> gauss;
    const AtomicMeasure ms[] = {
        bslab::circle(1.0, 128),
        bslab::segment({0, 0}, {1, 0}, 128),
        bslab::polyline({{0, 0}, {1, 0}, {1, 1}}, 60.0),
        bslab::radial_density(3.0, 32, 8),
        bslab::grid_density([](double, double) { return 1.0; }, bslab::Box{0, 0, 1, 1}, 12, 12,
                            "one"),
    };
    for (const auto& m : ms) {
        for (double k : {1e-3, 1.0}) {
            const auto M = bslab::assemble_Q(m, k);
            const double scale = M.entries.cwiseAbs().maxCoeff();
            for (int t = 0; t < 200; ++t) {
                Eigen::VectorXd v(M.size());
                for (int i = 0; i < v.size(); ++i) v[i] = gauss(rng);
                CHECK(v.dot(M.entries * v) >= -1e-12 * scale * v.squaredNorm());
            }
        }
    }
}

TEST_CASE("assembly is deterministic and thread-count independent") {
    const auto m = bslab::circle(1.0, 128);
    const auto a = bslab::assemble_Q(m, 0.3);
    const auto b = bslab::assemble_Q(m, 0.3);
    CHECK(bit_identical(a.entries, b.entries));

    setenv("BSLAB_THREADS", "3", 1);
    const auto c = bslab::assemble_Q(m, 0.3);
    unsetenv("BSLAB_THREADS");
    CHECK(bit_identical(a.entries, c.entries));
}

TEST_CASE("assembly validation") {
    const auto point = AtomicMeasure::from_atoms(
        {bslab::Atom{{0, 0}, 1.0, 0.0, PanelKind::curve}}, "bare point");
    CHECK_THROWS_AS(bslab::assemble_Q(point, 0.1), bslab::validation_error);
    CHECK_THROWS_AS(bslab::assemble_R(point), bslab::validation_error);

    const auto m = bslab::circle(1.0, 16);
    CHECK_THROWS_AS(bslab::assemble_Q(m, 1e-9), bslab::validation_error);
    CHECK_THROWS_AS(bslab::assemble_Q(m, 2e3), bslab::validation_error);
    CHECK_THROWS_AS(bslab::decomposition_residual(m, 0.6), bslab::validation_error);
    CHECK_THROWS_AS(bslab::decomposition_residual(m, 0.0), bslab::validation_error);

    CHECK_THROWS_AS(bslab::assemble_Q(bslab::circle(1.0, 4100), 0.1), bslab::validation_error);
}

TEST_CASE("matrix metadata") {
    const auto m = bslab::segment({0, 0}, {1, 0}, 8);
    const auto Q = bslab::assemble_Q(m, 0.25);
    CHECK(Q.k == 0.25);
    CHECK(Q.kind == bslab::MatrixKind::Q);
    CHECK(Q.weights.size() == 8);
    CHECK(Q.weights[0] == m.atoms()[0].weight);
    CHECK(bslab::assemble_P(m).kind == bslab::MatrixKind::P);
    CHECK(bslab::assemble_R(m).kind == bslab::MatrixKind::R);
    CHECK(bslab::decomposition_residual(m, 0.1).first.kind == bslab::MatrixKind::residual);
}
