#pragma once

#include <cmath>
#include <cstdlib>
#include <stdexcept>

// Modified Bessel functions K0, K1, I0 and the Bessel function J0 in double
// precision, self-contained.  The solver only needs order zero and one on
// positive real arguments:
//
//   K0, K1 : x in [1e-8, ~700], relative accuracy ~1e-15
//   I0     : x in [0, ~700]    (series, all terms positive)
//   J0     : x in [0, 1e4],    absolute accuracy ~1e-14
//
// Method per function, with the crossover points used below:
//   k0, k1 : ascending series for x <= 2; Thompson-Barnett continued
//            fraction for x > 2 (evaluated in scaled form e^{x}K_nu).
//   i0     : ascending series everywhere (monotone, no cancellation).
//   j0     : ascending series for x <= 4; backward (Miller) recurrence with
//            even-order normalization for 4 < x < 18; Hankel asymptotic
//            expansion for x >= 18, using cos x and sin x directly to avoid
//            reducing x - pi/4.
//
// Small-argument expansion used throughout the solver:
//   K0(x) = -ln(x/2) - euler_gamma + s(x),   s(x) = O(x^2 ln x).

namespace bslab::specfun {

inline constexpr double euler_gamma = 0.5772156649015328606;

namespace detail {

// Ascending series of K0 and K1 (A&S 9.6.10-9.6.13 family), x <= 2.
inline void k0k1_series(double x, double& k0_out, double& k1_out) {
    const double q = 0.25 * x * x;
    const double lx = std::log(0.5 * x);

    double t = 1.0, i0 = 1.0, s0 = 0.0, H = 0.0;
    for (int m = 1; m <= 32; ++m) {
        t *= q / (static_cast<double>(m) * m);
        H += 1.0 / m;
        i0 += t;
        s0 += t * H;
        if (t < 1e-18) break;
    }
    k0_out = -(lx + euler_gamma) * i0 + s0;

    // I1 = (x/2) * sum t_m,  t_m = q^m / (m! (m+1)!)
    double u = 1.0, i1 = 1.0, Hm = 0.0, Hm1 = 1.0, s1 = 1.0;
    for (int m = 1; m <= 32; ++m) {
        u *= q / (static_cast<double>(m) * (m + 1));
        i1 += u;
        Hm += 1.0 / m;
        Hm1 += 1.0 / (m + 1);
        s1 += (Hm + Hm1) * u;
        if (u < 1e-18) break;
    }
    const double I1 = 0.5 * x * i1;
    k1_out = 1.0 / x + lx * I1 - 0.25 * x * (s1 - 2.0 * euler_gamma * i1);
}

// Continued fraction for the scaled pair e^{x}K0, e^{x}K1 (order mu = 0),
// valid for x >= 2.  Returns e^{x} K0(x); k1_scaled gets e^{x} K1(x).
inline double k0k1_cf_scaled(double x, double& k1_scaled) {
    constexpr double eps = 1e-16;
    const double a1 = 0.25;
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d, delh = d;
    double q1 = 0.0, q2 = 1.0;
    double q = a1, c = a1, aa = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i <= 1000; ++i) {
        aa -= 2.0 * (i - 1);
        c = -aa * c / i;
        const double qnew = (q1 - b * q2) / aa;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + aa * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < eps) {
            h = a1 * h;
            const double k0s = std::sqrt(M_PI / (2.0 * x)) / s;
            k1_scaled = k0s * (x + 0.5 - h) / x;
            return k0s;
        }
    }
    throw std::runtime_error("specfun: Macdonald continued fraction did not converge");
}

inline double require_positive(double x, const char* name) {
    if (!(x > 0.0)) throw std::domain_error(std::string(name) + ": argument must be positive");
    return x;
}

} // namespace detail

// Macdonald function K0.  Underflows to exact 0.0 for x beyond ~746; the
// optional flag reports that case.
inline double k0(double x, bool* underflow = nullptr) {
    detail::require_positive(x, "k0");
    if (underflow) *underflow = false;
    double a, b;
    if (x <= 2.0) {
        detail::k0k1_series(x, a, b);
        return a;
    }
    double k1s;
    const double k0s = detail::k0k1_cf_scaled(x, k1s);
    const double r = k0s * std::exp(-x);
    if (r == 0.0 && underflow) *underflow = true;
    return r;
}

inline double k1(double x, bool* underflow = nullptr) {
    detail::require_positive(x, "k1");
    if (underflow) *underflow = false;
    double a, b;
    if (x <= 2.0) {
        detail::k0k1_series(x, a, b);
        return b;
    }
    double k1s;
    detail::k0k1_cf_scaled(x, k1s);
    const double r = k1s * std::exp(-x);
    if (r == 0.0 && underflow) *underflow = true;
    return r;
}

// Remainder s(x) = K0(x) + ln(x/2) + euler_gamma, cancellation-free: for
// x <= 2 every series term vanishes with x, for x > 2 the direct difference
// has no cancellation.  Used for the kernel decomposition residual.
inline double k0_remainder(double x) {
    detail::require_positive(x, "k0_remainder");
    if (x <= 2.0) {
        const double q = 0.25 * x * x;
        const double lg = std::log(0.5 * x) + euler_gamma;
        double t = 1.0, i0m1 = 0.0, s0 = 0.0, H = 0.0;
        for (int m = 1; m <= 32; ++m) {
            t *= q / (static_cast<double>(m) * m);
            H += 1.0 / m;
            i0m1 += t;
            s0 += t * H;
            if (t < 1e-18) break;
        }
        return -lg * i0m1 + s0;
    }
    return k0(x) + std::log(0.5 * x) + euler_gamma;
}

inline double i0(double x) {
    if (x < 0.0) throw std::domain_error("i0: argument must be nonnegative");
    const double q = 0.25 * x * x;
    double t = 1.0, s = 1.0;
    for (int m = 1; m <= 1000; ++m) {
        t *= q / (static_cast<double>(m) * m);
        s += t;
        if (t < 1e-17 * s) break;
    }
    return s;
}

namespace detail {

inline double j0_series(double x) {
    const double q = 0.25 * x * x;
    double t = 1.0, s = 1.0;
    for (int m = 1; m <= 64; ++m) {
        t *= -q / (static_cast<double>(m) * m);
        s += t;
        if (std::abs(t) < 1e-18) break;
    }
    return s;
}

// Miller backward recurrence, normalized by J0 + 2(J2 + J4 + ...) = 1.
inline double j0_miller(double x) {
    int nstart = static_cast<int>(x + 18.0 + 15.0 * std::cbrt(x));
    if (nstart % 2) ++nstart;
    double jp = 0.0, j = 1e-30, sum = 0.0, j0v = 0.0;
    for (int n = nstart; n >= 1; --n) {
        const double jm = (2.0 * n / x) * j - jp;
        jp = j;
        j = jm;
        if (std::abs(j) > 1e250) {
            j *= 1e-250;
            jp *= 1e-250;
            sum *= 1e-250;
        }
        const int idx = n - 1;
        if (idx == 0)
            j0v = j;
        else if (idx % 2 == 0)
            sum += 2.0 * j;
    }
    return j0v / (j0v + sum);
}

// Hankel expansion: J0(x) = sqrt(1/(pi x)) [(P+Q) sin x + (P-Q) cos x],
// P, Q the usual asymptotic sums with a_k = ((2k-1)!!)^2 / (k! 8^k x^k).
inline double j0_asymptotic(double x) {
    double P = 0.0, Q = 0.0;
    double term = 1.0;
    for (int k = 0; k < 60; ++k) {
        const double signed_term = ((k / 2) % 2 == 0 ? term : -term);
        if (k % 2 == 0)
            P += signed_term;
        else
            Q += signed_term;
        const double next = term * (2.0 * k + 1.0) * (2.0 * k + 1.0) / (8.0 * (k + 1) * x);
        if (next >= term || term < 1e-18) break;
        term = next;
    }
    return std::sqrt(1.0 / (M_PI * x)) * ((P + Q) * std::sin(x) + (P - Q) * std::cos(x));
}

} // namespace detail

inline double j0(double x) {
    if (x < 0.0) throw std::domain_error("j0: argument must be nonnegative");
    if (x == 0.0) return 1.0;
    if (x <= 4.0) return detail::j0_series(x);
    if (x < 18.0) return detail::j0_miller(x);
    return detail::j0_asymptotic(x);
}

} // namespace bslab::specfun
