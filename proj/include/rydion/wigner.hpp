#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace rydion {

namespace detail {

// ln(n!) with a small cache; arguments stay below ~300 for any basis here.
inline double log_factorial(int n) {
    if (n < 0) throw std::invalid_argument("log_factorial: negative argument");
    static const auto table = [] {
        std::array<double, 512> t{};
        t[0] = 0.0;
        for (int i = 1; i < 512; ++i) t[i] = t[i - 1] + std::log(double(i));
        return t;
    }();
    if (n < 512) return table[n];
    return std::lgamma(n + 1.0);
}

inline bool half_integer(double x) {
    return std::abs(2.0 * x - std::lround(2.0 * x)) < 1e-9;
}

inline int two(double j) { return static_cast<int>(std::lround(2.0 * j)); }

// triangle condition on (j1, j2, j3)
inline bool triangle(double j1, double j2, double j3) {
    return j3 >= std::abs(j1 - j2) - 1e-9 && j3 <= j1 + j2 + 1e-9 &&
           (two(j1) + two(j2) + two(j3)) % 2 == 0;
}

// sqrt of the triangle coefficient Delta(abc), as a log
inline double log_delta(double a, double b, double c) {
    return 0.5 * (log_factorial((two(a) + two(b) - two(c)) / 2) +
                  log_factorial((two(a) - two(b) + two(c)) / 2) +
                  log_factorial((-two(a) + two(b) + two(c)) / 2) -
                  log_factorial((two(a) + two(b) + two(c)) / 2 + 1));
}

} // namespace detail

// Wigner 3j symbol (j1 j2 j3 / m1 m2 m3), Racah sum with log-factorials.
inline double wigner3j(double j1, double j2, double j3, double m1, double m2,
                       double m3) {
    using namespace detail;
    for (double x : {j1, j2, j3, m1, m2, m3})
        if (!half_integer(x)) throw std::invalid_argument("wigner3j: non half-integer");
    if (two(m1) + two(m2) + two(m3) != 0) return 0.0;
    if (!triangle(j1, j2, j3)) return 0.0;
    if (std::abs(m1) > j1 + 1e-9 || std::abs(m2) > j2 + 1e-9 ||
        std::abs(m3) > j3 + 1e-9)
        return 0.0;
    if ((two(j1) + two(m1)) % 2 != 0 || (two(j2) + two(m2)) % 2 != 0 ||
        (two(j3) + two(m3)) % 2 != 0)
        return 0.0;

    const int t1 = (two(j2) - two(j3) - two(m1)) / 2;
    const int t2 = (two(j1) - two(j3) + two(m2)) / 2;
    const int t3 = (two(j1) + two(j2) - two(j3)) / 2;
    const int t4 = (two(j1) - two(m1)) / 2;
    const int t5 = (two(j2) + two(m2)) / 2;
    const int kmin = std::max({0, t1, t2});
    const int kmax = std::min({t3, t4, t5});
    if (kmin > kmax) return 0.0;

    const double pref =
        log_delta(j1, j2, j3) +
        0.5 * (log_factorial((two(j1) + two(m1)) / 2) +
               log_factorial((two(j1) - two(m1)) / 2) +
               log_factorial((two(j2) + two(m2)) / 2) +
               log_factorial((two(j2) - two(m2)) / 2) +
               log_factorial((two(j3) + two(m3)) / 2) +
               log_factorial((two(j3) - two(m3)) / 2));
    double sum = 0.0;
    for (int k = kmin; k <= kmax; ++k) {
        const double lg = log_factorial(k) + log_factorial(t3 - k) +
                          log_factorial(t4 - k) + log_factorial(t5 - k) +
                          log_factorial(k - t1) + log_factorial(k - t2);
        sum += (k % 2 == 0 ? 1.0 : -1.0) * std::exp(pref - lg);
    }
    const int phase = (two(j1) - two(j2) - two(m3)) / 2;
    return (phase % 2 == 0 ? 1.0 : -1.0) * sum;
}

// Clebsch-Gordan coefficient <j1 m1 j2 m2 | J M>
inline double clebsch_gordan(double j1, double m1, double j2, double m2, double J,
                             double M) {
    using namespace detail;
    if (two(m1) + two(m2) != two(M)) return 0.0;
    const int phase = (two(j1) - two(j2) + two(M)) / 2;
    return (phase % 2 == 0 ? 1.0 : -1.0) * std::sqrt(2.0 * J + 1.0) *
           wigner3j(j1, j2, J, m1, m2, -M);
}

// Wigner 6j symbol {j1 j2 j3 / j4 j5 j6}
inline double wigner6j(double j1, double j2, double j3, double j4, double j5,
                       double j6) {
    using namespace detail;
    for (double x : {j1, j2, j3, j4, j5, j6})
        if (!half_integer(x)) throw std::invalid_argument("wigner6j: non half-integer");
    if (!triangle(j1, j2, j3) || !triangle(j1, j5, j6) || !triangle(j4, j2, j6) ||
        !triangle(j4, j5, j3))
        return 0.0;

    const double pref = log_delta(j1, j2, j3) + log_delta(j1, j5, j6) +
                        log_delta(j4, j2, j6) + log_delta(j4, j5, j3);
    const int a1 = (two(j1) + two(j2) + two(j3)) / 2;
    const int a2 = (two(j1) + two(j5) + two(j6)) / 2;
    const int a3 = (two(j4) + two(j2) + two(j6)) / 2;
    const int a4 = (two(j4) + two(j5) + two(j3)) / 2;
    const int b1 = (two(j1) + two(j2) + two(j4) + two(j5)) / 2;
    const int b2 = (two(j2) + two(j3) + two(j5) + two(j6)) / 2;
    const int b3 = (two(j3) + two(j1) + two(j6) + two(j4)) / 2;
    const int kmin = std::max({a1, a2, a3, a4});
    const int kmax = std::min({b1, b2, b3});
    double sum = 0.0;
    for (int k = kmin; k <= kmax; ++k) {
        const double lg = log_factorial(k - a1) + log_factorial(k - a2) +
                          log_factorial(k - a3) + log_factorial(k - a4) +
                          log_factorial(b1 - k) + log_factorial(b2 - k) +
                          log_factorial(b3 - k);
        sum += (k % 2 == 0 ? 1.0 : -1.0) *
               std::exp(pref + log_factorial(k + 1) - lg);
    }
    return sum;
}

} // namespace rydion
