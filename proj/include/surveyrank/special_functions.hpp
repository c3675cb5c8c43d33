#pragma once

// Regularized incomplete gamma functions and the chi-square upper tail.
// Two independent evaluation routes are exposed so they can be checked
// against each other where both converge.

#include "surveyrank/common.hpp"

#include <cmath>
#include <limits>

namespace surveyrank::special {

inline constexpr int max_gamma_iterations = 100000;

// Lower regularized P(a, x) by the power series
//   P = x^a e^-x / Gamma(a+1) * sum_n x^n / ((a+1)...(a+n)).
// Converges for all x >= 0, fast when x < a + 1.
inline double gamma_p_series(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) throw PreconditionError("gamma_p_series: need a > 0, x >= 0");
    if (x == 0.0) return 0.0;
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < max_gamma_iterations; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) {
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw NumericalError("gamma_p_series: no convergence");
}

// Upper regularized Q(a, x) by the Legendre continued fraction evaluated
// with the modified Lentz method. Converges for x > 0, fast when x > a + 1.
inline double gamma_q_continued_fraction(double a, double x) {
    if (!(a > 0.0) || !(x > 0.0)) throw PreconditionError("gamma_q_continued_fraction: need a > 0, x > 0");
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < max_gamma_iterations; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) {
            return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
        }
    }
    throw NumericalError("gamma_q_continued_fraction: no convergence");
}

// Q(a, x), choosing the faster-converging route.
inline double gamma_q(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) throw PreconditionError("gamma_q: need a > 0, x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_continued_fraction(a, x);
}

inline double gamma_p(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) throw PreconditionError("gamma_p: need a > 0, x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_continued_fraction(a, x);
}

// P(X >= x) for X ~ chi-square(df).
inline double chi_square_upper_tail(double x, double df) {
    if (!(df > 0.0)) throw PreconditionError("chi_square_upper_tail: df must be positive");
    if (!(x > 0.0)) return 1.0;
    return gamma_q(0.5 * df, 0.5 * x);
}

}  // namespace surveyrank::special
