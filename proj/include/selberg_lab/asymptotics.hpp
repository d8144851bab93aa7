#pragma once

// Exponent calculus for the short-interval mean-square bounds:
//
//   hypothesis   Jt_f(N,H) << N H^{1+A}       (A in [0,1))
//   conclusion   J_f(N,H)  << N H^{1 + (1+3A)/(5-A)}
//
// with the splitting parameters eps = H^{-2(1-A)/(5-A)} and
// E = H^{-(1-A)^2/(2(5-A))}. All exponent identities are checked in exact
// rational arithmetic; floating point only enters when powers of H are
// evaluated.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "numeric.hpp"

namespace selberg_lab {

using Rational = boost::rational<std::int64_t>;

inline double to_double(const Rational& r) noexcept
{
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

inline void require_unit_exponent(const Rational& A, const char* who)
{
    if (A < Rational(0) || A >= Rational(1))
        throw std::domain_error(std::string(who) + ": A must lie in [0, 1)");
}

inline Rational exponent_map(const Rational& A)
{
    require_unit_exponent(A, "exponent_map");
    return Rational(1) + (Rational(1) + 3 * A) / (Rational(5) - A);
}

inline Rational eps_exponent(const Rational& A) { return -2 * (Rational(1) - A) / (Rational(5) - A); }
inline Rational E_exponent(const Rational& A)
{
    const Rational one_minus = Rational(1) - A;
    return -(one_minus * one_minus) / (2 * (Rational(5) - A));
}

// H-exponents of the three majorization terms
//   eps^2,  E^2 H^{A-1} / eps^{1-A},  H^{A-1} / E^2
inline std::array<Rational, 3> balance_exponents(const Rational& A)
{
    const Rational ee = eps_exponent(A);
    const Rational eE = E_exponent(A);
    return {2 * ee, 2 * eE + (A - 1) - (Rational(1) - A) * ee, (A - 1) - 2 * eE};
}

inline bool balance_check(const Rational& A)
{
    require_unit_exponent(A, "balance_check");
    const auto t = balance_exponents(A);
    return t[0] == t[1] && t[1] == t[2];
}

struct ExponentParams {
    Rational A;
    Rational eps_exponent;
    Rational E_exponent;
    std::int64_t H = 0;
    double eps = 0.0;
    double E = 0.0;
    std::array<double, 3> terms{}; // the three majorization terms, evaluated separately
};

inline ExponentParams optimal_eps_E(const Rational& A, std::int64_t H)
{
    require_unit_exponent(A, "optimal_eps_E");
    if (H < 2)
        throw std::domain_error("optimal_eps_E: H >= 2 required");
    ExponentParams p;
    p.A = A;
    p.H = H;
    p.eps_exponent = eps_exponent(A);
    p.E_exponent = E_exponent(A);
    const double h = static_cast<double>(H);
    const double a = to_double(A);
    p.eps = std::pow(h, to_double(p.eps_exponent));
    p.E = std::pow(h, to_double(p.E_exponent));
    p.terms[0] = p.eps * p.eps;
    p.terms[1] = p.E * p.E * std::pow(h, a - 1.0) / std::pow(p.eps, 1.0 - a);
    p.terms[2] = std::pow(h, a - 1.0) / (p.E * p.E);

    if (!(0.0 < p.eps && p.eps < p.E && p.E < 1.0))
        throw std::logic_error("optimal_eps_E: ordering 0 < eps < E < 1 violated");
    for (int i = 1; i < 3; ++i)
        if (relative_difference(p.terms[0], p.terms[static_cast<std::size_t>(i)]) > 1e-12)
            throw std::logic_error("optimal_eps_E: majorization terms out of balance");
    return p;
}

// ---------------------------------------------------------------------------

struct FitSample {
    std::int64_t N = 0;
    std::int64_t H = 0;
    double J_tilde = 0.0;
};

struct FitReport {
    std::vector<FitSample> samples;
    double slope = 0.0;
    double intercept = 0.0;
    double A_hat = 0.0;
    double residual = 0.0;
    std::int64_t H1 = 0;
    std::int64_t H2 = 0;
    double delta = 0.1;
    // A finite fit can never certify a bound for every H in [H1, H2].
    bool empirical_only = true;
    // Every sample satisfies N^delta <= H <= N^{1/2 - delta}.
    bool in_regime = true;
};

// OLS of log(Jt/N) against log H; A_hat = slope - 1.
inline FitReport fit_exponent(std::vector<FitSample> samples, double delta = 0.1)
{
    if (samples.size() < 2)
        throw std::invalid_argument("fit_exponent: at least two samples required");
    if (!(delta > 0.0 && delta < 0.5))
        throw std::invalid_argument("fit_exponent: delta must lie in (0, 1/2)");

    FitReport r;
    r.delta = delta;
    r.H1 = std::numeric_limits<std::int64_t>::max();
    std::vector<double> xs, ys;
    for (const auto& s : samples) {
        if (s.N < 1 || s.H < 1 || !(s.J_tilde > 0.0) || !std::isfinite(s.J_tilde))
            throw std::invalid_argument("fit_exponent: samples need N, H >= 1 and finite J_tilde > 0");
        const double n = static_cast<double>(s.N);
        const double h = static_cast<double>(s.H);
        if (h < std::pow(n, delta) || h > std::pow(n, 0.5 - delta))
            r.in_regime = false;
        r.H1 = std::min(r.H1, s.H);
        r.H2 = std::max(r.H2, s.H);
        xs.push_back(std::log(h));
        ys.push_back(std::log(s.J_tilde / n));
    }
    if (r.H1 == r.H2)
        throw std::invalid_argument("fit_exponent: degenerate design (all H equal)");

    const double m = static_cast<double>(xs.size());
    const double xbar = compensated_total(xs) / m;
    const double ybar = compensated_total(ys) / m;
    CompensatedSum<> sxx, sxy;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - xbar) * (xs[i] - xbar);
        sxy += (xs[i] - xbar) * (ys[i] - ybar);
    }
    r.slope = sxy.value() / sxx.value();
    r.intercept = ybar - r.slope * xbar;
    r.A_hat = r.slope - 1.0;
    CompensatedSum<> ss;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - (r.intercept + r.slope * xs[i]);
        ss += e * e;
    }
    r.residual = std::sqrt(ss.value() / m);
    r.samples = std::move(samples);
    return r;
}

// J / (N H (log N)^4), natural log. The guard H <= 4 N^{1/3} is advisory
// and left to the caller.
inline double lower_bound_ratio(std::int64_t N, std::int64_t H, double J)
{
    if (N < 3)
        throw std::domain_error("lower_bound_ratio: N >= 3 required");
    if (H < 1)
        throw std::domain_error("lower_bound_ratio: H >= 1 required");
    if (J < 0.0)
        throw std::domain_error("lower_bound_ratio: J must be nonnegative");
    const double L = std::log(static_cast<double>(N));
    return J / (static_cast<double>(N) * static_cast<double>(H) * L * L * L * L);
}

inline double conjecture_ratio(std::int64_t N, std::int64_t H, double J_tilde)
{
    if (N < 1 || H < 1)
        throw std::domain_error("conjecture_ratio: N, H >= 1 required");
    return J_tilde / (static_cast<double>(N) * static_cast<double>(H));
}

} // namespace selberg_lab
