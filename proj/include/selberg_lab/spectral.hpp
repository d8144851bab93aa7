#pragma once

// Fourier side of the short-interval mean squares.
//
// f^(a) = sum_{N<n<=2N} f(n) e(n a) and u^(a) = sum_{h<=H} e(h a). Weighted
// energies int |f^|^2 |u^|^2 and int |f^|^2 |u^|^4 / H^2 are trigonometric
// polynomials in a, so they are evaluated exactly through correlations:
//
//   int |f^|^2 |u^|^2        = sum_h C_u(h)       C_f(h)
//   int |f^|^2 |u^|^4 / H^2  = sum_h C_{C_u/H}(h) C_f(h)
//
// Quadrature only appears where the integrand is cut by level sets of |u^|.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fftw3.h>

#include "arith_core.hpp"
#include "numeric.hpp"
#include "selberg.hpp"

namespace selberg_lab {

enum class CorrelationMethod { direct, fft };

inline std::string_view to_string(CorrelationMethod m) noexcept { return m == CorrelationMethod::direct ? "direct" : "fft"; }

namespace fft {

inline std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};
struct PlanDestroy {
    void operator()(fftw_plan p) const noexcept
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(p);
    }
};
using RealBuffer = std::unique_ptr<double, FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex, FftwFree>;
using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDestroy>;

inline std::size_t next_pow2(std::size_t n) noexcept
{
    std::size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

// Forward real DFT of x zero-padded to `length`: X[j] = sum_i x[i] e^{-2 pi i ij/length}, j <= length/2.
inline std::vector<std::complex<double>> forward(std::span<const double> x, std::size_t length)
{
    if (x.size() > length)
        throw std::invalid_argument("fft::forward: input longer than transform");
    RealBuffer in(fftw_alloc_real(length));
    ComplexBuffer out(fftw_alloc_complex(length / 2 + 1));
    Plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(length), in.get(), out.get(), FFTW_ESTIMATE));
    }
    std::copy(x.begin(), x.end(), in.get());
    std::fill(in.get() + x.size(), in.get() + length, 0.0);
    fftw_execute(plan.get());
    std::vector<std::complex<double>> X(length / 2 + 1);
    for (std::size_t j = 0; j < X.size(); ++j)
        X[j] = {out.get()[j][0], out.get()[j][1]};
    return X;
}

// Inverse of `forward`, including the 1/length normalization.
inline std::vector<double> inverse(std::span<const std::complex<double>> X, std::size_t length)
{
    ComplexBuffer in(fftw_alloc_complex(length / 2 + 1));
    RealBuffer out(fftw_alloc_real(length));
    Plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan.reset(fftw_plan_dft_c2r_1d(static_cast<int>(length), in.get(), out.get(), FFTW_ESTIMATE));
    }
    for (std::size_t j = 0; j < X.size(); ++j) {
        in.get()[j][0] = X[j].real();
        in.get()[j][1] = X[j].imag();
    }
    fftw_execute(plan.get());
    std::vector<double> x(length);
    const double scale = 1.0 / static_cast<double>(length);
    for (std::size_t i = 0; i < length; ++i)
        x[i] = out.get()[i] * scale;
    return x;
}

} // namespace fft

// ---------------------------------------------------------------------------
// Correlations

// C(h) = sum_{n in outer} a(n) b(n-h), inner index clipped to b's window.
struct CorrelationTable {
    std::int64_t hmax = 0;
    std::vector<double> values; // values[h + hmax]
    CorrelationMethod method = CorrelationMethod::direct;
    std::int64_t base_lo = 0; // outer n-range [base_lo, base_hi]
    std::int64_t base_hi = 0;

    double at(std::int64_t h) const noexcept
    {
        if (h < -hmax || h > hmax)
            return 0.0;
        return values[static_cast<std::size_t>(h + hmax)];
    }
};

// A real sequence anchored at integer position `lo`.
struct Anchored {
    std::span<const double> values;
    std::int64_t lo = 0;
    std::int64_t hi() const noexcept { return lo + static_cast<std::int64_t>(values.size()) - 1; }
};

inline CorrelationTable cross_correlation(Anchored outer, Anchored inner, std::int64_t hmax, CorrelationMethod method)
{
    if (outer.values.empty() || inner.values.empty())
        throw std::invalid_argument("correlation: empty sequence");
    if (hmax < 0 || hmax >= static_cast<std::int64_t>(outer.values.size()))
        throw std::invalid_argument("correlation: hmax must be below the length of the base range");

    CorrelationTable t{hmax, std::vector<double>(static_cast<std::size_t>(2 * hmax + 1), 0.0), method, outer.lo, outer.hi()};
    if (method == CorrelationMethod::direct) {
        for (std::int64_t h = -hmax; h <= hmax; ++h) {
            const std::int64_t from = std::max(outer.lo, inner.lo + h);
            const std::int64_t to = std::min(outer.hi(), inner.hi() + h);
            CompensatedSum<> acc;
            for (std::int64_t n = from; n <= to; ++n)
                acc += outer.values[static_cast<std::size_t>(n - outer.lo)] * inner.values[static_cast<std::size_t>(n - h - inner.lo)];
            t.values[static_cast<std::size_t>(h + hmax)] = acc.value();
        }
        return t;
    }

    // r[k] = sum_i a[i] b[i-k] with k = h - outer.lo + inner.lo; padding to
    // >= la + lb keeps the circular product free of wraparound.
    const std::size_t la = outer.values.size();
    const std::size_t lb = inner.values.size();
    const std::size_t L = fft::next_pow2(2 * std::max(la, lb));
    auto A = fft::forward(outer.values, L);
    const auto B = fft::forward(inner.values, L);
    for (std::size_t j = 0; j < A.size(); ++j)
        A[j] *= std::conj(B[j]);
    const auto r = fft::inverse(A, L);
    const std::int64_t shift = inner.lo - outer.lo;
    for (std::int64_t h = -hmax; h <= hmax; ++h) {
        const std::int64_t k = h + shift;
        if (k <= -static_cast<std::int64_t>(lb) || k >= static_cast<std::int64_t>(la))
            continue; // no overlapping terms
        const std::size_t idx = k >= 0 ? static_cast<std::size_t>(k) : static_cast<std::size_t>(static_cast<std::int64_t>(L) + k);
        t.values[static_cast<std::size_t>(h + hmax)] = r[idx];
    }
    return t;
}

// C_f(h) with n ~ N and n - h anywhere in the sequence's window.
inline CorrelationTable correlation(const BalancedSequence& f, std::int64_t hmax, CorrelationMethod method)
{
    return cross_correlation({f.core(), f.N + 1}, {f.values, f.lo}, hmax, method);
}

// Correlation of a sequence supported on its own range (both n and n - h in range).
inline CorrelationTable full_correlation(std::span<const double> f, std::int64_t hmax, CorrelationMethod method)
{
    return cross_correlation({f, 0}, {f, 0}, hmax, method);
}

// C_u(h) for u = 1_[1,H].
inline double box_correlation(std::int64_t H, std::int64_t h) noexcept
{
#ifdef SELBERG_LAB_MUTATE_BOX_CORRELATION
    return static_cast<double>(std::max<std::int64_t>(H + 1 - std::abs(h), 0));
#else
    return static_cast<double>(std::max<std::int64_t>(H - std::abs(h), 0));
#endif
}

// Correlation of w(a) = max(1 - |a|/H, 0); support |h| <= 2H - 2.
inline CorrelationTable triangle_autocorrelation(std::int64_t H)
{
    if (H < 1)
        throw std::invalid_argument("triangle_autocorrelation: H >= 1 required");
    std::vector<double> w(static_cast<std::size_t>(2 * H - 1));
    for (std::int64_t a = -(H - 1); a <= H - 1; ++a)
        w[static_cast<std::size_t>(a + H - 1)] = 1.0 - static_cast<double>(std::abs(a)) / static_cast<double>(H);
    auto t = full_correlation(w, 2 * H - 2, CorrelationMethod::direct);
    t.base_lo = -(H - 1);
    t.base_hi = H - 1;
    return t;
}

enum class EnergyWeight { box2, fejer2 };

inline std::string_view to_string(EnergyWeight w) noexcept { return w == EnergyWeight::box2 ? "box2" : "fejer2"; }

// int_{-1/2}^{1/2} |f^|^2 W(a) da for W = |u^|^2 or |u^|^4/H^2, via correlations.
// `f` is the sequence on ]N, 2N]; nothing outside it contributes.
inline double f_hat_energy_weighted(std::span<const double> f, EnergyWeight weight, std::int64_t H,
                                    CorrelationMethod method = CorrelationMethod::direct)
{
    if (H < 1)
        throw std::invalid_argument("f_hat_energy_weighted: H >= 1 required");
    const std::int64_t reach = weight == EnergyWeight::box2 ? H - 1 : 2 * H - 2;
    const std::int64_t hmax = std::min<std::int64_t>(reach, static_cast<std::int64_t>(f.size()) - 1);
    const auto cf = full_correlation(f, hmax, method);
    CompensatedSum<> acc;
    if (weight == EnergyWeight::box2) {
        for (std::int64_t h = -hmax; h <= hmax; ++h)
            acc += box_correlation(H, h) * cf.at(h);
    } else {
        const auto tri = triangle_autocorrelation(H);
        for (std::int64_t h = -hmax; h <= hmax; ++h)
            acc += tri.at(h) * cf.at(h);
    }
    return acc.value();
}

// ---------------------------------------------------------------------------
// Correlation decompositions: J_f vs sum_h C_u(h) C_f(h), and the Cesaro analogue.

struct Lemma1Result {
    std::int64_t N = 0;
    std::int64_t H = 0;
    double J_direct = 0.0;
    double J_corr = 0.0;
    double Jt_direct = 0.0;
    double Jt_corr = 0.0;
    double diff = 0.0;              // |J_direct - J_corr|
    double diff_normalized = 0.0;   // diff / H^3
    double diff_tilde = 0.0;
    double diff_tilde_normalized = 0.0;
};

inline void require_spectral_regime(const BalancedSequence& f, std::int64_t N, std::int64_t H, const char* who)
{
    if (N != f.N)
        throw std::invalid_argument(std::string(who) + ": N must match the sequence's window");
    if (H < 1 || H > f.H)
        throw std::invalid_argument(std::string(who) + ": H must lie in [1, window H]");
    if (static_cast<double>(H) > std::pow(static_cast<double>(N), 0.49))
        throw std::invalid_argument(std::string(who) + ": need H <= N^0.49");
}

inline Lemma1Result lemma1_check(const BalancedSequence& f, std::int64_t N, std::int64_t H, unsigned threads = 1)
{
    require_spectral_regime(f, N, H, "lemma1_check");
    Lemma1Result r;
    r.N = N;
    r.H = H;
    r.J_direct = balanced_selberg_integral(f, N, H, Method::sliding, threads);
    r.Jt_direct = balanced_modified_selberg_integral(f, N, H, Method::sliding, threads);

    const auto cf = correlation(f, 2 * H - 2, CorrelationMethod::direct);
    const auto tri = triangle_autocorrelation(H);
    CompensatedSum<> j, jt;
    for (std::int64_t h = -(2 * H - 2); h <= 2 * H - 2; ++h) {
        j += box_correlation(H, h) * cf.at(h);
        jt += tri.at(h) * cf.at(h);
    }
    r.J_corr = j.value();
    r.Jt_corr = jt.value();
    const double h3 = std::pow(static_cast<double>(H), 3);
    r.diff = std::abs(r.J_direct - r.J_corr);
    r.diff_normalized = r.diff / h3;
    r.diff_tilde = std::abs(r.Jt_direct - r.Jt_corr);
    r.diff_tilde_normalized = r.diff_tilde / h3;
    return r;
}

// ---------------------------------------------------------------------------
// The Dirichlet kernel and inequality (*):
//   |u^(a)| > [eps H]  implies  |a| < 1/(2 [eps H])

inline double u_hat_abs(double alpha, std::int64_t H) noexcept
{
    const double s = std::sin(std::numbers::pi * alpha);
    if (s == 0.0)
        return static_cast<double>(H);
    return std::abs(std::sin(std::numbers::pi * static_cast<double>(H) * alpha) / s);
}

inline double grid_point(std::int64_t i, std::int64_t M) noexcept
{
    return -0.5 + static_cast<double>(i) / static_cast<double>(M - 1);
}

struct KernelProfile {
    std::int64_t H = 0;
    std::int64_t M = 0; // grid points on [-1/2, 1/2], endpoints included
    std::vector<double> values;
};

inline KernelProfile kernel_profile(std::int64_t H, std::int64_t M)
{
    if (H < 1 || M < 2)
        throw std::invalid_argument("kernel_profile: need H >= 1 and M >= 2");
    KernelProfile k{H, M, std::vector<double>(static_cast<std::size_t>(M))};
    for (std::int64_t i = 0; i < M; ++i)
        k.values[static_cast<std::size_t>(i)] = u_hat_abs(grid_point(i, M), H);
    return k;
}

struct StarCheckResult {
    std::int64_t H = 0;
    double eps = 0.0;
    std::int64_t level = 0;        // [eps H]
    std::int64_t above = 0;        // grid points with |u^| > [eps H]
    std::int64_t violations = 0;   // ... and |a| >= 1/(2 [eps H])
};

inline StarCheckResult star_check(std::int64_t H, double eps, std::int64_t gridM)
{
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("star_check: need 0 < eps < 1");
    if (gridM < 2)
        throw std::invalid_argument("star_check: need at least two grid points");
    const auto level = static_cast<std::int64_t>(std::floor(eps * static_cast<double>(H)));
    if (level < 1)
        throw std::invalid_argument("star_check: [eps H] = 0");
    StarCheckResult r{H, eps, level, 0, 0};
    const double bound = 1.0 / (2.0 * static_cast<double>(level));
    for (std::int64_t i = 0; i < gridM; ++i) {
        const double a = grid_point(i, gridM);
        if (u_hat_abs(a, H) > static_cast<double>(level)) {
            ++r.above;
            if (std::abs(a) >= bound)
                ++r.violations;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// |f^(a_j)|^2 on the periodic grid a_j = -1/2 + j/M, j < M. The phase
// e(n a) only depends on n up to a unimodular factor, so f is indexed from 0,
// and the (-1)^i twist moves the DFT origin to a = -1/2.
inline std::vector<double> f_hat_power_grid(std::span<const double> f, std::size_t M)
{
    if (M < f.size())
        throw std::invalid_argument("f_hat_power_grid: grid shorter than the sequence");
    std::vector<double> twisted(f.begin(), f.end());
    for (std::size_t i = 1; i < twisted.size(); i += 2)
        twisted[i] = -twisted[i];
    const auto X = fft::forward(twisted, M);
    std::vector<double> power(M);
    for (std::size_t j = 0; j < M; ++j) {
        // X[j] = sum_i x_i e(-ij/M); |f^(a_j)| = |X[M - j]| = |X[j]| for real input.
        power[j] = std::norm(X[j <= M / 2 ? j : M - j]);
    }
    return power;
}

// Riemann-sum route to the weighted energies: M-point uniform quadrature of
// |f^|^2 W over one period. Exact up to rounding once M exceeds the degree.
inline double grid_weighted_energy(std::span<const double> f, EnergyWeight weight, std::int64_t H, std::size_t M)
{
    const auto power = f_hat_power_grid(f, M);
    const double h2 = static_cast<double>(H) * static_cast<double>(H);
    CompensatedSum<> acc;
    for (std::size_t j = 0; j < M; ++j) {
        const double U = u_hat_abs(-0.5 + static_cast<double>(j) / static_cast<double>(M), H);
        const double U2 = U * U;
        acc += power[j] * (weight == EnergyWeight::box2 ? U2 : U2 * U2 / h2);
    }
    return acc.value() / static_cast<double>(M);
}

// ---------------------------------------------------------------------------

namespace detail {

// sin(2 pi x) with the integer part of x removed first.
inline double sin_2pi(double x) noexcept
{
    const double r = x - std::nearbyint(x);
    return std::sin(2.0 * std::numbers::pi * r);
}

} // namespace detail

// int_{-c}^{c} |f^(a)|^2 da = sum_d C(d) K(d), K(0) = 2c, K(d) = sin(2 pi c d)/(pi d).
inline double band_energy(std::span<const double> f, double c)
{
    if (!(c >= 0.0 && c <= 0.5))
        throw std::invalid_argument("band_energy: need 0 <= c <= 1/2");
    if (f.empty() || c == 0.0)
        return 0.0;
    const auto n = static_cast<std::int64_t>(f.size());
    const auto C = full_correlation(f, n - 1, CorrelationMethod::fft);
    CompensatedSum<> acc;
    acc += 2.0 * c * C.at(0);
    for (std::int64_t d = 1; d < n; ++d) {
        const double k = detail::sin_2pi(c * static_cast<double>(d)) / (std::numbers::pi * static_cast<double>(d));
        acc += k * (C.at(d) + C.at(-d));
    }
    return acc.value();
}

// ---------------------------------------------------------------------------
// Modified Gallagher inequality: h^2 int_{|a|<=1/(2h)} |f^|^2  vs  Jt_f(N,h) + h^3.

struct GallagherResult {
    std::int64_t N = 0;
    std::int64_t h = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

inline GallagherResult gallagher_check(const BalancedSequence& f, std::int64_t N, std::int64_t h, unsigned threads = 1)
{
    require_spectral_regime(f, N, h, "gallagher_check");
    if (h < 10)
        throw std::invalid_argument("gallagher_check: need h >= 10");
    GallagherResult r{N, h};
    const double hd = static_cast<double>(h);
    r.lhs = hd * hd * band_energy(f.core(), 1.0 / (2.0 * hd));
    r.rhs = balanced_modified_selberg_integral(f, N, h, Method::sliding, threads) + hd * hd * hd;
    r.ratio = r.lhs / r.rhs;
    return r;
}

// sum over every integer x of ( sum_{x<n<=x+H} f(n) )^2 for f supported on
// the given block; exactly int |f^|^2 |u^|^2.
inline double truncated_box_energy(std::span<const double> f, std::int64_t H)
{
    if (H < 1)
        throw std::invalid_argument("truncated_box_energy: H >= 1 required");
    const auto n = static_cast<std::int64_t>(f.size());
    auto at = [&](std::int64_t i) { return (i >= 0 && i < n) ? f[static_cast<std::size_t>(i)] : 0.0; };
    // x indexes the window (x, x+H] relative to the first element at 0.
    CompensatedSum<> s, acc;
    for (std::int64_t x = -H; x < n; ++x) {
        s += at(x + H);
        s += -at(x);
        const double v = s.value();
        acc += v * v;
    }
    return acc.value();
}

// ---------------------------------------------------------------------------
// Three-range splitting of int |f^|^2 |u^|^2 by the level sets
//   |u^| <= [eps H],   [eps H] < |u^| <= E H,   |u^| > E H
// with majorants eps^2 H^2, E^2 H^2 and |u^|^4 / (E^2 H^2) respectively.

struct ThreeRangeResult {
    std::int64_t N = 0;
    std::int64_t H = 0;
    double eps = 0.0;
    double E = 0.0;
    std::int64_t grid = 0;
    double T1 = 0.0;
    double T2 = 0.0;
    double T3 = 0.0;
    double total = 0.0;          // T1 + T2 + T3 + H^3
    double energy_quadrature = 0.0; // grid value of int |f^|^2 |u^|^2
    double J_direct = 0.0;       // sum over all x of the box sums of f 1_]N,2N]
    double J_window = 0.0;       // J_f over N < x <= 2N on the full window
    double slack = 0.0;          // total / J_direct
    std::int64_t majorization_violations = 0;
};

inline ThreeRangeResult three_range_split(const BalancedSequence& f, std::int64_t N, std::int64_t H, double eps, double E,
                                          std::int64_t gridM = 0, unsigned threads = 1)
{
    if (N != f.N)
        throw std::invalid_argument("three_range_split: N must match the sequence's window");
    if (H < 1 || H > f.H || 4 * H > N)
        throw std::invalid_argument("three_range_split: H out of range");
    if (!(0.0 < eps && eps < E && E <= 1.0))
        throw std::invalid_argument("three_range_split: need 0 < eps < E <= 1");
    if (gridM == 0)
        gridM = static_cast<std::int64_t>(fft::next_pow2(static_cast<std::size_t>(64 * N)));
    if (gridM < 64 * N)
        throw std::invalid_argument("three_range_split: grid too coarse (need at least 64 N points)");

    ThreeRangeResult r;
    r.N = N;
    r.H = H;
    r.eps = eps;
    r.E = E;
    r.grid = gridM;

    const auto core = f.core();
    const auto M = static_cast<std::size_t>(gridM);
    const auto power = f_hat_power_grid(core, M);

    const double hd = static_cast<double>(H);
    const double level = std::floor(eps * hd);
    const double upper = E * hd;
    const double w1 = eps * eps * hd * hd;
    const double w2 = E * E * hd * hd;
    const double w3 = 1.0 / (E * E * hd * hd);
    CompensatedSum<> t1, t2, t3, exact;
    for (std::size_t j = 0; j < M; ++j) {
        const double F = power[j] / static_cast<double>(M);
        const double a = -0.5 + static_cast<double>(j) / static_cast<double>(M);
        const double U = u_hat_abs(a, H);
        const double U2 = U * U;
        exact += F * U2;
        if (U <= level) {
            t1 += F * w1;
            if (!(U2 <= w1))
                ++r.majorization_violations;
        } else if (U <= upper) {
            t2 += F * w2;
            if (!(U2 <= w2))
                ++r.majorization_violations;
        } else {
            t3 += F * U2 * U2 * w3;
            if (!(U2 <= U2 * U2 * w3))
                ++r.majorization_violations;
        }
    }
    r.T1 = t1.value();
    r.T2 = t2.value();
    r.T3 = t3.value();
    r.total = r.T1 + r.T2 + r.T3 + hd * hd * hd;
    r.energy_quadrature = exact.value();
    r.J_direct = truncated_box_energy(core, H);
    r.J_window = balanced_selberg_integral(f, N, H, Method::sliding, threads);
    r.slack = r.total / r.J_direct;
    return r;
}

} // namespace selberg_lab
