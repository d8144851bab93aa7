#pragma once

// Short-interval sums and their mean squares over N < x <= 2N:
//
//   J(N,H)  = sum_x ( sum_{x<n<=x+H} f(n)                 - M(x,H) )^2
//   Jt(N,H) = sum_x ( sum_{|n-x|<=H} (1-|n-x|/H) f(n)     - M(x,H) )^2
//
// The sliding method keeps a running box sum; the triangular window is the
// box convolved with itself and divided by H, so it is a running sum of
// running sums. Both are reseeded directly at the start of every block of
// x values, which fixes the arithmetic independently of the thread count.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "arith_core.hpp"
#include "asymptotics.hpp"
#include "numeric.hpp"

namespace selberg_lab {

enum class Method { sliding, brute };
enum class MeanMode { residue, window_poly };

inline std::string_view to_string(Method m) noexcept { return m == Method::sliding ? "sliding" : "brute"; }
inline std::string_view to_string(MeanMode m) noexcept { return m == MeanMode::residue ? "residue" : "window-poly"; }

inline std::optional<Method> parse_method(std::string_view s)
{
    if (s == "sliding")
        return Method::sliding;
    if (s == "brute")
        return Method::brute;
    return std::nullopt;
}

inline std::optional<MeanMode> parse_mean_mode(std::string_view s)
{
    if (s == "residue")
        return MeanMode::residue;
    if (s == "window-poly")
        return MeanMode::window_poly;
    return std::nullopt;
}

inline double short_sum(const BalancedSequence& f, std::int64_t x, std::int64_t H)
{
    if (H < 1)
        throw std::invalid_argument("short_sum: H >= 1 required");
    if (!f.covers(x + 1, x + H))
        throw std::out_of_range("short_sum: ]x, x+H] outside the window");
    CompensatedSum<> acc;
    for (std::int64_t n = x + 1; n <= x + H; ++n)
        acc += f.values[static_cast<std::size_t>(n - f.lo)];
    return acc.value();
}

inline double cesaro_sum(const BalancedSequence& f, std::int64_t x, std::int64_t H)
{
    if (H < 1)
        throw std::invalid_argument("cesaro_sum: H >= 1 required");
    if (!f.covers(x - H, x + H))
        throw std::out_of_range("cesaro_sum: [x-H, x+H] outside the window");
    const double h = static_cast<double>(H);
    CompensatedSum<> acc;
    for (std::int64_t n = x - H; n <= x + H; ++n) {
        const double w = 1.0 - static_cast<double>(std::abs(n - x)) / h;
        acc += w * f.values[static_cast<std::size_t>(n - f.lo)];
    }
    return acc.value();
}

inline double mean_value(std::int64_t x, std::int64_t H, const LogPolynomial& poly)
{
    if (x < 1 || H < 1)
        throw std::domain_error("mean_value: x, H >= 1 required");
    return static_cast<double>(H) * poly(std::log(static_cast<double>(x)));
}

struct IntegralReport {
    std::int64_t N = 0;
    std::int64_t H = 0;
    double J = 0.0;
    double J_tilde = 0.0;
    double ratio_J = 0.0;
    double ratio_J_tilde = 0.0;
    double lower_ratio = 0.0;
    Method method = Method::sliding;
    MeanMode mean_mode = MeanMode::residue;
};

struct IntegralOptions {
    Method method = Method::sliding;
    MeanMode mean_mode = MeanMode::residue;
    unsigned threads = 1;
};

namespace detail {

inline constexpr std::int64_t kBlockX = 4096;

enum class Window { box, triangle };

// g(n) for n in [from, to]: the sequence actually summed. Under residue mode
// that is f plus whatever polynomial f had subtracted (so d_k is recovered);
// under window-poly mode the mean polynomial is removed pointwise instead.
inline std::vector<double> summand(const BalancedSequence& f, const LogPolynomial& poly, MeanMode mode, std::int64_t from, std::int64_t to)
{
    std::vector<double> g(static_cast<std::size_t>(to - from + 1));
    const bool cancels = mode == MeanMode::window_poly && poly == f.subtracted;
    for (std::int64_t n = from; n <= to; ++n) {
        double v = f.values[static_cast<std::size_t>(n - f.lo)];
        if (!cancels) {
            const double L = std::log(static_cast<double>(n));
            if (!f.subtracted.is_zero())
                v += f.subtracted(L);
            if (mode == MeanMode::window_poly && !poly.is_zero())
                v -= poly(L);
        }
        g[static_cast<std::size_t>(n - from)] = v;
    }
    return g;
}

inline void check_regime(const BalancedSequence& f, std::int64_t N, std::int64_t H)
{
    if (N < 1 || H < 1)
        throw std::invalid_argument("selberg: need N >= 1, H >= 1");
    if (4 * H > N)
        throw std::invalid_argument("selberg: H too large relative to N (need H <= N/4)");
    if (!f.covers(N + 1 - H, 2 * N + H))
        throw std::out_of_range("selberg: sequence window does not cover the evaluation range");
}

inline double mean_square(const BalancedSequence& f, std::int64_t N, std::int64_t H, const LogPolynomial& poly,
                          const IntegralOptions& opt, Window window)
{
    check_regime(f, N, H);
    const std::int64_t from = N + 1 - H;
    const std::int64_t to = 2 * N + H;
    const auto g = summand(f, poly, opt.mean_mode, from, to);
    auto G = [&](std::int64_t n) { return g[static_cast<std::size_t>(n - from)]; };
    const bool residue_mean = opt.mean_mode == MeanMode::residue && !poly.is_zero();
    const double h = static_cast<double>(H);
    auto M = [&](std::int64_t x) { return residue_mean ? h * poly(std::log(static_cast<double>(x))) : 0.0; };

    const std::size_t nblocks = static_cast<std::size_t>((N + kBlockX - 1) / kBlockX);
    std::vector<double> partial(nblocks, 0.0);

    for_each_block(nblocks, opt.threads, [&](std::size_t b) {
        const std::int64_t x0 = N + 1 + static_cast<std::int64_t>(b) * kBlockX;
        const std::int64_t x1 = std::min<std::int64_t>(2 * N, x0 + kBlockX - 1);
        CompensatedSum<> acc;

        if (opt.method == Method::brute) {
            for (std::int64_t x = x0; x <= x1; ++x) {
                CompensatedSum<> s;
                if (window == Window::box) {
                    for (std::int64_t n = x + 1; n <= x + H; ++n)
                        s += G(n);
                } else {
                    for (std::int64_t n = x - H; n <= x + H; ++n)
                        s += (1.0 - static_cast<double>(std::abs(n - x)) / h) * G(n);
                }
                const double dev = s.value() - M(x);
                acc += dev * dev;
            }
        } else if (window == Window::box) {
            CompensatedSum<> s;
            for (std::int64_t n = x0 + 1; n <= x0 + H; ++n)
                s += G(n);
            for (std::int64_t x = x0;; ++x) {
                const double dev = s.value() - M(x);
                acc += dev * dev;
                if (x == x1)
                    break;
                s += G(x + H + 1);
                s += -G(x + 1);
            }
        } else {
            // su[y - (x0 - H)] = sum_{a=1..H} g(y + a) for y in [x0-H, x1-1]
            std::vector<double> su(static_cast<std::size_t>(x1 - x0 + H));
            CompensatedSum<> s;
            for (std::int64_t n = x0 - H + 1; n <= x0; ++n)
                s += G(n);
            for (std::size_t i = 0;; ++i) {
                su[i] = s.value();
                if (i + 1 == su.size())
                    break;
                const std::int64_t y = x0 - H + static_cast<std::int64_t>(i);
                s += G(y + H + 1);
                s += -G(y + 1);
            }
            CompensatedSum<> w;
            for (std::int64_t i = 0; i < H; ++i)
                w += su[static_cast<std::size_t>(i)];
            for (std::int64_t x = x0;; ++x) {
                const double dev = w.value() / h - M(x);
                acc += dev * dev;
                if (x == x1)
                    break;
                const std::int64_t i = x - (x0 - H);
                w += su[static_cast<std::size_t>(i)];
                w += -su[static_cast<std::size_t>(i - H)];
            }
        }
        partial[b] = acc.value();
    });
    return reduce_in_order(partial);
}

} // namespace detail

inline double selberg_integral(const BalancedSequence& f, std::int64_t N, std::int64_t H, const LogPolynomial& poly,
                               const IntegralOptions& opt = {})
{
    return detail::mean_square(f, N, H, poly, opt, detail::Window::box);
}

inline double modified_selberg_integral(const BalancedSequence& f, std::int64_t N, std::int64_t H, const LogPolynomial& poly,
                                        const IntegralOptions& opt = {})
{
    return detail::mean_square(f, N, H, poly, opt, detail::Window::triangle);
}

// J_f, Jt_f of the balanced sequence itself (M_f = 0): selecting window-poly
// with f's own subtracted polynomial cancels it exactly.
inline double balanced_selberg_integral(const BalancedSequence& f, std::int64_t N, std::int64_t H,
                                        Method method = Method::sliding, unsigned threads = 1)
{
    return selberg_integral(f, N, H, f.subtracted, {method, MeanMode::window_poly, threads});
}

inline double balanced_modified_selberg_integral(const BalancedSequence& f, std::int64_t N, std::int64_t H,
                                                 Method method = Method::sliding, unsigned threads = 1)
{
    return modified_selberg_integral(f, N, H, f.subtracted, {method, MeanMode::window_poly, threads});
}

inline IntegralReport integral_report(const BalancedSequence& f, std::int64_t N, std::int64_t H, const LogPolynomial& poly,
                                      const IntegralOptions& opt = {})
{
    IntegralReport r;
    r.N = N;
    r.H = H;
    r.method = opt.method;
    r.mean_mode = opt.mean_mode;
    r.J = selberg_integral(f, N, H, poly, opt);
    r.J_tilde = modified_selberg_integral(f, N, H, poly, opt);
    r.ratio_J = conjecture_ratio(N, H, r.J);
    r.ratio_J_tilde = conjecture_ratio(N, H, r.J_tilde);
    r.lower_ratio = N >= 3 ? lower_bound_ratio(N, H, r.J) : std::nan("");
    return r;
}

// ---------------------------------------------------------------------------
// CSV: N,H,J,J_tilde,ratio_J,ratio_J_tilde,lower_ratio,method,mean_mode

inline constexpr std::string_view kCsvHeader = "N,H,J,J_tilde,ratio_J,ratio_J_tilde,lower_ratio,method,mean_mode";

inline std::string format_g17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string to_csv_row(const IntegralReport& r)
{
    std::string row = std::to_string(r.N) + ',' + std::to_string(r.H);
    for (double v : {r.J, r.J_tilde, r.ratio_J, r.ratio_J_tilde, r.lower_ratio})
        row += ',' + format_g17(v);
    row += ',';
    row += to_string(r.method);
    row += ',';
    row += to_string(r.mean_mode);
    return row;
}

} // namespace selberg_lab
