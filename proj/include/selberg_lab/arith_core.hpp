#pragma once

// Divisor functions on integer windows, the Laurent data of zeta at s = 1,
// and the logarithmic polynomial obtained from Res_{s=1} zeta(s)^k x^{s-1}.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "numeric.hpp"

namespace selberg_lab {

class overflow_signal : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

// d_k(n) for n in [lo, lo + values.size()).
struct DivisorTable {
    std::uint64_t lo = 1;
    int k = 3;
    std::vector<std::uint64_t> values;

    std::uint64_t hi() const noexcept { return lo + values.size() - 1; }
    bool covers(std::uint64_t a, std::uint64_t b) const noexcept
    {
        return !values.empty() && a >= lo && b <= hi() && a <= b;
    }
    std::uint64_t at(std::uint64_t n) const
    {
        if (n < lo || n > hi())
            throw std::out_of_range("DivisorTable: n=" + std::to_string(n) + " outside window");
        return values[n - lo];
    }
};

namespace detail {

inline std::uint64_t isqrt(std::uint64_t n) noexcept
{
    auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
    while (r > 0 && r * r > n)
        --r;
    while ((r + 1) * (r + 1) <= n)
        ++r;
    return r;
}

inline std::vector<std::uint32_t> primes_up_to(std::uint64_t limit)
{
    std::vector<std::uint32_t> primes;
    if (limit < 2)
        return primes;
    std::vector<char> composite(limit + 1, 0);
    for (std::uint64_t i = 2; i <= limit; ++i) {
        if (composite[i])
            continue;
        primes.push_back(static_cast<std::uint32_t>(i));
        for (std::uint64_t j = i * i; j <= limit; j += i)
            composite[j] = 1;
    }
    return primes;
}

// C(e + k - 1, k - 1) = d_k(p^e); zero marks a value that does not fit.
inline std::vector<std::uint64_t> prime_power_counts(int k, int max_exponent)
{
    std::vector<std::uint64_t> out(static_cast<std::size_t>(max_exponent) + 1, 0);
    for (int e = 0; e <= max_exponent; ++e) {
        // C(e + k - 1, e), built up one factor at a time; exact at every step.
        unsigned __int128 c = 1;
        bool ok = true;
        for (int i = 1; i <= e && ok; ++i) {
            c = c * static_cast<unsigned __int128>(k - 1 + i) / static_cast<unsigned __int128>(i);
            ok = c <= UINT64_MAX;
        }
        out[static_cast<std::size_t>(e)] = ok ? static_cast<std::uint64_t>(c) : 0;
    }
    return out;
}

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b)
{
    std::uint64_t r = 0;
    if (b == 0 || __builtin_mul_overflow(a, b, &r))
        throw overflow_signal("d_k value exceeds 64-bit range");
    return r;
}

} // namespace detail

// Segmented smallest-prime-factor sieve over [lo, hi]: every n in the window
// is stripped of its prime factors p <= sqrt(hi), and d_k is assembled from
// d_k(p^e) = C(e+k-1, k-1). Whatever survives the stripping is a prime.
inline DivisorTable sieve_dk(std::uint64_t lo, std::uint64_t hi, int k, unsigned threads = 1)
{
    if (lo < 1 || lo > hi)
        throw std::invalid_argument("sieve_dk: need 1 <= lo <= hi");
    if (k < 2)
        throw std::invalid_argument("sieve_dk: need k >= 2");
    if (hi > (std::uint64_t{1} << 62))
        throw std::invalid_argument("sieve_dk: hi too large for the window sieve");

    const auto primes = detail::primes_up_to(detail::isqrt(hi));
    const auto pp = detail::prime_power_counts(k, 64);
    const std::uint64_t kval = pp[1];

    DivisorTable table{lo, k, std::vector<std::uint64_t>(hi - lo + 1, 1)};
    const std::uint64_t length = table.values.size();
    constexpr std::uint64_t segment = std::uint64_t{1} << 16;
    const std::size_t nseg = static_cast<std::size_t>((length + segment - 1) / segment);

    for_each_block(nseg, threads, [&](std::size_t s) {
        const std::uint64_t begin = s * segment;
        const std::uint64_t end = std::min(length, begin + segment);
        std::vector<std::uint64_t> rest(end - begin);
        for (std::uint64_t i = begin; i < end; ++i)
            rest[i - begin] = lo + i;
        auto* out = table.values.data();
        const std::uint64_t seg_lo = lo + begin;
        const std::uint64_t seg_hi = lo + end - 1;
        for (std::uint32_t p : primes) {
            std::uint64_t m = (seg_lo + p - 1) / p * p;
            for (; m <= seg_hi; m += p) {
                auto& r = rest[m - seg_lo];
                int e = 0;
                do {
                    r /= p;
                    ++e;
                } while (r % p == 0);
                out[m - lo] = detail::checked_mul(out[m - lo], pp[static_cast<std::size_t>(e)]);
            }
        }
        for (std::uint64_t i = begin; i < end; ++i)
            if (rest[i - begin] > 1)
                out[i] = detail::checked_mul(out[i], kval);
    });
    return table;
}

// ---------------------------------------------------------------------------
// Laurent data of zeta at s = 1:
//   zeta(s) = 1/(s-1) + sum_j (-1)^j gamma_j (s-1)^j / j!
// Values to 45 digits, taken from the standard tables (mpmath.stieltjes);
// tests recompute them independently by Euler-Maclaurin summation.

struct StieltjesConstants {
    static constexpr std::array<std::string_view, 3> decimal = {
        "0.577215664901532860606512090082402431042159336",
        "-0.0728158454836767248605863758749013191377363383",
        "-0.0096903631928723184845303860352125293590658061",
    };
    std::vector<long double> gamma;

    static StieltjesConstants standard()
    {
        StieltjesConstants c;
        for (auto text : decimal)
            c.gamma.push_back(std::stold(std::string(text)));
        return c;
    }
};

inline long double stieltjes_constant(int j)
{
    if (j < 0 || j >= static_cast<int>(StieltjesConstants::decimal.size()))
        throw std::out_of_range("stieltjes_constant: only gamma_0..gamma_2 are tabulated");
    return StieltjesConstants::standard().gamma[static_cast<std::size_t>(j)];
}

// Real polynomial in L = log x; coeffs[j] multiplies L^j.
struct LogPolynomial {
    std::vector<double> coeffs;

    static LogPolynomial zero() { return {}; }

    int degree() const noexcept { return static_cast<int>(coeffs.size()) - 1; }
    bool is_zero() const noexcept
    {
        for (double c : coeffs)
            if (c != 0.0)
                return false;
        return true;
    }
    double operator()(double L) const noexcept
    {
        double acc = 0.0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
            acc = acc * L + *it;
        return acc;
    }
    double at_log_of(double x) const noexcept { return (*this)(std::log(x)); }

    friend bool operator==(const LogPolynomial&, const LogPolynomial&) = default;
};

// Res_{s=1} zeta(s)^k x^{s-1} as a polynomial in L = log x. With
// w = s - 1, this is the w^{k-1} coefficient of (w zeta(1+w))^k e^{Lw}.
// `order` is the number of series terms kept (at least k); terms past the
// tabulated constants are only admissible where they cannot reach w^{k-1}.
inline LogPolynomial residue_polynomial(int k, const StieltjesConstants& constants, int order = 0)
{
    if (k < 1)
        throw std::invalid_argument("residue_polynomial: k >= 1 required");
    if (order == 0)
        order = k;
    if (order < k)
        throw std::invalid_argument("residue_polynomial: truncation order below k");
    // w zeta(1+w) = 1 + sum_{j>=0} (-1)^j gamma_j w^{j+1} / j!; the w^i term needs gamma_{i-1}.
    if (k >= 2 && static_cast<int>(constants.gamma.size()) < k - 1)
        throw std::invalid_argument("residue_polynomial: insufficient Stieltjes constants for k=" + std::to_string(k));

    std::vector<long double> base(static_cast<std::size_t>(order), 0.0L);
    base[0] = 1.0L;
    long double fact = 1.0L;
    for (int i = 1; i < order; ++i) {
        const int j = i - 1;
        if (j > 0)
            fact *= static_cast<long double>(j);
        if (j < static_cast<int>(constants.gamma.size()))
            base[static_cast<std::size_t>(i)] = ((j % 2 == 0) ? 1.0L : -1.0L) * constants.gamma[static_cast<std::size_t>(j)] / fact;
    }

    std::vector<long double> power(static_cast<std::size_t>(order), 0.0L);
    power[0] = 1.0L;
    for (int r = 0; r < k; ++r) {
        std::vector<long double> next(static_cast<std::size_t>(order), 0.0L);
        for (int a = 0; a < order; ++a)
            for (int b = 0; a + b < order; ++b)
                next[static_cast<std::size_t>(a + b)] += power[static_cast<std::size_t>(a)] * base[static_cast<std::size_t>(b)];
        power = std::move(next);
    }

    LogPolynomial poly;
    poly.coeffs.resize(static_cast<std::size_t>(k));
    long double jfact = 1.0L;
    for (int j = 0; j < k; ++j) {
        if (j > 0)
            jfact *= static_cast<long double>(j);
        poly.coeffs[static_cast<std::size_t>(j)] = static_cast<double>(power[static_cast<std::size_t>(k - 1 - j)] / jfact);
    }
    return poly;
}

// ---------------------------------------------------------------------------

// f(n) = d_k(n) - p(log n) on ]N-H, 2N+H].
struct BalancedSequence {
    std::int64_t lo = 1;
    std::int64_t N = 0;
    std::int64_t H = 0;
    std::vector<double> values;
    LogPolynomial subtracted;

    static std::int64_t window_lo(std::int64_t N, std::int64_t H) noexcept { return N - H + 1; }
    static std::int64_t window_length(std::int64_t N, std::int64_t H) noexcept { return N + 2 * H; }

    // A plain sequence on the standard window, nothing subtracted.
    static BalancedSequence from_values(std::int64_t N, std::int64_t H, std::vector<double> v)
    {
        if (N < 1 || H < 1)
            throw std::invalid_argument("BalancedSequence: need N >= 1, H >= 1");
        if (static_cast<std::int64_t>(v.size()) != window_length(N, H))
            throw std::invalid_argument("BalancedSequence: values must cover ]N-H, 2N+H]");
        return BalancedSequence{window_lo(N, H), N, H, std::move(v), LogPolynomial::zero()};
    }

    std::int64_t hi() const noexcept { return lo + static_cast<std::int64_t>(values.size()) - 1; }
    bool covers(std::int64_t a, std::int64_t b) const noexcept { return a >= lo && b <= hi() && a <= b; }
    double at(std::int64_t n) const
    {
        if (n < lo || n > hi())
            throw std::out_of_range("BalancedSequence: n=" + std::to_string(n) + " outside window");
        return values[static_cast<std::size_t>(n - lo)];
    }
    // f restricted to ]N, 2N].
    std::span<const double> core() const noexcept
    {
        return std::span<const double>(values).subspan(static_cast<std::size_t>(N + 1 - lo), static_cast<std::size_t>(N));
    }
};

inline BalancedSequence balanced_sequence(const DivisorTable& table, const LogPolynomial& poly, std::int64_t N, std::int64_t H)
{
    if (N < 1 || H < 1)
        throw std::invalid_argument("balanced_sequence: need N >= 1, H >= 1");
    const std::int64_t lo = BalancedSequence::window_lo(N, H);
    const std::int64_t hi = 2 * N + H;
    if (lo < 1)
        throw std::invalid_argument("balanced_sequence: window ]N-H, 2N+H] reaches below 1");
    if (!table.covers(static_cast<std::uint64_t>(lo), static_cast<std::uint64_t>(hi)))
        throw std::invalid_argument("balanced_sequence: table does not cover ]N-H, 2N+H]");

    BalancedSequence f{lo, N, H, std::vector<double>(static_cast<std::size_t>(hi - lo + 1)), poly};
    for (std::int64_t n = lo; n <= hi; ++n)
        f.values[static_cast<std::size_t>(n - lo)] =
            static_cast<double>(table.at(static_cast<std::uint64_t>(n))) - poly(std::log(static_cast<double>(n)));
    return f;
}

// ---------------------------------------------------------------------------
// Flat cache layout, little-endian:
//   u32 magic | u64 lo | u64 length | u32 k | length * u64 values

inline constexpr std::uint32_t kTableMagic = 0x42544B44u; // "DKTB"
inline constexpr std::size_t kTableHeaderBytes = 24;

namespace detail {

template <typename T>
void put_le(std::string& out, T v)
{
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFFu));
}

template <typename T>
T get_le(const unsigned char* p)
{
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return static_cast<T>(v);
}

} // namespace detail

inline std::string encode_table(const DivisorTable& t)
{
    std::string out;
    out.reserve(kTableHeaderBytes + 8 * t.values.size());
    detail::put_le<std::uint32_t>(out, kTableMagic);
    detail::put_le<std::uint64_t>(out, t.lo);
    detail::put_le<std::uint64_t>(out, t.values.size());
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.k));
    for (auto v : t.values)
        detail::put_le<std::uint64_t>(out, v);
    return out;
}

inline DivisorTable decode_table(std::string_view bytes)
{
    if (bytes.size() < kTableHeaderBytes)
        throw std::runtime_error("divisor table: truncated header");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (detail::get_le<std::uint32_t>(p) != kTableMagic)
        throw std::runtime_error("divisor table: bad magic");
    DivisorTable t;
    t.lo = detail::get_le<std::uint64_t>(p + 4);
    const auto length = detail::get_le<std::uint64_t>(p + 12);
    t.k = static_cast<int>(detail::get_le<std::uint32_t>(p + 20));
    if (bytes.size() != kTableHeaderBytes + 8 * length)
        throw std::runtime_error("divisor table: size does not match header");
    t.values.resize(length);
    for (std::uint64_t i = 0; i < length; ++i)
        t.values[i] = detail::get_le<std::uint64_t>(p + kTableHeaderBytes + 8 * i);
    return t;
}

inline void write_table(const std::filesystem::path& path, const DivisorTable& t)
{
    const auto bytes = encode_table(t);
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os)
            throw std::runtime_error("cannot open " + tmp + " for writing");
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os)
            throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

inline DivisorTable read_table(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return decode_table(bytes);
}

} // namespace selberg_lab
