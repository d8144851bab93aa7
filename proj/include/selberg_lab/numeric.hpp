#pragma once

// Shared numeric plumbing: compensated accumulation and a block-parallel
// driver whose reduction order does not depend on the thread count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

namespace selberg_lab {

// Neumaier's variant of Kahan summation.
template <typename T = double>
class CompensatedSum {
public:
    constexpr void add(T v) noexcept
    {
        const T t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    constexpr CompensatedSum& operator+=(T v) noexcept
    {
        add(v);
        return *this;
    }
    constexpr T value() const noexcept { return sum_ + comp_; }

private:
    T sum_{};
    T comp_{};
};

template <typename Range>
double compensated_total(const Range& values)
{
    CompensatedSum<double> acc;
    for (double v : values)
        acc.add(v);
    return acc.value();
}

inline unsigned resolve_threads(unsigned requested) noexcept
{
    if (requested != 0)
        return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

// Runs fn(block) for block in [0, nblocks) on up to `threads` workers.
// Blocks are claimed in a static interleaved order; any result stored per
// block is therefore independent of the thread count.
template <typename Fn>
void for_each_block(std::size_t nblocks, unsigned threads, Fn&& fn)
{
    threads = static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(nblocks, 1)));
    if (threads <= 1) {
        for (std::size_t b = 0; b < nblocks; ++b)
            fn(b);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t b = t; b < nblocks; b += threads)
                    fn(b);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool)
        th.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

// Fixed-order reduction of per-block partials.
inline double reduce_in_order(std::span<const double> partials)
{
    return compensated_total(partials);
}

inline double relative_difference(double a, double b) noexcept
{
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

} // namespace selberg_lab
