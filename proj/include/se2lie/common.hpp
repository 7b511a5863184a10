#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace se2lie {

using real_t = double;
using complex_t = std::complex<real_t>;

inline constexpr real_t kPi = std::numbers::pi_v<real_t>;
inline constexpr real_t kTwoPi = 2.0 * std::numbers::pi_v<real_t>;

/// Wrap an angle to [0, 2pi).
inline real_t wrap_angle(real_t theta) noexcept {
    real_t t = std::fmod(theta, kTwoPi);
    return t < 0 ? t + kTwoPi : t;
}

/// Wrap an angle to (-pi, pi].
inline real_t wrap_angle_signed(real_t theta) noexcept {
    return std::remainder(theta, kTwoPi);
}

inline real_t deg2rad(real_t d) noexcept { return d * kPi / 180.0; }
inline real_t rad2deg(real_t r) noexcept { return r * 180.0 / kPi; }

inline real_t sqr(real_t x) noexcept { return x * x; }

/// (sin(base + h) - sin(base)) / h, stable as h -> 0.
inline real_t dsin_ratio(real_t h, real_t base) noexcept {
    if (std::abs(h) > 1e-6) return (std::sin(base + h) - std::sin(base)) / h;
    return std::cos(base) - 0.5 * h * std::sin(base) - h * h * std::cos(base) / 6.0;
}

/// (cos(base + h) - cos(base)) / h, stable as h -> 0.
inline real_t dcos_ratio(real_t h, real_t base) noexcept {
    if (std::abs(h) > 1e-6) return (std::cos(base + h) - std::cos(base)) / h;
    return -std::sin(base) - 0.5 * h * std::cos(base) + h * h * std::sin(base) / 6.0;
}

class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Worker-thread cap shared by the parallel loops.  0 = use hardware count.
// ---------------------------------------------------------------------------

inline unsigned& thread_cap() {
    static unsigned cap = 0;
    return cap;
}

inline unsigned effective_threads() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    unsigned cap = thread_cap();
    return cap == 0 ? hw : std::min(cap, hw);
}

/// Run body(i) for i in [begin, end) on up to effective_threads() workers.
inline void parallel_for(std::size_t begin, std::size_t end,
                         const std::function<void(std::size_t)>& body) {
    const std::size_t n = end > begin ? end - begin : 0;
    const unsigned workers = static_cast<unsigned>(
        std::min<std::size_t>(effective_threads(), n));
    if (workers <= 1) {
        for (std::size_t i = begin; i < end; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([=, &body]() {
            for (std::size_t i = begin + w; i < end; i += workers) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace se2lie
