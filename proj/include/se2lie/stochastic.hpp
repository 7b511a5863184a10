#pragma once

// Monte-Carlo samplers for the left-invariant processes: the direction
// process (convection along the orientation, diffusion in theta), the
// contour-enhancement process (diffusion along theta/xi/eta), and the
// contracted-group process with its Levy-area coordinate.  Walks use a
// counter-based generator so ensembles are bitwise reproducible and
// parallelizable over walks.

#include <cstdint>

#include "se2lie/core.hpp"
#include "se2lie/grid.hpp"
#include "se2lie/kernels.hpp"

namespace se2lie {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Rational approximation of the standard normal quantile (Wichura's
/// algorithm AS241, double precision branch).
inline real_t normal_quantile(real_t p) {
    const real_t q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const real_t r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r +
                    4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r +
                  1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r +
                3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r +
                    2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r +
                  6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r +
                1.0);
    }
    real_t r = q < 0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    real_t val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r +
                   1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r +
                 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r +
               1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r +
                   1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r +
                 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r +
               1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r +
                   2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r +
                 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r +
               6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r +
                   7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r +
                 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r +
               1.0);
    }
    return q < 0 ? -val : val;
}

}  // namespace detail

/// Counter-based random stream: value i of stream s under seed k is a pure
/// function of (k, s, i).
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : state_(detail::splitmix64(seed ^ detail::splitmix64(stream * 0x9E3779B97F4A7C15ull))) {}

    /// Uniform in (0, 1).
    real_t uniform() {
        const std::uint64_t bits = detail::splitmix64(state_ ^ counter_++);
        return (static_cast<real_t>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via the inverse distribution function.
    real_t normal() { return detail::normal_quantile(uniform()); }

    /// Exponential with the given rate.
    real_t exponential(real_t rate) { return -std::log(uniform()) / rate; }

private:
    std::uint64_t state_;
    std::uint64_t counter_{0};
};

enum class ProcessKind { Direction, Enhancement, H3 };

/// Raw walker state: (x, y, theta) with theta unwrapped; for the contracted
/// process the components carry (X, T, W).
struct WalkPoint {
    real_t x{0};
    real_t y{0};
    real_t theta{0};
};

struct WalkEnsemble {
    ProcessKind process{ProcessKind::Direction};
    real_t step{0};
    std::uint64_t seed{0};
    std::vector<WalkPoint> endpoints;
    /// fully sampled trajectories of the first few walks (for export/plots)
    std::vector<std::vector<WalkPoint>> paths;
};

namespace detail {

inline constexpr std::size_t kMaxStoredPaths = 16;

template <typename StepFn>
WalkEnsemble run_walks(ProcessKind kind, std::size_t n_walks, int n_steps,
                       real_t step, std::uint64_t seed, StepFn&& advance) {
    if (step <= 0) throw numeric_error("walk sampling: step must be positive");
    WalkEnsemble e;
    e.process = kind;
    e.step = step;
    e.seed = seed;
    e.endpoints.resize(n_walks);
    const std::size_t stored = std::min<std::size_t>(kMaxStoredPaths, n_walks);
    e.paths.resize(stored);
    parallel_for(0, n_walks, [&](std::size_t w) {
        CounterRng rng(seed, w);
        real_t state[3] = {0, 0, 0};  // x, y, theta (or X, T, W)
        std::vector<WalkPoint>* path = w < stored ? &e.paths[w] : nullptr;
        if (path) path->push_back({});
        for (int s = 0; s < n_steps; ++s) {
            advance(state, rng);
            if (path) path->push_back({state[0], state[1], state[2]});
        }
        e.endpoints[w] = {state[0], state[1], state[2]};
    });
    return e;
}

}  // namespace detail

/// Direction process: unit-speed transport along the orientation, Brownian
/// orientation with diffusivity d11 and curvature drift kappa0.
inline WalkEnsemble sample_direction_walks(const DiffusionParams& p,
                                           std::size_t n_walks, int n_steps,
                                           real_t step, std::uint64_t seed) {
    if (p.d11 < 0) throw numeric_error("sample_direction_walks: d11 >= 0");
    const real_t sd = std::sqrt(2.0 * p.d11 * step);
    return detail::run_walks(
        ProcessKind::Direction, n_walks, n_steps, step, seed,
        [&, sd](real_t* st, CounterRng& rng) {
            st[0] += step * std::cos(st[2]);
            st[1] += step * std::sin(st[2]);
            st[2] += sd * rng.normal() + step * p.kappa0;
        });
}

/// Contour-enhancement process: independent Brownian increments along the
/// orientation frame (variances 2 d22, 2 d33) and in theta (2 d11).
inline WalkEnsemble sample_enhancement_walks(const DiffusionParams& p,
                                             std::size_t n_walks, int n_steps,
                                             real_t step, std::uint64_t seed) {
    const real_t sdt = std::sqrt(2.0 * p.d11 * step);
    const real_t sdx = std::sqrt(2.0 * p.d22 * step);
    const real_t sde = std::sqrt(2.0 * p.d33 * step);
    return detail::run_walks(
        ProcessKind::Enhancement, n_walks, n_steps, step, seed,
        [sdt, sdx, sde](real_t* st, CounterRng& rng) {
            const real_t c = std::cos(st[2]), s = std::sin(st[2]);
            const real_t exi = sdx * rng.normal();
            const real_t eeta = sde == 0 ? 0.0 : sde * rng.normal();
            st[0] += exi * c - eeta * s;
            st[1] += exi * s + eeta * c;
            st[2] += sdt * rng.normal();
        });
}

/// Contracted-group process: complex Brownian motion Z = X + i W plus the
/// Levy-area coordinate T = 2 int (W dX - X dW), accumulated with the
/// midpoint rule.  Endpoint stores (X, T, W).
inline WalkEnsemble sample_h3_walks(std::size_t n_walks, int n_steps,
                                    real_t step, std::uint64_t seed) {
    const real_t sd = std::sqrt(step);
    return detail::run_walks(
        ProcessKind::H3, n_walks, n_steps, step, seed,
        [sd](real_t* st, CounterRng& rng) {
            const real_t dx = sd * rng.normal();
            const real_t dw = sd * rng.normal();
            const real_t xm = st[0] + 0.5 * dx;
            const real_t wm = st[2] + 0.5 * dw;
            st[1] += 2.0 * (wm * dx - xm * dw);
            st[0] += dx;
            st[2] += dw;
        });
}

/// Normalized endpoint histogram (probability mass per cell divided by cell
/// volume, so it compares directly against kernel densities).  theta wraps;
/// out-of-box walkers are dropped and the kept set renormalized.
inline ScalarField3 endpoint_histogram(const WalkEnsemble& e,
                                       const GridSpec& spec,
                                       bool wrap_theta = true) {
    ScalarField3 h(spec);
    std::size_t kept = 0;
    for (const auto& g : e.endpoints) {
        const int i = static_cast<int>(std::floor(g.x / spec.spacing + spec.nx / 2.0 + 0.5));
        const int j = static_cast<int>(std::floor(g.y / spec.spacing + spec.ny / 2.0 + 0.5));
        int k;
        if (wrap_theta) {
            k = static_cast<int>(std::floor(wrap_angle(g.theta) / spec.dtheta() + 0.5));
            k = ((k % spec.ntheta) + spec.ntheta) % spec.ntheta;
        } else {
            // third axis used as a plain linear coordinate (centered)
            k = static_cast<int>(
                std::floor(g.theta / spec.dtheta() + spec.ntheta / 2.0 + 0.5));
            if (k < 0 || k >= spec.ntheta) continue;
        }
        if (i < 0 || i >= spec.nx || j < 0 || j >= spec.ny) continue;
        h(i, j, k) += 1.0;
        ++kept;
    }
    if (kept == 0) throw numeric_error("endpoint_histogram: no walker in box");
    const real_t norm = 1.0 / (static_cast<real_t>(kept) * spec.cell_volume());
    for (auto& v : h.data) v *= norm;
    return h;
}

/// Endpoint distribution of walkers with memoryless lifetimes: every walk
/// draws T ~ Exp(alpha) and is binned where it dies.  Returns a probability
/// grid (masses sum to 1 over the kept walkers).
template <typename Sampler>
ScalarField3 empirical_resolvent(Sampler&& one_walk, real_t alpha,
                                 std::size_t n_walks, real_t step,
                                 const GridSpec& spec, std::uint64_t seed) {
    if (alpha <= 0) throw numeric_error("empirical_resolvent: alpha > 0");
    std::vector<WalkPoint> ends(n_walks);
    parallel_for(0, n_walks, [&](std::size_t w) {
        CounterRng rng(seed, w);
        const real_t lifetime = rng.exponential(alpha);
        const int n_steps = static_cast<int>(std::round(lifetime / step));
        ends[w] = one_walk(rng, n_steps, step);
    });
    WalkEnsemble e;
    e.endpoints = std::move(ends);
    e.step = step;
    e.seed = seed;
    ScalarField3 h = endpoint_histogram(e, spec);
    // convert from density back to probability mass per cell and normalize
    real_t total = 0;
    for (real_t v : h.data) total += v;
    for (auto& v : h.data) v /= total;
    return h;
}

/// Single direction-process walk advanced for n steps; used with
/// empirical_resolvent.
inline WalkPoint direction_walk_endpoint(const DiffusionParams& p,
                                         CounterRng& rng, int n_steps,
                                         real_t step) {
    real_t x = 0, y = 0, th = 0;
    const real_t sd = std::sqrt(2.0 * p.d11 * step);
    for (int s = 0; s < n_steps; ++s) {
        x += step * std::cos(th);
        y += step * std::sin(th);
        th += sd * rng.normal() + step * p.kappa0;
    }
    return {x, y, th};
}

inline WalkPoint enhancement_walk_endpoint(const DiffusionParams& p,
                                           CounterRng& rng, int n_steps,
                                           real_t step) {
    real_t x = 0, y = 0, th = 0;
    const real_t sdt = std::sqrt(2.0 * p.d11 * step);
    const real_t sdx = std::sqrt(2.0 * p.d22 * step);
    const real_t sde = std::sqrt(2.0 * p.d33 * step);
    for (int s = 0; s < n_steps; ++s) {
        const real_t c = std::cos(th), sn = std::sin(th);
        const real_t exi = sdx * rng.normal();
        const real_t eeta = sde == 0 ? 0.0 : sde * rng.normal();
        x += exi * c - eeta * sn;
        y += exi * sn + eeta * c;
        th += sdt * rng.normal();
    }
    return {x, y, th};
}

}  // namespace se2lie
