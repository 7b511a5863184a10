#pragma once

// Sampled fields on (x, y, theta) grids and the shared quadratic B-spline
// resampler (interpolating: samples are prefiltered to spline coefficients).

#include <cassert>
#include <cstddef>
#include <vector>

#include "se2lie/common.hpp"

namespace se2lie {

/// Grid metadata.  x and y are centered (node nx/2 is x = 0), theta is the
/// uniform circle grid theta_k = 2 pi k / ntheta.  Storage is x-fastest:
/// index = (k * ny + j) * nx + i.
struct GridSpec {
    int nx{0};
    int ny{0};
    int ntheta{0};
    real_t spacing{1.0};

    std::size_t size() const {
        return static_cast<std::size_t>(nx) * ny * ntheta;
    }
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * ny + j) * nx + i;
    }
    real_t x_of(int i) const { return (i - nx / 2) * spacing; }
    real_t y_of(int j) const { return (j - ny / 2) * spacing; }
    real_t theta_of(int k) const { return kTwoPi * k / ntheta; }
    real_t dtheta() const { return kTwoPi / ntheta; }
    real_t cell_volume() const { return spacing * spacing * dtheta(); }
    /// Fractional index of a physical x coordinate.
    real_t xi_of(real_t x) const { return x / spacing + nx / 2; }
    real_t yj_of(real_t y) const { return y / spacing + ny / 2; }

    bool operator==(const GridSpec&) const = default;
};

template <typename T>
struct Field3 {
    GridSpec spec;
    std::vector<T> data;

    Field3() = default;
    explicit Field3(const GridSpec& s, T fill = T{})
        : spec(s), data(s.size(), fill) {}

    T& operator()(int i, int j, int k) { return data[spec.index(i, j, k)]; }
    const T& operator()(int i, int j, int k) const {
        return data[spec.index(i, j, k)];
    }
};

using ScalarField3 = Field3<real_t>;
using ComplexField3 = Field3<complex_t>;

/// Real 2D image with square pixels.
struct Image2D {
    int nx{0};
    int ny{0};
    real_t spacing{1.0};
    std::vector<real_t> data;

    Image2D() = default;
    Image2D(int nx_, int ny_, real_t spacing_ = 1.0)
        : nx(nx_), ny(ny_), spacing(spacing_),
          data(static_cast<std::size_t>(nx_) * ny_, 0.0) {}

    real_t& operator()(int i, int j) { return data[static_cast<std::size_t>(j) * nx + i]; }
    const real_t& operator()(int i, int j) const {
        return data[static_cast<std::size_t>(j) * nx + i];
    }
};

// ---------------------------------------------------------------------------
// Quadratic B-spline interpolation
// ---------------------------------------------------------------------------

enum class Boundary { Zero, Reflect, Periodic };

namespace detail {

inline real_t bspline2(real_t t) {
    t = std::abs(t);
    if (t <= 0.5) return 0.75 - t * t;
    if (t < 1.5) return 0.5 * sqr(t - 1.5);
    return 0.0;
}

inline constexpr real_t kPole2 = -0.171572875253809902396622551580603843;  // 2*sqrt(2)-3

/// In-place prefilter turning samples into interpolating quadratic-spline
/// coefficients (one dimension, stride access).
template <typename Vec>
inline void prefilter_line(Vec&& v, std::size_t n, std::size_t stride,
                           Boundary mode) {
    if (n < 2) return;
    const real_t z = kPole2;
    const real_t lambda = (1.0 - z) * (1.0 - 1.0 / z);
    auto at = [&](std::size_t i) -> real_t& { return v[i * stride]; };

    for (std::size_t i = 0; i < n; ++i) at(i) *= lambda;

    // causal pass: c+(i) = f(i) + z c+(i-1)
    real_t sum = at(0);
    real_t zk = z;
    if (mode == Boundary::Periodic) {
        for (std::size_t k = 1; k < n && std::abs(zk) > 1e-18; ++k) {
            sum += zk * at(n - k);
            zk *= z;
        }
    } else if (mode == Boundary::Reflect) {  // mirror history
        for (std::size_t k = 1; k < n && std::abs(zk) > 1e-18; ++k) {
            sum += zk * at(k);
            zk *= z;
        }
    }  // Zero: history is zero, sum = f(0)
    at(0) = sum;
    for (std::size_t i = 1; i < n; ++i) at(i) += z * at(i - 1);

    if (mode == Boundary::Zero) {
        // zero extension ahead: c+(n-1+k) = z^k c+(n-1), so the anticausal
        // recursion closes with c(n-1) = -z c+(n-1) / (1 - z^2)
        at(n - 1) = -z * at(n - 1) / (1.0 - z * z);
        for (std::size_t i = n - 1; i-- > 0;) at(i) = z * (at(i + 1) - at(i));
        return;
    }

    // anticausal pass: c(i) = z (c(i+1) - c+(i))  =>  c(i) = -sum_k z^{k+1} c+(i+k)
    if (mode == Boundary::Periodic) {
        real_t tail = 0;
        zk = z;
        for (std::size_t k = 0; k < n && std::abs(zk) > 1e-18; ++k) {
            tail -= zk * at((n - 1 + k) % n);
            zk *= z;
        }
        at(n - 1) = tail;
        real_t next = tail;
        for (std::size_t i = n - 1; i-- > 0;) {
            const real_t cur = z * (next - at(i));
            next = cur;
            at(i) = cur;
        }
        return;
    }
    at(n - 1) = (z / (z * z - 1.0)) * (at(n - 1) + z * at(n - 2));
    for (std::size_t i = n - 1; i-- > 0;) at(i) = z * (at(i + 1) - at(i));
}

}  // namespace detail

/// Prefiltered quadratic-spline view of one (x, y) slice.
class SplineSlice2 {
public:
    SplineSlice2() = default;

    SplineSlice2(const real_t* samples, int nx, int ny, Boundary mode)
        : nx_(nx), ny_(ny), mode_(mode),
          c_(samples, samples + static_cast<std::size_t>(nx) * ny) {
        for (int j = 0; j < ny_; ++j)
            detail::prefilter_line(&c_[static_cast<std::size_t>(j) * nx_],
                                   static_cast<std::size_t>(nx_), 1, mode);
        for (int i = 0; i < nx_; ++i)
            detail::prefilter_line(&c_[i], static_cast<std::size_t>(ny_),
                                   static_cast<std::size_t>(nx_), mode);
    }

    /// Sample at fractional index coordinates (fx, fy).
    real_t operator()(real_t fx, real_t fy) const {
        const int ix = static_cast<int>(std::round(fx));
        const int iy = static_cast<int>(std::round(fy));
        real_t wx[3], wy[3];
        weights(fx - ix, wx);
        weights(fy - iy, wy);
        real_t acc = 0;
        for (int b = -1; b <= 1; ++b) {
            const int j = fold(iy + b, ny_);
            if (j < 0) continue;
            real_t row = 0;
            for (int a = -1; a <= 1; ++a) {
                const int i = fold(ix + a, nx_);
                if (i < 0) continue;
                row += wx[a + 1] * c_[static_cast<std::size_t>(j) * nx_ + i];
            }
            acc += wy[b + 1] * row;
        }
        return acc;
    }

private:
    static void weights(real_t f, real_t w[3]) {
        // f in [-0.5, 0.5], offsets -1, 0, +1
        w[0] = 0.5 * sqr(0.5 - f);
        w[1] = 0.75 - f * f;
        w[2] = 0.5 * sqr(0.5 + f);
    }

    int fold(int i, int n) const {
        if (i >= 0 && i < n) return i;
        switch (mode_) {
            case Boundary::Zero:
                return -1;
            case Boundary::Periodic:
                i %= n;
                return i < 0 ? i + n : i;
            case Boundary::Reflect:
            default:
                while (i < 0 || i >= n) {
                    if (i < 0) i = -i - 1;
                    if (i >= n) i = 2 * n - 1 - i;
                }
                return i;
        }
    }

    int nx_{0}, ny_{0};
    Boundary mode_{Boundary::Zero};
    std::vector<real_t> c_;
};

/// Interpolating quadratic spline over a full (x, y, theta) field:
/// reflective in x and y, periodic in theta.
class Spline3 {
public:
    Spline3() = default;

    explicit Spline3(const ScalarField3& f, Boundary spatial = Boundary::Reflect)
        : spec_(f.spec), spatial_(spatial), c_(f.data) {
        const int nx = spec_.nx, ny = spec_.ny, nt = spec_.ntheta;
        for (int k = 0; k < nt; ++k) {
            for (int j = 0; j < ny; ++j)
                detail::prefilter_line(&c_[spec_.index(0, j, k)],
                                       static_cast<std::size_t>(nx), 1, spatial);
            for (int i = 0; i < nx; ++i)
                detail::prefilter_line(&c_[spec_.index(i, 0, k)],
                                       static_cast<std::size_t>(ny),
                                       static_cast<std::size_t>(nx), spatial);
        }
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                detail::prefilter_line(&c_[spec_.index(i, j, 0)],
                                       static_cast<std::size_t>(nt),
                                       static_cast<std::size_t>(nx) * ny,
                                       Boundary::Periodic);
    }

    /// Sample at physical coordinates (x, y, theta).
    real_t operator()(real_t x, real_t y, real_t theta) const {
        const real_t fx = spec_.xi_of(x);
        const real_t fy = spec_.yj_of(y);
        const real_t ft = wrap_angle(theta) / spec_.dtheta();
        const int ix = static_cast<int>(std::round(fx));
        const int iy = static_cast<int>(std::round(fy));
        const int it = static_cast<int>(std::round(ft));
        real_t wx[3], wy[3], wt[3];
        weights(fx - ix, wx);
        weights(fy - iy, wy);
        weights(ft - it, wt);
        real_t acc = 0;
        for (int c = -1; c <= 1; ++c) {
            const int k = ((it + c) % spec_.ntheta + spec_.ntheta) % spec_.ntheta;
            real_t plane = 0;
            for (int b = -1; b <= 1; ++b) {
                const int j = fold(iy + b, spec_.ny);
                if (j < 0) continue;
                real_t row = 0;
                for (int a = -1; a <= 1; ++a) {
                    const int i = fold(ix + a, spec_.nx);
                    if (i < 0) continue;
                    row += wx[a + 1] * c_[spec_.index(i, j, k)];
                }
                plane += wy[b + 1] * row;
            }
            acc += wt[c + 1] * plane;
        }
        return acc;
    }

private:
    static void weights(real_t f, real_t w[3]) {
        w[0] = 0.5 * sqr(0.5 - f);
        w[1] = 0.75 - f * f;
        w[2] = 0.5 * sqr(0.5 + f);
    }
    int fold(int i, int n) const {
        if (i >= 0 && i < n) return i;
        if (spatial_ == Boundary::Zero) return -1;
        while (i < 0 || i >= n) {
            if (i < 0) i = -i - 1;
            if (i >= n) i = 2 * n - 1 - i;
        }
        return i;
    }

    GridSpec spec_;
    Boundary spatial_{Boundary::Reflect};
    std::vector<real_t> c_;
};

}  // namespace se2lie
