#pragma once

// Heat and resolvent kernels of the left-invariant diffusions on the
// roto-translation group, their nilpotent-group approximations, group
// convolution, and regularized (Gaussian) left-invariant derivatives on
// orientation scores.
//
// Spatial Fourier convention: F[f](w) = int f(x) e^{-i w.x} dx, under which
// every kernel integrates to exactly 1.  The theta-spectra below are the
// Sturm-Liouville expansions in ce_n (char value a_n) and se_n (char value
// b_n); at rho = 0 they reduce to the heat kernel on the circle.

#include <map>
#include <memory>

#include "se2lie/core.hpp"
#include "se2lie/fft.hpp"
#include "se2lie/grid.hpp"
#include "se2lie/mathieu.hpp"

namespace se2lie {

/// Generator coefficients of the second-order left-invariant evolution:
/// diffusivities along {d/dtheta, d/dxi, d/deta}, convection (a1,a2,a3),
/// decay rate alpha for resolvents, curvature drift kappa0 for the
/// direction process.
struct DiffusionParams {
    real_t d11{0};
    real_t d22{0};
    real_t d33{0};
    real_t a1{0};
    real_t a2{0};
    real_t a3{0};
    real_t alpha{0};
    real_t kappa0{0};
};

using KernelGrid = ScalarField3;

namespace detail {

inline int heat_mode_count(real_t t, real_t d11, real_t q) {
    const real_t need = 2.0 * std::abs(q) + 32.3 / std::max(t * d11, 1e-12);
    return std::min(160, static_cast<int>(std::ceil(std::sqrt(need))) + 2);
}

}  // namespace detail

/// theta-spectrum of the heat kernel at fixed q: evaluates
///   sum_n ce_n(phi) ce_n(phi - theta) e^{-t a_n D11} / pi  + (se terms)
/// without the isotropic spatial factor.  The eigenbasis depends only on q
/// and is reused across evaluation times.
class HeatSpectrum {
public:
    HeatSpectrum(real_t q, real_t d11, int nmax)
        : d11_(d11), basis_(PeriodicBasis::build(q, nmax)) {}

    real_t angular(real_t phi, real_t theta, real_t t) const {
        real_t acc = 0;
        for (std::size_t n = 0; n < basis_.ce.size(); ++n) {
            const real_t w = std::exp(-t * d11_ * basis_.ce[n].char_val());
            if (w < 1e-16 && n > 2) break;
            acc += w * basis_.ce[n](phi) * basis_.ce[n](phi - theta);
        }
        for (std::size_t n = 0; n < basis_.se.size(); ++n) {
            const real_t w = std::exp(-t * d11_ * basis_.se[n].char_val());
            if (w < 1e-16 && n > 2) break;
            acc += w * basis_.se[n](phi) * basis_.se[n](phi - theta);
        }
        return acc / kPi;
    }

private:
    real_t d11_;
    PeriodicBasis basis_;
};

/// Spatially Fourier-transformed heat kernel at frequency (wx, wy), angle
/// theta and time t.  Real-valued by construction; returned as complex to
/// match downstream synthesis.
inline complex_t heat_kernel_hat(real_t wx, real_t wy, real_t theta, real_t t,
                                 const DiffusionParams& p) {
    if (p.d11 <= 0) throw numeric_error("heat_kernel_hat: d11 must be positive");
    const real_t rho2 = wx * wx + wy * wy;
    const real_t phi = std::atan2(wy, wx);
    const real_t q = rho2 * (p.d22 - p.d33) / (4.0 * p.d11);
    const real_t iso = std::exp(-0.5 * t * (p.d22 + p.d33) * rho2);
    HeatSpectrum spec(q, p.d11, detail::heat_mode_count(t, p.d11, q));
    return complex_t(iso * spec.angular(phi, theta, t), 0.0);
}

namespace detail {

/// Roll-and-scale inverse 2D DFT synthesis of a centered kernel grid.
/// hat(i, j, k) supplies the value at DFT frequency bin (i, j) and theta_k.
template <typename HatFn>
ScalarField3 synthesize_from_hat(const GridSpec& spec, HatFn&& hat) {
    ScalarField3 out(spec);
    const int cx = spec.nx / 2, cy = spec.ny / 2;
    const real_t scale = 1.0 / (spec.spacing * spec.spacing);
    parallel_for(0, static_cast<std::size_t>(spec.ntheta), [&](std::size_t k) {
        Fft2D fft(spec.nx, spec.ny);
        complex_t* buf = fft.buffer();
        for (int j = 0; j < spec.ny; ++j)
            for (int i = 0; i < spec.nx; ++i)
                buf[static_cast<std::size_t>(j) * spec.nx + i] =
                    hat(i, j, static_cast<int>(k));
        fft.inverse();
        for (int j = 0; j < spec.ny; ++j)
            for (int i = 0; i < spec.nx; ++i) {
                const int ii = (i + cx) % spec.nx;
                const int jj = (j + cy) % spec.ny;
                out(ii, jj, static_cast<int>(k)) =
                    buf[static_cast<std::size_t>(j) * spec.nx + i].real() * scale;
            }
    });
    return out;
}

inline real_t grid_mass(const ScalarField3& f) {
    real_t s = 0;
    for (real_t v : f.data) s += v;
    return s * f.spec.cell_volume();
}

/// Angular DFT frequencies of the grid.
inline real_t omega_of(int i, int n, real_t spacing) {
    return kTwoPi * fft_freq(i, n) / (n * spacing);
}

}  // namespace detail

/// Heat kernel sampled on a grid; total mass is checked against 1 and a
/// deviation beyond 5% reports an unresolvably coarse grid.
inline KernelGrid heat_kernel(real_t t, const DiffusionParams& p,
                              const GridSpec& spec) {
    if (p.d11 <= 0) throw numeric_error("heat_kernel: d11 must be positive");
    // cache spectra over distinct rho^2 (integer key on square grids)
    std::map<long long, std::shared_ptr<HeatSpectrum>> cache;
    std::mutex cache_mutex;
    auto spectrum_for = [&](real_t rho2) {
        long long key = -1;
        if (spec.nx == spec.ny) {
            key = static_cast<long long>(
                std::llround(rho2 * sqr(spec.nx * spec.spacing / kTwoPi)));
        }
        if (key >= 0) {
            std::lock_guard<std::mutex> lock(cache_mutex);
            auto it = cache.find(key);
            if (it != cache.end()) return it->second;
        }
        const real_t q = rho2 * (p.d22 - p.d33) / (4.0 * p.d11);
        auto s = std::make_shared<HeatSpectrum>(
            q, p.d11, detail::heat_mode_count(t, p.d11, q));
        if (key >= 0) {
            std::lock_guard<std::mutex> lock(cache_mutex);
            cache.emplace(key, s);
        }
        return s;
    };

    // precompute hat slabs (theta-major evaluation per frequency)
    ComplexField3 hat(spec);
    std::vector<std::pair<int, int>> freqs;
    freqs.reserve(static_cast<std::size_t>(spec.nx) * spec.ny);
    for (int j = 0; j < spec.ny; ++j)
        for (int i = 0; i < spec.nx; ++i) freqs.emplace_back(i, j);
    parallel_for(0, freqs.size(), [&](std::size_t f) {
        const auto [i, j] = freqs[f];
        const real_t wx = detail::omega_of(i, spec.nx, spec.spacing);
        const real_t wy = detail::omega_of(j, spec.ny, spec.spacing);
        const real_t rho2 = wx * wx + wy * wy;
        const real_t phi = std::atan2(wy, wx);
        const real_t iso = std::exp(-0.5 * t * (p.d22 + p.d33) * rho2);
        auto s = spectrum_for(rho2);
        for (int k = 0; k < spec.ntheta; ++k)
            hat(i, j, k) = iso * s->angular(phi, spec.theta_of(k), t);
    });

    ScalarField3 out = detail::synthesize_from_hat(
        spec, [&](int i, int j, int k) { return hat(i, j, k); });
    const real_t mass = detail::grid_mass(out);
    if (std::abs(mass - 1.0) > 0.05)
        throw numeric_error("heat_kernel: grid too coarse (mass deviates by " +
                            std::to_string(std::abs(mass - 1.0)) + ")");
    return out;
}

// ---------------------------------------------------------------------------
// Resolvent kernels
// ---------------------------------------------------------------------------

/// Floquet data of the resolvent theta-equation at one spatial frequency.
class ResolventSpectrum {
public:
    ResolventSpectrum(real_t rho2, const DiffusionParams& p)
        : alpha_(p.alpha), d11_(p.d11) {
        q_ = rho2 * (p.d22 - p.d33) / (4.0 * p.d11);
        a_ = -(p.alpha + 0.5 * rho2 * (p.d22 + p.d33)) / p.d11;
        if (q_ > 1e-12) {
            fs_ = std::make_shared<FloquetSolution>(a_, q_);
            nu_ = fs_->nu();
            // prefactor from the derivative jump of the glued solution:
            // lambda = alpha / (D11 * W[me_nu, me_-nu])
            lambda_ = alpha_ / (d11_ * fs_->wronskian_me());
        } else {
            q_ = 0.0;
            nu_ = std::sqrt(complex_t(a_, 0.0));
            if (nu_.imag() < 0) nu_ = -nu_;
        }
    }

    /// Solution with absorbing condition at |theta| -> infinity.
    real_t unwrapped(real_t phi, real_t theta) const {
        if (q_ == 0.0) {
            const real_t s = nu_.imag();
            return alpha_ * std::exp(-s * std::abs(theta)) / (2.0 * d11_ * s);
        }
        complex_t v;
        if (theta >= 0)
            v = lambda_ * fs_->me(phi) * fs_->me_minus(phi - theta);
        else
            v = lambda_ * fs_->me_minus(phi) * fs_->me(phi - theta);
        return v.real();
    }

    /// 2 pi periodized solution: truncated sum over 2 pi shifts.
    real_t wrapped_sum(real_t phi, real_t theta) const {
        const real_t decay = kTwoPi * nu_.imag();
        const int K = std::max(
            2, static_cast<int>(std::ceil(28.0 / std::max(decay, 1e-6))) + 1);
        real_t acc = 0;
        for (int k = -K; k <= K; ++k)
            acc += unwrapped(phi, theta + kTwoPi * k);
        return acc;
    }

    /// 2 pi periodized solution: Floquet geometric series in closed form.
    real_t wrapped_closed(real_t phi, real_t theta) const {
        real_t tw = wrap_angle(theta);
        if (q_ == 0.0) {
            const real_t s = nu_.imag();
            const real_t num = std::exp(-s * tw) + std::exp(-s * (kTwoPi - tw));
            return alpha_ * num / (2.0 * d11_ * s * (1.0 - std::exp(-kTwoPi * s)));
        }
        const complex_t i1(0.0, 1.0);
        const complex_t den = -2.0 * i1 * std::sin(nu_ * kPi);
        const complex_t v =
            lambda_ *
            (std::exp(-i1 * nu_ * kPi) * fs_->me(phi) * fs_->me_minus(phi - tw) +
             std::exp(i1 * nu_ * kPi) * fs_->me_minus(phi) * fs_->me(phi - tw)) /
            den;
        return v.real();
    }

    complex_t nu() const { return nu_; }
    const FloquetSolution* floquet() const { return fs_.get(); }

private:
    real_t alpha_, d11_, q_{0}, a_{0};
    complex_t nu_{0};
    complex_t lambda_{0};
    std::shared_ptr<FloquetSolution> fs_;
};

/// Resolvent theta-spectrum with absorbing (unwrapped) condition.
inline complex_t resolvent_hat_unwrapped(real_t wx, real_t wy, real_t theta,
                                         const DiffusionParams& p) {
    if (p.alpha <= 0 || p.d11 <= 0)
        throw numeric_error("resolvent_hat: need alpha > 0 and d11 > 0");
    if (p.d33 > p.d22)
        throw numeric_error("resolvent_hat: requires d22 >= d33");
    ResolventSpectrum rs(wx * wx + wy * wy, p);
    return complex_t(rs.unwrapped(std::atan2(wy, wx), theta), 0.0);
}

enum class PeriodicEvaluator { ShiftSum, ClosedForm };

/// 2 pi periodic resolvent theta-spectrum.
inline complex_t resolvent_hat_periodic(
    real_t wx, real_t wy, real_t theta, const DiffusionParams& p,
    PeriodicEvaluator ev = PeriodicEvaluator::ClosedForm) {
    if (p.alpha <= 0 || p.d11 <= 0)
        throw numeric_error("resolvent_hat: need alpha > 0 and d11 > 0");
    if (p.d33 > p.d22)
        throw numeric_error("resolvent_hat: requires d22 >= d33");
    ResolventSpectrum rs(wx * wx + wy * wy, p);
    const real_t phi = std::atan2(wy, wx);
    return complex_t(ev == PeriodicEvaluator::ShiftSum ? rs.wrapped_sum(phi, theta)
                                                       : rs.wrapped_closed(phi, theta),
                     0.0);
}

/// Resolvent kernel sampled on a grid (exact spectra, closed-form wrap).
inline KernelGrid resolvent_kernel(const DiffusionParams& p,
                                   const GridSpec& spec) {
    std::map<long long, std::shared_ptr<ResolventSpectrum>> cache;
    std::mutex cache_mutex;
    auto spectrum_for = [&](real_t rho2) {
        long long key = -1;
        if (spec.nx == spec.ny)
            key = static_cast<long long>(
                std::llround(rho2 * sqr(spec.nx * spec.spacing / kTwoPi)));
        if (key >= 0) {
            std::lock_guard<std::mutex> lock(cache_mutex);
            auto it = cache.find(key);
            if (it != cache.end()) return it->second;
        }
        auto s = std::make_shared<ResolventSpectrum>(rho2, p);
        if (key >= 0) {
            std::lock_guard<std::mutex> lock(cache_mutex);
            cache.emplace(key, s);
        }
        return s;
    };

    ComplexField3 hat(spec);
    std::vector<std::pair<int, int>> freqs;
    for (int j = 0; j < spec.ny; ++j)
        for (int i = 0; i < spec.nx; ++i) freqs.emplace_back(i, j);
    parallel_for(0, freqs.size(), [&](std::size_t f) {
        const auto [i, j] = freqs[f];
        const real_t wx = detail::omega_of(i, spec.nx, spec.spacing);
        const real_t wy = detail::omega_of(j, spec.ny, spec.spacing);
        auto s = spectrum_for(wx * wx + wy * wy);
        const real_t phi = std::atan2(wy, wx);
        for (int k = 0; k < spec.ntheta; ++k)
            hat(i, j, k) = s->wrapped_closed(phi, spec.theta_of(k));
    });
    return detail::synthesize_from_hat(
        spec, [&](int i, int j, int k) { return hat(i, j, k); });
}

// ---------------------------------------------------------------------------
// Closed forms for the isotropic case d22 == d33
// ---------------------------------------------------------------------------

/// Free (non-periodized) heat kernel for d22 = d33: anisotropic Gaussian.
inline real_t heat_kernel_iso_closed(real_t x, real_t y, real_t theta, real_t t,
                                     const DiffusionParams& p) {
    const real_t r2 = x * x + y * y;
    const real_t e = theta * theta / p.d11 + r2 / p.d22;
    return std::exp(-e / (4.0 * t)) /
           (std::sqrt(p.d11) * p.d22 * std::pow(4.0 * kPi * t, 1.5));
}

/// Free resolvent for d22 = d33 (Yukawa form).
inline real_t resolvent_iso_closed(real_t x, real_t y, real_t theta,
                                   const DiffusionParams& p) {
    const real_t r2 = x * x + y * y;
    const real_t rho = std::sqrt(theta * theta / p.d11 + r2 / p.d22);
    return p.alpha * std::exp(-std::sqrt(p.alpha) * rho) /
           (4.0 * kPi * std::sqrt(p.d11) * p.d22 * rho);
}

// ---------------------------------------------------------------------------
// Nilpotent (Heisenberg-type) approximations
// ---------------------------------------------------------------------------

/// Contour-enhancement heat kernel on the contracted group, by quadrature of
/// the integral representation.
inline real_t heis_heat_kernel(real_t x, real_t y, real_t theta, real_t s,
                               const DiffusionParams& p) {
    if (p.d11 <= 0 || p.d22 <= 0 || s <= 0)
        throw numeric_error("heis_heat_kernel: need d11, d22, s > 0");
    const real_t c1 = x * x / (s * p.d22) + theta * theta / (s * p.d11);
    // constants fixed so that the time integral reproduces the closed-form
    // infinite-lifetime limit and the total mass is 1
    const real_t c2 = 4.0 * (y - 0.5 * x * theta) / (s * std::sqrt(p.d11 * p.d22));
    // integrand: (2 tau / sinh 2 tau) cos(c2 tau) exp(-c1 tau / tanh 2 tau),
    // even in tau; tau/tanh(2 tau) -> 1/2 at 0.
    auto integrand = [&](real_t tau) {
        if (std::abs(tau) < 1e-8)
            return std::cos(c2 * tau) * std::exp(-0.5 * c1);
        const real_t g = 2.0 * tau / std::sinh(2.0 * tau);
        return g * std::cos(c2 * tau) * std::exp(-c1 * tau / std::tanh(2.0 * tau));
    };
    // support: g decays like e^{-2 tau}; oscillation frequency c2
    const real_t tmax = std::max(30.0, 20.0 + 0.5 * c1);
    const int n = std::max(4000, static_cast<int>(64.0 * tmax *
                                                  std::max(1.0, std::abs(c2) / kTwoPi)));
    if (n > 40000000)
        throw numeric_error("heis_heat_kernel: quadrature does not converge here");
    const real_t h = tmax / n;
    real_t acc = 0.5 * integrand(0.0);
    for (int i = 1; i < n; ++i) acc += integrand(i * h);
    acc += 0.5 * integrand(tmax);
    acc *= h;
    return 2.0 * acc / (kPi * kPi * p.d11 * p.d22 * s * s);
}

/// Infinite-lifetime resolvent limit lim_{alpha->0} R_alpha / alpha of the
/// contracted enhancement process (closed form).
inline real_t heis_resolvent_limit(real_t x, real_t y, real_t theta,
                                   const DiffusionParams& p) {
    const real_t c1 = x * x / p.d22 + theta * theta / p.d11;
    const real_t c2 = (y - 0.5 * x * theta);
    const real_t den =
        std::sqrt(c1 * c1 / 16.0 + c2 * c2 / (p.d11 * p.d22));
    return 1.0 / (4.0 * kPi * p.d11 * p.d22 * den);
}

/// Sharp two-sided estimate of heis_resolvent_limit in the weighted modulus
/// |g|^2 = x^2/D22 + theta^2/D11 + |y - x theta / 2| / sqrt(D11 D22).
inline std::pair<real_t, real_t> gaussian_bounds(real_t x, real_t y,
                                                 real_t theta,
                                                 const DiffusionParams& p) {
    const real_t m = x * x / p.d22 + theta * theta / p.d11 +
                     std::abs(y - 0.5 * x * theta) / std::sqrt(p.d11 * p.d22);
    const real_t lower = 1.0 / (4.0 * kPi * p.d11 * p.d22 * m);
    const real_t upper = std::sqrt(2.0) / (kPi * p.d11 * p.d22 * m);
    return {lower, upper};
}

/// Direction-process kernels on the contracted group: time kernel (on its
/// moving plane x = s) and resolvent, both with curvature drift kappa0.
inline real_t direction_heat_approx(real_t x, real_t y, real_t theta, real_t s,
                                    const DiffusionParams& p) {
    // delta(x - s) times the planar density; callers evaluate at x = s.
    (void)s;
    if (x <= 0) return 0.0;
    const real_t e = 3.0 * sqr(x * theta - 2.0 * y) + sqr(x) * sqr(theta - p.kappa0 * x);
    return std::sqrt(3.0) / (2.0 * p.d11 * kPi * x * x) *
           std::exp(-e / (4.0 * x * x * x * p.d11));
}

inline real_t direction_resolvent_approx(real_t x, real_t y, real_t theta,
                                         const DiffusionParams& p) {
    if (x <= 0) return 0.0;  // unit-step support
    return p.alpha * std::exp(-p.alpha * x) * direction_heat_approx(x, y, theta, x, p);
}

// ---------------------------------------------------------------------------
// Spectral grid resolvents (Fourier in x, y and theta)
// ---------------------------------------------------------------------------

namespace detail {

/// Thomas solve of a complex tridiagonal system (in place on rhs).
inline void tridiag_solve(std::vector<complex_t>& sub,
                          std::vector<complex_t>& diag,
                          std::vector<complex_t>& sup,
                          std::vector<complex_t>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const complex_t w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

}  // namespace detail

/// Resolvent of the direction process (convection along the orientation,
/// diffusion in theta, curvature drift kappa0) solved spectrally: Fourier in
/// x, y and theta, where the transport term couples adjacent theta-modes and
/// each spatial frequency reduces to one complex tridiagonal solve.
inline KernelGrid resolvent_direction_spectral(const DiffusionParams& p,
                                               const GridSpec& spec,
                                               bool backward = false) {
    if (p.alpha <= 0 || p.d11 <= 0)
        throw numeric_error("resolvent_direction_spectral: need alpha, d11 > 0");
    const int nt = spec.ntheta;
    const int half = nt / 2;
    ComplexField3 hat(spec);
    const real_t sgn = backward ? -1.0 : 1.0;

    std::vector<std::pair<int, int>> freqs;
    for (int j = 0; j < spec.ny; ++j)
        for (int i = 0; i < spec.nx; ++i) freqs.emplace_back(i, j);
    parallel_for(0, freqs.size(), [&](std::size_t f) {
        const auto [i, j] = freqs[f];
        const real_t wx = sgn * detail::omega_of(i, spec.nx, spec.spacing);
        const real_t wy = sgn * detail::omega_of(j, spec.ny, spec.spacing);
        // theta-modes n = -half .. half-1; generator A = -i w.e_xi(theta)
        //   + D11 (d/dtheta + ... kappa0 drift) : drift enters as
        //   -kappa0 d/dtheta term of the Kolmogorov equation.
        std::vector<complex_t> sub(nt), diag(nt), sup(nt), rhs(nt);
        const complex_t lo(0.5 * wy, 0.5 * wx);    // couples n-1
        const complex_t up(-0.5 * wy, 0.5 * wx);   // couples n+1
        for (int m = 0; m < nt; ++m) {
            const int n = m - half;
            diag[m] = complex_t(p.alpha + p.d11 * static_cast<real_t>(n) * n,
                                sgn * p.kappa0 * n);
            sub[m] = lo;
            sup[m] = up;
            rhs[m] = p.alpha / kTwoPi;
        }
        detail::tridiag_solve(sub, diag, sup, rhs);
        for (int k = 0; k < nt; ++k) {
            const real_t th = spec.theta_of(k);
            complex_t acc = 0;
            for (int m = 0; m < nt; ++m)
                acc += rhs[m] * std::exp(complex_t(0.0, (m - half) * th));
            hat(i, j, k) = acc;
        }
    });
    return detail::synthesize_from_hat(
        spec, [&](int i, int j, int k) { return hat(i, j, k); });
}

/// Independent spectral evaluation of the contour-enhancement resolvent
/// (couples theta-modes two apart; even and odd chains solved separately).
inline KernelGrid resolvent_enhancement_spectral(const DiffusionParams& p,
                                                 const GridSpec& spec) {
    if (p.alpha <= 0 || p.d11 <= 0)
        throw numeric_error("resolvent_enhancement_spectral: need alpha, d11 > 0");
    const int nt = spec.ntheta;
    const int half = nt / 2;
    ComplexField3 hat(spec);

    std::vector<std::pair<int, int>> freqs;
    for (int j = 0; j < spec.ny; ++j)
        for (int i = 0; i < spec.nx; ++i) freqs.emplace_back(i, j);
    parallel_for(0, freqs.size(), [&](std::size_t f) {
        const auto [i, j] = freqs[f];
        const real_t wx = detail::omega_of(i, spec.nx, spec.spacing);
        const real_t wy = detail::omega_of(j, spec.ny, spec.spacing);
        const real_t rho2 = wx * wx + wy * wy;
        const real_t phi = std::atan2(wy, wx);
        // (alpha I - B) row n couples r_{n-2} with q e^{-2 i phi} and
        // r_{n+2} with q e^{+2 i phi}
        const real_t qq = 0.25 * rho2 * (p.d22 - p.d33);
        const complex_t cplus = qq * std::exp(complex_t(0.0, 2.0 * phi));
        const complex_t cminus = qq * std::exp(complex_t(0.0, -2.0 * phi));
        std::vector<complex_t> sol(nt);
        for (int parity = 0; parity < 2; ++parity) {
            std::vector<int> modes;
            for (int m = 0; m < nt; ++m)
                if (((m - half) % 2 + 2) % 2 == parity) modes.push_back(m - half);
            const std::size_t n = modes.size();
            std::vector<complex_t> sub(n), diag(n), sup(n), rhs(n);
            for (std::size_t s = 0; s < n; ++s) {
                const real_t nn = modes[s];
                diag[s] = p.alpha + p.d11 * nn * nn + 0.5 * rho2 * (p.d22 + p.d33);
                sub[s] = cminus;  // couples n-2
                sup[s] = cplus;   // couples n+2
                rhs[s] = p.alpha / kTwoPi;
            }
            detail::tridiag_solve(sub, diag, sup, rhs);
            for (std::size_t s = 0; s < n; ++s) sol[modes[s] + half] = rhs[s];
        }
        for (int k = 0; k < nt; ++k) {
            const real_t th = spec.theta_of(k);
            complex_t acc = 0;
            for (int m = 0; m < nt; ++m)
                acc += sol[m] * std::exp(complex_t(0.0, (m - half) * th));
            hat(i, j, k) = acc;
        }
    });
    return detail::synthesize_from_hat(
        spec, [&](int i, int j, int k) { return hat(i, j, k); });
}

// ---------------------------------------------------------------------------
// Group convolution
// ---------------------------------------------------------------------------

/// Group convolution (K * U)(x, theta) =
///   sum_{theta'} sum_{x'} K(R_{theta'}^{-1}(x - x'), theta - theta') U(x', theta') dvol.
/// The inner spatial sum runs as a per-theta' FFT convolution with the
/// rotated kernel slice; slices are rotated by quadratic-spline resampling.
template <typename T>
Field3<T> se2_convolve(const ScalarField3& kernel, const Field3<T>& u) {
    if (!(kernel.spec == u.spec))
        throw numeric_error("se2_convolve: grid mismatch");
    const GridSpec& spec = u.spec;
    const int nx = spec.nx, ny = spec.ny, nt = spec.ntheta;
    const int cx = nx / 2, cy = ny / 2;
    const real_t dvol = spec.cell_volume();

    // spatial spectra of all input slices
    std::vector<std::vector<complex_t>> uhat(nt);
    parallel_for(0, static_cast<std::size_t>(nt), [&](std::size_t kp) {
        Fft2D fft(nx, ny);
        complex_t* buf = fft.buffer();
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                buf[static_cast<std::size_t>(j) * nx + i] =
                    u(i, j, static_cast<int>(kp));
        fft.forward();
        uhat[kp].assign(buf, buf + static_cast<std::size_t>(nx) * ny);
    });

    // prefiltered kernel slices for rotation
    std::vector<SplineSlice2> kslices(nt);
    parallel_for(0, static_cast<std::size_t>(nt), [&](std::size_t m) {
        kslices[m] = SplineSlice2(&kernel.data[spec.index(0, 0, static_cast<int>(m))],
                                  nx, ny, Boundary::Zero);
    });

    Field3<T> out(spec);
    std::vector<std::mutex> out_mutex(nt);

    parallel_for(0, static_cast<std::size_t>(nt), [&](std::size_t kp) {
        Fft2D fft(nx, ny);
        const real_t tp = spec.theta_of(static_cast<int>(kp));
        const real_t c = std::cos(tp), s = std::sin(tp);
        std::vector<complex_t> rothat(static_cast<std::size_t>(nx) * ny);
        for (int k = 0; k < nt; ++k) {
            const int m = ((k - static_cast<int>(kp)) % nt + nt) % nt;
            // rotated slice: v -> K(R^{-1} v, theta_m), origin rolled to (0,0)
            complex_t* buf = fft.buffer();
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    const real_t vx = spec.x_of(i), vy = spec.y_of(j);
                    const real_t rx = c * vx + s * vy;   // R_{-theta'} v
                    const real_t ry = -s * vx + c * vy;
                    const real_t val = kslices[m](spec.xi_of(rx), spec.yj_of(ry));
                    const int ii = (i - cx + nx) % nx;
                    const int jj = (j - cy + ny) % ny;
                    buf[static_cast<std::size_t>(jj) * nx + ii] = val;
                }
            fft.forward();
            for (std::size_t t = 0; t < rothat.size(); ++t)
                rothat[t] = fft.buffer()[t] * uhat[kp][t];
            complex_t* b2 = fft.buffer();
            for (std::size_t t = 0; t < rothat.size(); ++t) b2[t] = rothat[t];
            fft.inverse();
            std::lock_guard<std::mutex> lock(out_mutex[k]);
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    if constexpr (std::is_same_v<T, real_t>)
                        out(i, j, k) +=
                            b2[static_cast<std::size_t>(j) * nx + i].real() * dvol;
                    else
                        out(i, j, k) +=
                            b2[static_cast<std::size_t>(j) * nx + i] * dvol;
                }
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Regularized left-invariant derivatives on orientation scores
// ---------------------------------------------------------------------------

namespace detail {

/// Separable Gaussian smoothing/derivative core: theta derivative of order l
/// at scale s2, then spatial Gaussian scale s1 with monomial derivatives
/// dx^a dy^b for all a + b <= max_order.  Returns one field per (a, b).
template <typename T>
std::vector<Field3<T>> gaussian_monomials(const Field3<T>& u, real_t s1,
                                          real_t s2, int l, int max_order) {
    const GridSpec& spec = u.spec;
    const int nx = spec.nx, ny = spec.ny, nt = spec.ntheta;

    // theta part (periodic spectral)
    Field3<T> smoothed(spec);
    {
        Fft1D fft(nt);
        std::vector<complex_t> mult(nt);
        for (int m = 0; m < nt; ++m) {
            const real_t n = fft_freq(m, nt);
            complex_t w = std::exp(-s2 * n * n);
            for (int d = 0; d < l; ++d) w *= complex_t(0.0, n);
            mult[m] = w;
        }
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                complex_t* buf = fft.buffer();
                for (int k = 0; k < nt; ++k) buf[k] = u(i, j, k);
                fft.forward();
                for (int k = 0; k < nt; ++k) buf[k] *= mult[k];
                fft.inverse();
                for (int k = 0; k < nt; ++k) {
                    if constexpr (std::is_same_v<T, real_t>)
                        smoothed(i, j, k) = buf[k].real();
                    else
                        smoothed(i, j, k) = buf[k];
                }
            }
    }

    // spatial part
    std::vector<Field3<T>> out;
    for (int a = 0; a <= max_order; ++a)
        for (int b = 0; a + b <= max_order; ++b) out.emplace_back(spec);

    parallel_for(0, static_cast<std::size_t>(nt), [&](std::size_t k) {
        Fft2D fft(nx, ny);
        complex_t* buf = fft.buffer();
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                buf[static_cast<std::size_t>(j) * nx + i] =
                    smoothed(i, j, static_cast<int>(k));
        fft.forward();
        std::vector<complex_t> base(buf, buf + static_cast<std::size_t>(nx) * ny);
        int slot = 0;
        for (int a = 0; a <= max_order; ++a)
            for (int b = 0; a + b <= max_order; ++b) {
                for (int j = 0; j < ny; ++j)
                    for (int i = 0; i < nx; ++i) {
                        const real_t wx = omega_of(i, nx, spec.spacing);
                        const real_t wy = omega_of(j, ny, spec.spacing);
                        complex_t w = std::exp(-s1 * (wx * wx + wy * wy));
                        for (int d = 0; d < a; ++d) w *= complex_t(0.0, wx);
                        for (int d = 0; d < b; ++d) w *= complex_t(0.0, wy);
                        buf[static_cast<std::size_t>(j) * nx + i] =
                            base[static_cast<std::size_t>(j) * nx + i] * w;
                    }
                fft.inverse();
                Field3<T>& dst = out[slot++];
                for (int j = 0; j < ny; ++j)
                    for (int i = 0; i < nx; ++i) {
                        if constexpr (std::is_same_v<T, real_t>)
                            dst(i, j, static_cast<int>(k)) =
                                buf[static_cast<std::size_t>(j) * nx + i].real();
                        else
                            dst(i, j, static_cast<int>(k)) =
                                buf[static_cast<std::size_t>(j) * nx + i];
                    }
                for (std::size_t t = 0; t < base.size(); ++t) buf[t] = base[t];
            }
    });
    return out;
}

inline int monomial_slot(int a, int b, int max_order) {
    // slots enumerate a = 0..max, b = 0..max-a
    int slot = 0;
    for (int aa = 0; aa < a; ++aa) slot += max_order - aa + 1;
    return slot + b;
}

}  // namespace detail

/// Regularized left-invariant derivative
///     (d/dxi)^m (d/deta)^n (d/dtheta)^l  applied to the smoothed score
/// (isotropic spatial scale s1, angular scale s2).  The theta derivative acts
/// first, then the spatial combination per theta slice.
template <typename T>
Field3<T> gaussian_derivative_os(const Field3<T>& u, real_t s1, real_t s2,
                                 int m, int n, int l) {
    if (m < 0 || n < 0 || l < 0 || m > 4 || n > 4 || l > 4)
        throw numeric_error("gaussian_derivative_os: orders must be in 0..4");
    const int mo = m + n;
    auto mono = detail::gaussian_monomials(u, s1, s2, l, mo);
    const GridSpec& spec = u.spec;
    Field3<T> out(spec);
    parallel_for(0, static_cast<std::size_t>(spec.ntheta), [&](std::size_t k) {
        const real_t th = spec.theta_of(static_cast<int>(k));
        const real_t c = std::cos(th), s = std::sin(th);
        // expand (c dx + s dy)^m (-s dx + c dy)^n into monomial coefficients
        std::vector<real_t> coef(static_cast<std::size_t>(mo + 1) * (mo + 1), 0.0);
        coef[0] = 1.0;
        auto apply = [&](real_t fx, real_t fy) {
            std::vector<real_t> next(coef.size(), 0.0);
            for (int a = 0; a <= mo; ++a)
                for (int b = 0; a + b <= mo; ++b) {
                    const real_t v = coef[static_cast<std::size_t>(a) * (mo + 1) + b];
                    if (v == 0.0) continue;
                    if (a + 1 <= mo)
                        next[static_cast<std::size_t>(a + 1) * (mo + 1) + b] += fx * v;
                    if (a + b + 1 <= mo)
                        next[static_cast<std::size_t>(a) * (mo + 1) + b + 1] += fy * v;
                }
            coef.swap(next);
        };
        for (int d = 0; d < m; ++d) apply(c, s);
        for (int d = 0; d < n; ++d) apply(-s, c);
        for (int a = 0; a <= mo; ++a)
            for (int b = 0; a + b <= mo; ++b) {
                const real_t v = coef[static_cast<std::size_t>(a) * (mo + 1) + b];
                if (v == 0.0) continue;
                const Field3<T>& src = mono[detail::monomial_slot(a, b, mo)];
                for (int j = 0; j < spec.ny; ++j)
                    for (int i = 0; i < spec.nx; ++i)
                        out(i, j, static_cast<int>(k)) +=
                            v * src(i, j, static_cast<int>(k));
            }
    });
    return out;
}

}  // namespace se2lie
