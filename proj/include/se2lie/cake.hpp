#pragma once

// Invertible orientation-score transform.  The wavelet spectra tile the
// frequency disk: per orientation j,
//     psi_hat_j(w) = sqrt( (n_theta / 2 pi) B^k(n_theta wrap(phi - theta_j) / 2 pi) M(rho) ),
// where B^k is the k-th order cardinal B-spline window and M the radial
// low-pass M(rho) = e^{-u} sum_{m<=q} u^m / m!, u = rho^2 / (2 sigma^2).
// The B-spline partition of unity then makes the stability factor
//     M_psi(w) = sum_j |psi_hat_j(w)|^2 dtheta = M(rho)
// flat (~1) on the pass band, and reconstruction with the 1/M_psi-corrected
// adjoint is exact there.  An optional spatial Gaussian window of scale
// s_spatial localizes the wavelets (applied after the frequency build).

#include "se2lie/fft.hpp"
#include "se2lie/grid.hpp"

namespace se2lie {

struct CakeParams {
    int k{2};            // B-spline order of the angular window
    int q_decay{4};      // order of the radial low-pass series
    real_t sigma{0};     // frequency decay scale (index units); 0 = nyquist/2
    real_t s_spatial{10};  // spatial Gaussian window scale (pixels^2); 0 = off
    int n_theta{64};
};

namespace detail {

/// Centered cardinal B-spline of order k (support (k+1)/2 each side).
inline real_t bspline_window(int k, real_t t) {
    if (k == 0) return (t >= -0.5 && t < 0.5) ? 1.0 : 0.0;
    const real_t half = 0.5 * (k + 1);
    if (t <= -half || t >= half) return 0.0;
    real_t acc = 0;
    real_t binom = 1.0;  // C(k+1, j)
    real_t fact = 1.0;
    for (int j = 2; j <= k; ++j) fact *= j;
    for (int j = 0; j <= k + 1; ++j) {
        const real_t u = t + half - j;
        if (u > 0) {
            real_t p = 1.0;
            for (int d = 0; d < k; ++d) p *= u;
            acc += (j % 2 == 0 ? 1.0 : -1.0) * binom * p;
        }
        binom = binom * (k + 1 - j) / (j + 1);
    }
    return acc / fact;
}

inline real_t radial_lowpass(real_t rho, real_t sigma, int q) {
    const real_t u = rho * rho / (2.0 * sigma * sigma);
    real_t term = 1.0, sum = 1.0;
    for (int m = 1; m <= q; ++m) {
        term *= u / m;
        sum += term;
    }
    return std::exp(-u) * sum;
}

}  // namespace detail

/// Frequency-domain wavelet stack; one complex spectrum per orientation.
struct CakeWavelet {
    int nx{0};
    int ny{0};
    CakeParams params;
    std::vector<std::vector<complex_t>> psi_hat;  // [orientation][ny*nx]
    std::vector<real_t> mpsi;                     // stability factor, ny*nx

    real_t nyquist() const { return 0.5 * std::min(nx, ny); }
};

inline std::vector<real_t> mpsi_of(const CakeWavelet& w) { return w.mpsi; }

/// Build the wavelet stack for an nx x ny image grid.
inline CakeWavelet build_cake_wavelet(int nx, int ny, const CakeParams& params) {
    if (params.n_theta < 4)
        throw numeric_error("build_cake_wavelet: need n_theta >= 4");
    if (params.k < 0 || params.q_decay < 1)
        throw numeric_error("build_cake_wavelet: need k >= 0 and q_decay >= 1");
    CakeWavelet w;
    w.nx = nx;
    w.ny = ny;
    w.params = params;
    const real_t nyq = 0.5 * std::min(nx, ny);
    real_t sigma = params.sigma > 0 ? params.sigma : 0.5 * nyq;
    if (sigma > 1.2 * nyq)
        throw numeric_error("build_cake_wavelet: grid too small for requested sigma");
    w.params.sigma = sigma;

    const int nt = params.n_theta;
    const real_t scale = nt / kTwoPi;
    w.psi_hat.assign(nt, std::vector<complex_t>(static_cast<std::size_t>(nx) * ny));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const real_t kx = fft_freq(i, nx);
            const real_t ky = fft_freq(j, ny);
            const real_t rho = std::hypot(kx, ky);
            const real_t m = detail::radial_lowpass(rho, sigma, params.q_decay);
            const std::size_t idx = static_cast<std::size_t>(j) * nx + i;
            if (rho == 0.0) {
                for (int t = 0; t < nt; ++t)
                    w.psi_hat[t][idx] = std::sqrt(m / kTwoPi);
                continue;
            }
            const real_t phi = std::atan2(ky, kx);
            for (int t = 0; t < nt; ++t) {
                // a wavelet oriented along theta_t responds to lines along
                // theta_t, whose spectrum lies perpendicular: centre the
                // angular window at phi = theta_t + pi/2
                const real_t arg = scale * wrap_angle_signed(
                                       phi - kTwoPi * t / nt - 0.5 * kPi);
                const real_t b = detail::bspline_window(params.k, arg);
                w.psi_hat[t][idx] = b > 0 ? std::sqrt(scale * b * m) : 0.0;
            }
        }

    // the Nyquist row/column of an even grid has no +/- frequency partner
    // (its polar angle is ambiguous), which breaks rotation covariance; drop
    // it before and after the spatial windowing
    auto drop_nyquist = [&]() {
        if (nx % 2 == 0)
            for (int t = 0; t < nt; ++t)
                for (int j = 0; j < ny; ++j)
                    w.psi_hat[t][static_cast<std::size_t>(j) * nx + nx / 2] = 0.0;
        if (ny % 2 == 0)
            for (int t = 0; t < nt; ++t)
                for (int i = 0; i < nx; ++i)
                    w.psi_hat[t][static_cast<std::size_t>(ny / 2) * nx + i] = 0.0;
    };
    drop_nyquist();

    if (params.s_spatial > 0) {
        // window each wavelet in space by exp(-|x|^2 / 4 s)
        Fft2D fft(nx, ny);
        std::vector<real_t> win(static_cast<std::size_t>(nx) * ny);
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                const real_t x = i - nx / 2, y = j - ny / 2;
                win[static_cast<std::size_t>(j) * nx + i] =
                    std::exp(-(x * x + y * y) / (4.0 * params.s_spatial));
            }
        for (int t = 0; t < nt; ++t) {
            fft.load(w.psi_hat[t].data());
            fft.inverse();
            complex_t* buf = fft.buffer();
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    // spatial index of the centered window for this sample
                    const int ic = (i + nx / 2) % nx;
                    const int jc = (j + ny / 2) % ny;
                    buf[static_cast<std::size_t>(j) * nx + i] *=
                        win[static_cast<std::size_t>(jc) * nx + ic];
                }
            fft.forward();
            fft.store(w.psi_hat[t].data());
        }
    }

    drop_nyquist();

    // tally the stability factor of the wavelets actually built
    w.mpsi.assign(static_cast<std::size_t>(nx) * ny, 0.0);
    for (int t = 0; t < nt; ++t)
        for (std::size_t idx = 0; idx < w.mpsi.size(); ++idx)
            w.mpsi[idx] += std::norm(w.psi_hat[t][idx]);
    const real_t dtheta = kTwoPi / nt;
    for (auto& v : w.mpsi) v *= dtheta;
    return w;
}

/// Forward transform: U(., theta_j) = F^{-1}[ conj(psi_hat_j) F f ].
inline ComplexField3 score_transform(const Image2D& f, const CakeWavelet& w) {
    if (f.nx != w.nx || f.ny != w.ny)
        throw numeric_error("score_transform: image and wavelet size mismatch");
    GridSpec spec{w.nx, w.ny, w.params.n_theta, f.spacing};
    ComplexField3 u(spec);
    Fft2D fft(w.nx, w.ny);
    fft.load(f.data.data());
    fft.forward();
    std::vector<complex_t> fhat(fft.buffer(),
                                fft.buffer() + static_cast<std::size_t>(w.nx) * w.ny);
    for (int t = 0; t < w.params.n_theta; ++t) {
        complex_t* buf = fft.buffer();
        for (std::size_t idx = 0; idx < fhat.size(); ++idx)
            buf[idx] = std::conj(w.psi_hat[t][idx]) * fhat[idx];
        fft.inverse();
        for (int j = 0; j < w.ny; ++j)
            for (int i = 0; i < w.nx; ++i)
                u(i, j, t) = buf[static_cast<std::size_t>(j) * w.nx + i];
    }
    return u;
}

/// Adjoint reconstruction with 1/M_psi correction on the pass band
/// (rho <= 0.9 nyquist and M_psi above threshold; outside, zero).
inline Image2D score_reconstruct(const ComplexField3& u, const CakeWavelet& w,
                                 bool mpsi_correction = true) {
    if (u.spec.nx != w.nx || u.spec.ny != w.ny ||
        u.spec.ntheta != w.params.n_theta)
        throw numeric_error("score_reconstruct: score and wavelet mismatch");
    const real_t pass = 0.9 * w.nyquist();
    if (mpsi_correction) {
        bool ok = false;
        for (std::size_t idx = 0; idx < w.mpsi.size(); ++idx)
            if (w.mpsi[idx] > 1e-6) ok = true;
        if (!ok)
            throw numeric_error("score_reconstruct: stability factor vanishes");
    }

    std::vector<complex_t> acc(static_cast<std::size_t>(w.nx) * w.ny,
                               complex_t(0));
    Fft2D fft(w.nx, w.ny);
    const real_t dtheta = kTwoPi / w.params.n_theta;
    for (int t = 0; t < w.params.n_theta; ++t) {
        complex_t* buf = fft.buffer();
        for (int j = 0; j < w.ny; ++j)
            for (int i = 0; i < w.nx; ++i)
                buf[static_cast<std::size_t>(j) * w.nx + i] = u(i, j, t);
        fft.forward();
        for (std::size_t idx = 0; idx < acc.size(); ++idx)
            acc[idx] += buf[idx] * w.psi_hat[t][idx] * dtheta;
    }
    for (int j = 0; j < w.ny; ++j)
        for (int i = 0; i < w.nx; ++i) {
            const real_t rho = std::hypot<real_t>(fft_freq(i, w.nx), fft_freq(j, w.ny));
            const std::size_t idx = static_cast<std::size_t>(j) * w.nx + i;
            if (rho > pass || (mpsi_correction && w.mpsi[idx] < 1e-6)) {
                acc[idx] = 0;
            } else if (mpsi_correction) {
                acc[idx] /= w.mpsi[idx];
            }
        }
    complex_t* buf = fft.buffer();
    for (std::size_t idx = 0; idx < acc.size(); ++idx) buf[idx] = acc[idx];
    fft.inverse();
    Image2D out(w.nx, w.ny, u.spec.spacing);
    for (std::size_t idx = 0; idx < out.data.size(); ++idx)
        out.data[idx] = fft.buffer()[idx].real();
    return out;
}

}  // namespace se2lie
