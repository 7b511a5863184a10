#pragma once

// Thin FFTW wrappers.  Plans are created under a global mutex (FFTW planning
// is not thread-safe); each object owns its buffers so executes can run
// concurrently on distinct objects.

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <vector>

#include "se2lie/common.hpp"

namespace se2lie {

inline std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

/// Signed integer DFT frequency for bin i of an n-point transform.
inline int fft_freq(int i, int n) { return i <= n / 2 ? i : i - n; }

class Fft1D {
public:
    explicit Fft1D(int n) : n_(n), buf_(n) {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        auto* p = reinterpret_cast<fftw_complex*>(buf_.data());
        fwd_ = fftw_plan_dft_1d(n, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_1d(n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~Fft1D() {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }
    Fft1D(const Fft1D&) = delete;
    Fft1D& operator=(const Fft1D&) = delete;

    int size() const { return n_; }
    complex_t* buffer() { return buf_.data(); }

    void forward() { fftw_execute(fwd_); }
    void inverse() {
        fftw_execute(bwd_);
        const real_t s = 1.0 / n_;
        for (auto& v : buf_) v *= s;
    }

private:
    int n_;
    std::vector<complex_t> buf_;
    fftw_plan fwd_{nullptr};
    fftw_plan bwd_{nullptr};
};

class Fft2D {
public:
    Fft2D(int nx, int ny)
        : nx_(nx), ny_(ny), buf_(static_cast<std::size_t>(nx) * ny) {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        auto* p = reinterpret_cast<fftw_complex*>(buf_.data());
        // FFTW uses row-major (ny rows of nx), matching x-fastest storage.
        fwd_ = fftw_plan_dft_2d(ny, nx, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_2d(ny, nx, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~Fft2D() {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }
    Fft2D(const Fft2D&) = delete;
    Fft2D& operator=(const Fft2D&) = delete;

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    complex_t* buffer() { return buf_.data(); }

    void forward() { fftw_execute(fwd_); }
    void inverse() {
        fftw_execute(bwd_);
        const real_t s = 1.0 / (static_cast<real_t>(nx_) * ny_);
        for (auto& v : buf_) v *= s;
    }

    template <typename Src>
    void load(const Src* src) {
        for (std::size_t i = 0; i < buf_.size(); ++i) buf_[i] = src[i];
    }
    void store(complex_t* dst) const {
        for (std::size_t i = 0; i < buf_.size(); ++i) dst[i] = buf_[i];
    }
    void store_real(real_t* dst) const {
        for (std::size_t i = 0; i < buf_.size(); ++i) dst[i] = buf_[i].real();
    }

private:
    int nx_, ny_;
    std::vector<complex_t> buf_;
    fftw_plan fwd_{nullptr};
    fftw_plan bwd_{nullptr};
};

}  // namespace se2lie
