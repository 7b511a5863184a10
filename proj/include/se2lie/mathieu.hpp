#pragma once

// Mathieu characteristic values a_n(q) / b_n(q), the periodic functions
// ce_n / se_n, and Floquet solutions me_{+-nu}(z, q) of
//     y''(z) + (a - 2 q cos 2z) y(z) = 0.
//
// Characteristic values come from the four symmetric tridiagonal Fourier
// recurrence blocks, truncation grown until two successive sizes agree.
// Floquet exponents come from the monodromy of the ODE over one period,
// polished on the continued-fraction characteristic equation; the Fourier
// coefficients of me_nu are the minimal solutions of the recurrence obtained
// by downward/upward continued fractions.

#include <Eigen/Dense>

#include <algorithm>
#include <vector>

#include "se2lie/common.hpp"

namespace se2lie {

namespace detail {

enum class MathieuBlock { CosEven, CosOdd, SinOdd, SinEven };

inline void fill_block(MathieuBlock b, real_t q, int size, Eigen::MatrixXd& m) {
    m.setZero(size, size);
    switch (b) {
        case MathieuBlock::CosEven:
            m(0, 0) = 0.0;
            if (size > 1) m(0, 1) = m(1, 0) = std::sqrt(2.0) * q;
            for (int k = 1; k < size; ++k) {
                m(k, k) = 4.0 * k * k;
                if (k + 1 < size && k >= 1) m(k, k + 1) = m(k + 1, k) = q;
            }
            break;
        case MathieuBlock::CosOdd:
            for (int k = 0; k < size; ++k) {
                m(k, k) = sqr(2.0 * k + 1.0);
                if (k + 1 < size) m(k, k + 1) = m(k + 1, k) = q;
            }
            m(0, 0) += q;
            break;
        case MathieuBlock::SinOdd:
            for (int k = 0; k < size; ++k) {
                m(k, k) = sqr(2.0 * k + 1.0);
                if (k + 1 < size) m(k, k + 1) = m(k + 1, k) = q;
            }
            m(0, 0) -= q;
            break;
        case MathieuBlock::SinEven:
            for (int k = 0; k < size; ++k) {
                m(k, k) = sqr(2.0 * k + 2.0);
                if (k + 1 < size) m(k, k + 1) = m(k + 1, k) = q;
            }
            break;
    }
}

/// Eigenvalue `index` (ascending) of a block, with eigenvector on request.
inline real_t block_eigen(MathieuBlock b, real_t q, int index,
                          std::vector<real_t>* vec) {
    if (std::abs(q) >= 1e4)
        throw numeric_error("mathieu: |q| outside validated range");
    int size = std::max(16, index + 2 * static_cast<int>(std::ceil(std::sqrt(std::abs(q)))) + 8);
    real_t prev = 0;
    bool have_prev = false;
    for (int iter = 0; iter < 8; ++iter) {
        Eigen::MatrixXd m;
        fill_block(b, q, size, m);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
        const real_t val = es.eigenvalues()(index);
        if (have_prev && std::abs(val - prev) < 1e-12 * std::max(1.0, std::abs(val))) {
            if (vec) {
                Eigen::VectorXd v = es.eigenvectors().col(index);
                vec->assign(v.data(), v.data() + v.size());
            }
            return val;
        }
        prev = val;
        have_prev = true;
        size *= 2;
    }
    throw numeric_error("mathieu: characteristic value did not converge");
}

}  // namespace detail

/// Characteristic value a_n(q) of ce_n (n >= 0).
inline real_t mathieu_a(int n, real_t q) {
    using detail::MathieuBlock;
    if (n < 0) throw numeric_error("mathieu_a: n must be >= 0");
    return n % 2 == 0
               ? detail::block_eigen(MathieuBlock::CosEven, q, n / 2, nullptr)
               : detail::block_eigen(MathieuBlock::CosOdd, q, (n - 1) / 2, nullptr);
}

/// Characteristic value b_n(q) of se_n (n >= 1).
inline real_t mathieu_b(int n, real_t q) {
    using detail::MathieuBlock;
    if (n < 1) throw numeric_error("mathieu_b: n must be >= 1");
    return n % 2 == 1
               ? detail::block_eigen(MathieuBlock::SinOdd, q, (n - 1) / 2, nullptr)
               : detail::block_eigen(MathieuBlock::SinEven, q, n / 2 - 1, nullptr);
}

/// Spec surface: characteristic value of order n (cosine-elliptic family).
inline real_t char_value(int n, real_t q) { return mathieu_a(n, q); }

/// Periodic Mathieu function of integer order, normalized so that
/// int_0^{2pi} f^2 dz = pi (so ce_0(z, 0) = 1/sqrt(2), ce_n(z,0) = cos nz).
class MathieuPeriodic {
public:
    enum class Kind { Ce, Se };

    MathieuPeriodic(Kind kind, int n, real_t q) : kind_(kind), n_(n) {
        using detail::MathieuBlock;
        std::vector<real_t> v;
        if (kind == Kind::Ce) {
            if (n % 2 == 0) {
                a_ = detail::block_eigen(MathieuBlock::CosEven, q, n / 2, &v);
                // v[0] stores sqrt(2) A_0
                coeff_.resize(v.size());
                coeff_[0] = v[0] / std::sqrt(2.0);
                for (std::size_t k = 1; k < v.size(); ++k) coeff_[k] = v[k];
                harmonics_ = 2;
                first_ = 0;
            } else {
                a_ = detail::block_eigen(MathieuBlock::CosOdd, q, (n - 1) / 2, &v);
                coeff_ = v;
                harmonics_ = 2;
                first_ = 1;
            }
        } else {
            if (n % 2 == 1) {
                a_ = detail::block_eigen(MathieuBlock::SinOdd, q, (n - 1) / 2, &v);
                coeff_ = v;
                harmonics_ = 2;
                first_ = 1;
            } else {
                a_ = detail::block_eigen(MathieuBlock::SinEven, q, n / 2 - 1, &v);
                coeff_ = v;
                harmonics_ = 2;
                first_ = 2;
            }
        }
        // sign: the coefficient of the n-th harmonic is positive
        const int idx = (n - first_) / 2;
        if (idx >= 0 && idx < static_cast<int>(coeff_.size()) && coeff_[idx] < 0)
            for (auto& c : coeff_) c = -c;
    }

    real_t char_val() const { return a_; }

    real_t operator()(real_t z) const {
        real_t acc = 0;
        for (std::size_t k = 0; k < coeff_.size(); ++k) {
            const real_t h = first_ + harmonics_ * static_cast<real_t>(k);
            acc += coeff_[k] * (kind_ == Kind::Ce ? std::cos(h * z) : std::sin(h * z));
        }
        return acc;
    }

    real_t derivative(real_t z) const {
        real_t acc = 0;
        for (std::size_t k = 0; k < coeff_.size(); ++k) {
            const real_t h = first_ + harmonics_ * static_cast<real_t>(k);
            acc += coeff_[k] * h *
                   (kind_ == Kind::Ce ? -std::sin(h * z) : std::cos(h * z));
        }
        return acc;
    }

    const std::vector<real_t>& coefficients() const { return coeff_; }

private:
    Kind kind_;
    int n_;
    real_t a_{0};
    std::vector<real_t> coeff_;
    int harmonics_{2};
    int first_{0};
};

/// All ce_n (n <= nmax) and se_n (1 <= n <= nmax) at one q, sharing one
/// eigensolve per recurrence block.
struct PeriodicBasis {
    std::vector<MathieuPeriodic> ce;  // ce[n]
    std::vector<MathieuPeriodic> se;  // se[n-1]

    static PeriodicBasis build(real_t q, int nmax) {
        PeriodicBasis b;
        b.ce.reserve(nmax + 1);
        b.se.reserve(nmax);
        for (int n = 0; n <= nmax; ++n)
            b.ce.emplace_back(MathieuPeriodic::Kind::Ce, n, q);
        for (int n = 1; n <= nmax; ++n)
            b.se.emplace_back(MathieuPeriodic::Kind::Se, n, q);
        return b;
    }
};

/// Floquet exponent nu(a, q) with Im(nu) >= 0, from the monodromy of the
/// Mathieu equation over one period pi.
inline complex_t floquet_exponent(real_t a, real_t q) {
    if (q == 0.0) {
        complex_t nu = std::sqrt(complex_t(a, 0.0));
        if (nu.imag() < 0) nu = -nu;
        return nu;
    }
    // integrate y'' = -(a - 2 q cos 2z) y, frames (1,0) and (0,1)
    const real_t scale = std::sqrt(std::abs(a) + 2.0 * std::abs(q) + 1.0);
    int steps = std::max(2048, 32 * static_cast<int>(std::ceil(kPi * scale)));
    steps = std::min(steps, 400000);
    const real_t h = kPi / steps;
    real_t y1 = 1.0, p1 = 0.0;  // y(0)=1, y'(0)=0
    auto acc = [&](real_t z, real_t y) { return -(a - 2.0 * q * std::cos(2.0 * z)) * y; };
    for (int i = 0; i < steps; ++i) {
        const real_t z = i * h;
        const real_t k1y = p1, k1p = acc(z, y1);
        const real_t k2y = p1 + 0.5 * h * k1p, k2p = acc(z + 0.5 * h, y1 + 0.5 * h * k1y);
        const real_t k3y = p1 + 0.5 * h * k2p, k3p = acc(z + 0.5 * h, y1 + 0.5 * h * k2y);
        const real_t k4y = p1 + h * k3p, k4p = acc(z + h, y1 + h * k3y);
        y1 += h * (k1y + 2 * k2y + 2 * k3y + k4y) / 6.0;
        p1 += h * (k1p + 2 * k2p + 2 * k3p + k4p) / 6.0;
    }
    // half monodromy trace; for this equation y1(pi) = y2'(pi)
    complex_t nu = std::acos(complex_t(y1, 0.0)) / kPi;
    if (nu.imag() < 0) nu = -nu;
    return nu;
}

/// Non-periodic Floquet solution me_nu(z, q) = sum_k c_{2k} e^{i (nu + 2k) z}
/// together with its partner me_{-nu}(z) = me_nu(-z).  Coefficients are
/// normalized to sum |c|^2 = 1 with the dominant coefficient real positive.
class FloquetSolution {
public:
    FloquetSolution(real_t a, real_t q) : a_(a), q_(q) {
        nu_ = floquet_exponent(a, q);
        if (q == 0.0) {
            kmin_ = 0;
            c_.assign(1, complex_t(1.0, 0.0));
            return;
        }
        int K = std::max(16, 2 * static_cast<int>(std::ceil(std::sqrt(std::abs(q)))) + 8);
        for (int iter = 0; iter < 6; ++iter) {
            if (build(K)) {
                polish_nu(K);
                build(K);
                normalize();
                return;
            }
            K *= 2;
        }
        throw numeric_error("mathieu: Floquet series did not converge");
    }

    complex_t nu() const { return nu_; }
    real_t char_a() const { return a_; }
    real_t q() const { return q_; }
    const std::vector<complex_t>& coefficients() const { return c_; }
    int kmin() const { return kmin_; }

    complex_t me(real_t z) const { return series(z, +1, 0); }
    complex_t dme(real_t z) const { return series(z, +1, 1); }
    complex_t me_minus(real_t z) const { return series(z, -1, 0); }
    complex_t dme_minus(real_t z) const { return series(z, -1, 1); }

    complex_t ce(real_t z) const { return 0.5 * (me(z) + me_minus(z)); }
    complex_t se(real_t z) const {
        return (me(z) - me_minus(z)) / complex_t(0.0, 2.0);
    }
    complex_t dce(real_t z) const { return 0.5 * (dme(z) + dme_minus(z)); }
    complex_t dse(real_t z) const {
        return (dme(z) - dme_minus(z)) / complex_t(0.0, 2.0);
    }

    /// Wronskian ce_nu(0) se_nu'(0); throws when the pair is degenerate.
    complex_t wronskian() const {
        complex_t s0 = 0, s1 = 0;
        for (std::size_t k = 0; k < c_.size(); ++k) {
            const complex_t f = nu_ + 2.0 * (kmin_ + static_cast<real_t>(k));
            s0 += c_[k];
            s1 += f * c_[k];
        }
        const complex_t w = s0 * s1;
        if (std::abs(w) < 1e-14)
            throw numeric_error("mathieu: degenerate Floquet pair (wronskian ~ 0)");
        return w;
    }

    /// Wronskian me_nu me_{-nu}' - me_{-nu} me_nu' (what the kernel formulas
    /// actually divide by): equals -2i ce(0) se'(0).
    complex_t wronskian_me() const { return complex_t(0.0, -2.0) * wronskian(); }

    /// Max residual of the three-term recurrence over interior indices.
    real_t recurrence_residual() const {
        real_t worst = 0;
        for (std::size_t k = 1; k + 1 < c_.size(); ++k) {
            const complex_t f = nu_ + 2.0 * (kmin_ + static_cast<real_t>(k));
            const complex_t r = (a_ - f * f) * c_[k] - q_ * (c_[k - 1] + c_[k + 1]);
            worst = std::max(worst, std::abs(r));
        }
        return worst;
    }

private:
    bool build(int K) {
        kmin_ = -K;
        c_.assign(2 * K + 1, complex_t(0));
        c_[K] = 1.0;
        // downward continued fraction for k > 0
        std::vector<complex_t> G(K + 2, complex_t(0));
        for (int k = K; k >= 1; --k) {
            const complex_t f = nu_ + 2.0 * static_cast<real_t>(k);
            G[k] = q_ / ((a_ - f * f) - q_ * G[k + 1]);
        }
        for (int k = 1; k <= K; ++k) c_[K + k] = c_[K + k - 1] * G[k];
        // upward continued fraction for k < 0
        std::vector<complex_t> H(K + 2, complex_t(0));
        for (int k = K; k >= 1; --k) {
            const complex_t f = nu_ - 2.0 * static_cast<real_t>(k);
            H[k] = q_ / ((a_ - f * f) - q_ * H[k + 1]);
        }
        for (int k = 1; k <= K; ++k) c_[K - k] = c_[K - k + 1] * H[k];
        return std::abs(c_.front()) < 1e-14 && std::abs(c_.back()) < 1e-14;
    }

    /// Secant polish of nu on the central characteristic equation
    /// (a - nu^2) - q (G_1 + H_1) = 0 computed from fresh continued fractions.
    void polish_nu(int K) {
        auto fval = [&](complex_t nu) {
            complex_t G = 0, H = 0;
            for (int k = K; k >= 1; --k) {
                const complex_t fp = nu + 2.0 * static_cast<real_t>(k);
                G = q_ / ((a_ - fp * fp) - q_ * G);
                const complex_t fm = nu - 2.0 * static_cast<real_t>(k);
                H = q_ / ((a_ - fm * fm) - q_ * H);
            }
            return (a_ - nu * nu) - q_ * (G + H);
        };
        complex_t x0 = nu_;
        complex_t f0 = fval(x0);
        complex_t x1 = nu_ + complex_t(1e-7, 1e-7);
        complex_t f1 = fval(x1);
        for (int i = 0; i < 12 && std::abs(f1) > 1e-15; ++i) {
            if (f1 == f0) break;
            const complex_t x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
            x0 = x1; f0 = f1;
            x1 = x2; f1 = fval(x1);
            if (std::abs(x1 - x0) < 1e-16 * std::max(1.0, std::abs(x1))) break;
        }
        if (std::abs(f1) < std::abs(fval(nu_))) {
            nu_ = x1;
            if (nu_.imag() < 0) nu_ = -nu_;
        }
    }

    void normalize() {
        real_t n2 = 0;
        std::size_t dom = 0;
        real_t best = -1;
        for (std::size_t k = 0; k < c_.size(); ++k) {
            const real_t m = std::abs(c_[k]);
            n2 += m * m;
            if (m > best) { best = m; dom = k; }
        }
        const complex_t phase = c_[dom] / std::abs(c_[dom]);
        const real_t inv = 1.0 / std::sqrt(n2);
        for (auto& v : c_) v *= inv / phase;
    }

    complex_t series(real_t z, int sign, int order) const {
        complex_t acc = 0;
        for (std::size_t k = 0; k < c_.size(); ++k) {
            const complex_t f = nu_ + 2.0 * (kmin_ + static_cast<real_t>(k));
            const complex_t phase =
                std::exp(complex_t(0.0, 1.0) * f * (sign * z));
            complex_t term = c_[k] * phase;
            if (order == 1) term *= complex_t(0.0, 1.0) * f * static_cast<real_t>(sign);
            acc += term;
        }
        return acc;
    }

    real_t a_{0};
    real_t q_{0};
    complex_t nu_{0};
    int kmin_{0};
    std::vector<complex_t> c_;
};

}  // namespace se2lie
