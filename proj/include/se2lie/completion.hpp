#pragma once

// Collision distributions of a forward- and a backward-evolved field, their
// closed-form analogue on the contracted group, the polynomial modes of that
// analogue, and mode extraction through zero crossings of two left-invariant
// derivatives.

#include "se2lie/core.hpp"
#include "se2lie/kernels.hpp"

namespace se2lie {

/// Sign-preserving power of a real field.
inline ScalarField3 signed_power(const ScalarField3& u, real_t p) {
    ScalarField3 out(u.spec);
    for (std::size_t i = 0; i < u.data.size(); ++i) {
        const real_t v = u.data[i];
        out.data[i] = v >= 0 ? std::pow(v, p) : -std::pow(-v, p);
    }
    return out;
}

/// Collision distribution alpha^{1/p} ((K_fwd * U^p) (K_bwd * V^p))^{1/(2p)}
/// with sign-preserving powers.  K_bwd is the kernel of the adjoint
/// (time-reversed) evolution; for convection-free processes K_bwd = K_fwd.
inline ScalarField3 completion_field(const ScalarField3& source,
                                     const ScalarField3& sink,
                                     const KernelGrid& fwd,
                                     const KernelGrid& bwd, real_t alpha,
                                     real_t p_power) {
    if (p_power <= 0)
        throw numeric_error("completion_field: p must be positive");
    const ScalarField3 wf = se2_convolve(fwd, signed_power(source, p_power));
    const ScalarField3 wb = se2_convolve(bwd, signed_power(sink, p_power));
    ScalarField3 out(source.spec);
    const real_t root = 1.0 / (2.0 * p_power);
    const real_t front = std::pow(alpha, 1.0 / p_power);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const real_t prod = wf.data[i] * wb.data[i];
        out.data[i] = front * (prod >= 0 ? std::pow(prod, root)
                                         : -std::pow(-prod, root));
    }
    return out;
}

/// Field translated by a group element: out(g) = f(g1^{-1} g), evaluated by
/// the interpolating spline of f (zero outside the spatial box).
inline ScalarField3 translate_field(const ScalarField3& f, const Se2Element& g1) {
    Spline3 spline(f, Boundary::Zero);
    ScalarField3 out(f.spec);
    const Se2Element inv = inverse(g1);
    for (int k = 0; k < f.spec.ntheta; ++k)
        for (int j = 0; j < f.spec.ny; ++j)
            for (int i = 0; i < f.spec.nx; ++i) {
                const Se2Element h = compose(
                    inv, Se2Element(f.spec.x_of(i), f.spec.y_of(j),
                                    f.spec.theta_of(k)));
                out(i, j, k) = spline(h.x, h.y, h.theta);
            }
    return out;
}

// ---------------------------------------------------------------------------
// Closed-form collision field on the contracted group
// ---------------------------------------------------------------------------

/// Product of a forward kernel from (0, 0, theta0) and a backward kernel
/// into (x1, y1, theta1), both in the moving-frame (shear) translation of the
/// contracted group.  Vanishes outside 0 < x < x1.
struct HeisCompletionField {
    real_t theta0{0};
    real_t x1{0}, y1{0}, theta1{0};
    DiffusionParams params;   // d11, alpha, and the two curvature drifts
    real_t kappa1{0};

    real_t operator()(real_t x, real_t y, real_t theta) const {
        DiffusionParams fwd = params;
        const real_t f =
            direction_resolvent_approx(x, y - theta0 * x, theta - theta0, fwd);
        DiffusionParams bwd = params;
        bwd.kappa0 = kappa1;
        const real_t b = direction_resolvent_approx(
            x1 - x, y - y1 - theta1 * (x1 - x), -theta - theta1, bwd);
        return f * b;
    }
};

// ---------------------------------------------------------------------------
// Polynomial modes
// ---------------------------------------------------------------------------

/// Optimal connecting polynomials of the contracted-group collision field:
/// y(x) quintic, theta(x) quartic over [0, x1], depending on the drift
/// difference kappa0 - kappa1 only.  Boundary data is matched exactly:
/// y(0) = 0, y(x1) = y1, theta(0) = theta0, theta(x1) = -theta1.
struct ModePolynomials {
    real_t x1{0}, y1{0};
    real_t theta0{0}, theta1{0};
    real_t kappa0{0}, kappa1{0};
    std::array<real_t, 6> y_coeff{};      // y(x) = sum y_coeff[i] x^i
    std::array<real_t, 5> theta_coeff{};  // theta(x) = sum theta_coeff[i] x^i

    real_t y(real_t x) const {
        real_t acc = 0;
        for (int i = 5; i >= 0; --i) acc = acc * x + y_coeff[i];
        return acc;
    }
    real_t theta(real_t x) const {
        real_t acc = 0;
        for (int i = 4; i >= 0; --i) acc = acc * x + theta_coeff[i];
        return acc;
    }
    real_t y_deriv(real_t x, int order) const {
        real_t acc = 0;
        for (int i = 5; i >= order; --i) {
            real_t c = y_coeff[i];
            for (int d = 0; d < order; ++d) c *= (i - d);
            acc = acc * x + c;
        }
        return acc;
    }
};

inline ModePolynomials mode_polynomials(real_t x1, real_t y1, real_t theta0,
                                        real_t theta1, real_t kappa0,
                                        real_t kappa1) {
    if (x1 <= 0) throw numeric_error("mode_polynomials: x1 must be positive");
    ModePolynomials m;
    m.x1 = x1;
    m.y1 = y1;
    m.theta0 = theta0;
    m.theta1 = theta1;
    m.kappa0 = kappa0;
    m.kappa1 = kappa1;
    const real_t dk = (kappa0 - kappa1) / (x1 * x1 * x1);
    const real_t a3 = (-2 * y1 + x1 * (theta0 - theta1)) / (x1 * x1 * x1);
    const real_t a2 = (3 * y1 + x1 * (theta1 - 2 * theta0)) / (x1 * x1);
    // cubic part x theta0 + a2 x^2 + a3 x^3 plus the quintic correction
    // dk (x - x1)^2 (x1/2 - x) x^2
    //   = dk (x1^3/2 x^2 - 2 x1^2 x^3 + 5/2 x1 x^4 - x^5)
    m.y_coeff = {0.0,
                 theta0,
                 a2 + dk * 0.5 * x1 * x1 * x1,
                 a3 - dk * 2.0 * x1 * x1,
                 dk * 2.5 * x1,
                 -dk};
    // theta(x) = theta0 + 2 x (3 y1 + x1 (theta1 - 2 theta0)) / x1^2
    //            - 3 x^2 (2 y1 + x1 (theta1 - theta0)) / x1^3
    //            + dk x (x - x1)(-3 x^2 + 3 x1 x - x1^2)
    const real_t t1 = 2.0 * (3 * y1 + x1 * (theta1 - 2 * theta0)) / (x1 * x1);
    const real_t t2 = -3.0 * (2 * y1 + x1 * (theta1 - theta0)) / (x1 * x1 * x1);
    // expand x (x - x1)(-3x^2 + 3 x1 x - x1^2)
    //   = -3 x^4 + 6 x1 x^3 - 4 x1^2 x^2 + x1^3 x
    m.theta_coeff = {theta0,
                     t1 + dk * x1 * x1 * x1,
                     t2 - dk * 4.0 * x1 * x1,
                     dk * 6.0 * x1,
                     -dk * 3.0};
    return m;
}

// ---------------------------------------------------------------------------
// Mode extraction by zero crossings
// ---------------------------------------------------------------------------

enum class DerivativePair {
    ThetaEta,  // zero crossings of d/dtheta and d/deta (group convention)
    ThetaY     // zero crossings of d/dtheta and d/dy (contracted convention)
};

struct ModeSample {
    real_t x{0};
    real_t y{0};
    real_t theta{0};
    bool converged{false};
};

struct ModeCurve {
    std::vector<ModeSample> samples;
};

/// Trace the curve where both selected derivatives of the field vanish: per
/// x-slab a 2D Newton iteration in (y, theta) seeded at the slab argmax,
/// step-halved when the residual grows.  Slabs whose maximum is below
/// 1e-12 of the global maximum are skipped (tails carry no crossing).
inline ModeCurve extract_mode_curve(const ScalarField3& field,
                                    DerivativePair pair = DerivativePair::ThetaEta) {
    const GridSpec& spec = field.spec;
    Spline3 spline(field, Boundary::Reflect);
    real_t global_max = 0;
    for (real_t v : field.data) global_max = std::max(global_max, v);

    ModeCurve out;
    const real_t hy = 0.25 * spec.spacing;
    const real_t ht = 0.25 * spec.dtheta();
    for (int i = 1; i + 1 < spec.nx; ++i) {
        const real_t x = spec.x_of(i);
        // slab seed
        real_t best = -1;
        int bj = 0, bk = 0;
        for (int k = 0; k < spec.ntheta; ++k)
            for (int j = 0; j < spec.ny; ++j)
                if (field(i, j, k) > best) {
                    best = field(i, j, k);
                    bj = j;
                    bk = k;
                }
        if (best < 1e-12 * global_max) continue;

        auto fvec = [&](real_t y, real_t th) {
            const real_t dth =
                (spline(x, y, th + ht) - spline(x, y, th - ht)) / (2 * ht);
            real_t second;
            if (pair == DerivativePair::ThetaY) {
                second = (spline(x, y + hy, th) - spline(x, y - hy, th)) / (2 * hy);
            } else {
                const real_t dy =
                    (spline(x, y + hy, th) - spline(x, y - hy, th)) / (2 * hy);
                const real_t dx =
                    (spline(x + hy, y, th) - spline(x - hy, y, th)) / (2 * hy);
                second = -std::sin(th) * dx + std::cos(th) * dy;
            }
            return std::array<real_t, 2>{dth, second};
        };

        real_t y = spec.y_of(bj);
        real_t th = wrap_angle_signed(spec.theta_of(bk));
        auto f = fvec(y, th);
        real_t fn = std::hypot(f[0], f[1]);
        bool ok = false;
        for (int iter = 0; iter < 60; ++iter) {
            // Jacobian by central differences
            const real_t dy = 0.5 * spec.spacing, dt = 0.5 * spec.dtheta();
            const auto fy1 = fvec(y + dy, th), fy0 = fvec(y - dy, th);
            const auto ft1 = fvec(y, th + dt), ft0 = fvec(y, th - dt);
            const real_t j00 = (fy1[0] - fy0[0]) / (2 * dy);
            const real_t j01 = (ft1[0] - ft0[0]) / (2 * dt);
            const real_t j10 = (fy1[1] - fy0[1]) / (2 * dy);
            const real_t j11 = (ft1[1] - ft0[1]) / (2 * dt);
            const real_t det = j00 * j11 - j01 * j10;
            if (std::abs(det) < 1e-300) break;
            real_t sy = (-f[0] * j11 + f[1] * j01) / det;
            real_t st = (f[0] * j10 - f[1] * j00) / det;
            real_t damp = 1.0;
            bool improved = false;
            for (int half = 0; half < 12; ++half) {
                const real_t ny = y + damp * sy;
                const real_t nth = th + damp * st;
                const auto nf = fvec(ny, nth);
                const real_t nn = std::hypot(nf[0], nf[1]);
                if (nn < fn) {
                    y = ny;
                    th = nth;
                    f = nf;
                    fn = nn;
                    improved = true;
                    break;
                }
                damp *= 0.5;
            }
            if (!improved) break;
            if (fn < 1e-9 * std::max(1e-300, global_max)) {
                ok = true;
                break;
            }
        }
        // accept near-critical points inside the box
        const bool inside = std::abs(y) < 0.5 * spec.ny * spec.spacing;
        out.samples.push_back({x, y, th, ok && inside});
    }
    return out;
}

}  // namespace se2lie
