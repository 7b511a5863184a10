#pragma once

// Boundary-value curve solvers: elastica (curvature energy kappa^2 + eps)
// via RK4 integration and damped-Newton shooting, with the Jacobi-elliptic
// closed form of the curvature; and the curves minimizing
// int sqrt(kappa^2 + eps) ds, for which the momentum (co-adjoint orbit)
// reduction gives a closed form up to one quadrature.

#include <Eigen/Dense>

#include <functional>
#include <optional>

#include "se2lie/core.hpp"

namespace se2lie {

namespace detail {

/// Carlson symmetric integral R_F.
inline real_t carlson_rf(real_t x, real_t y, real_t z) {
    real_t dx, dy, dz;
    real_t a = 0;
    do {
        const real_t sx = std::sqrt(x), sy = std::sqrt(y), sz = std::sqrt(z);
        const real_t lam = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        a = (x + y + z) / 3.0;
        dx = 1.0 - x / a;
        dy = 1.0 - y / a;
        dz = 1.0 - z / a;
    } while (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) > 1e-12);
    const real_t e2 = dx * dy + dy * dz + dz * dx;
    const real_t e3 = dx * dy * dz;
    return (1.0 + (e2 * e2 / 24.0 - 0.1 * e3 - e2 / 10.0) + e3 / 14.0) /
           std::sqrt(a);
}

/// Complete elliptic integral K with parameter m = k^2.
inline real_t elliptic_k(real_t m) {
    if (m >= 1.0) throw numeric_error("elliptic_k: parameter must be < 1");
    return carlson_rf(0.0, 1.0 - m, 1.0);
}

/// Incomplete elliptic integral F(phi, m) for phi in [0, pi].
inline real_t elliptic_f(real_t phi, real_t m) {
    if (phi > 0.5 * kPi + 1e-15)
        return 2.0 * elliptic_k(m) - elliptic_f(kPi - phi, m);
    phi = std::min(phi, 0.5 * kPi);
    const real_t s = std::sin(phi), c = std::cos(phi);
    if (s == 0.0) return 0.0;
    return s * carlson_rf(c * c, 1.0 - m * s * s, 1.0);
}

/// Jacobi elliptic functions by the descending Landen chain.
inline void jacobi_sn_cn_dn(real_t u, real_t m, real_t& sn, real_t& cn,
                            real_t& dn) {
    if (m < 1e-15) {
        sn = std::sin(u);
        cn = std::cos(u);
        dn = 1.0;
        return;
    }
    real_t emc = 1.0 - m;
    if (emc == 0.0) {
        cn = dn = 1.0 / std::cosh(u);
        sn = std::tanh(u);
        return;
    }
    constexpr int kDepth = 16;
    real_t em[kDepth], en[kDepth];
    real_t a = 1.0, c = 0.0;
    dn = 1.0;
    int l = 0;
    for (int i = 0; i < kDepth - 1; ++i) {
        l = i;
        em[i] = a;
        emc = std::sqrt(emc);
        en[i] = emc;
        c = 0.5 * (a + emc);
        if (std::abs(a - emc) <= 1e-15 * a) break;
        emc *= a;
        a = c;
    }
    u *= c;
    sn = std::sin(u);
    cn = std::cos(u);
    if (sn != 0.0) {
        a = cn / sn;
        c *= a;
        for (int i = l; i >= 0; --i) {
            const real_t b = em[i];
            a *= c;
            c *= dn;
            dn = (en[i] + a) / (b + a);
            a = c / b;
        }
        a = 1.0 / std::sqrt(c * c + 1.0);
        sn = sn >= 0.0 ? a : -a;
        cn = c * sn;
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elastica
// ---------------------------------------------------------------------------

/// Clamped boundary data with the energy weight eps (1/length^2).
struct ElasticaProblem {
    Se2Element g0;
    Se2Element g1;
    real_t epsilon{0};
};

struct ShootingReport {
    bool converged{false};
    int iterations{0};
    real_t position_residual{0};
    real_t angle_residual{0};
    real_t kappa0{0};
    real_t kappa0_prime{0};
    real_t length{0};
};

/// Integrate the curvature flow 2 kappa'' + kappa^3 = eps kappa together with
/// the unit-speed frame, from the identity (theta(0) = 0).
inline CurveSE2 elastica_integrate(real_t eps, real_t kappa0, real_t kappa0p,
                                   real_t length, real_t h) {
    if (h <= 0 || length <= 0)
        throw numeric_error("elastica_integrate: need positive h and length");
    const int n = std::max(4, static_cast<int>(std::ceil(length / h)));
    const real_t dt = length / n;
    // state: x, y, theta, kappa, kappa'
    std::array<real_t, 5> st{0, 0, 0, kappa0, kappa0p};
    auto rhs = [eps](const std::array<real_t, 5>& v) {
        return std::array<real_t, 5>{std::cos(v[2]), std::sin(v[2]), v[3], v[4],
                                     0.5 * (eps * v[3] - v[3] * v[3] * v[3])};
    };
    CurveSE2 curve;
    curve.total_length = length;
    curve.samples.reserve(n + 1);
    curve.samples.push_back({0, 0, 0, 0, kappa0});
    for (int step = 0; step < n; ++step) {
        const auto k1 = rhs(st);
        std::array<real_t, 5> t2, t3, t4;
        for (int i = 0; i < 5; ++i) t2[i] = st[i] + 0.5 * dt * k1[i];
        const auto k2 = rhs(t2);
        for (int i = 0; i < 5; ++i) t3[i] = st[i] + 0.5 * dt * k2[i];
        const auto k3 = rhs(t3);
        for (int i = 0; i < 5; ++i) t4[i] = st[i] + dt * k3[i];
        const auto k4 = rhs(t4);
        for (int i = 0; i < 5; ++i)
            st[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        if (!std::isfinite(st[0]) || !std::isfinite(st[3]))
            throw numeric_error("elastica_integrate: blow-up at s = " +
                                std::to_string((step + 1) * dt));
        curve.samples.push_back({(step + 1) * dt, st[0], st[1], st[2], st[3]});
    }
    return curve;
}

/// First integral (2 kappa')^2 + kappa^4 - 2 eps kappa^2 of the curvature
/// flow; constant along solutions.
inline real_t elastica_first_integral(real_t eps, real_t kappa, real_t kappap) {
    return kappap * kappap + 0.25 * sqr(sqr(kappa)) - 0.5 * eps * sqr(kappa);
}

/// Closed-form curvature kappa(s) of the elastica through kappa(0) = kappa0,
/// kappa'(0) = kappa0p, in the real Jacobi forms.
inline real_t elastica_curvature_analytic(real_t eps, real_t kappa0,
                                          real_t kappa0p, real_t s) {
    const real_t c1 = elastica_first_integral(eps, kappa0, kappa0p);
    const real_t disc = eps * eps + 4.0 * c1;
    if (disc < 0)
        throw numeric_error("elastica_curvature_analytic: no real branch");
    const real_t gp = eps + std::sqrt(disc);
    const real_t gm = eps - std::sqrt(disc);

    if (std::abs(c1) < 1e-14 * std::max(1.0, eps * eps)) {
        // homoclinic branch kappa = sigma sqrt(2 eps) sech(sqrt(eps) s + d)
        if (std::abs(kappa0) < 1e-300) return 0.0;
        const real_t sg = kappa0 >= 0 ? 1.0 : -1.0;
        const real_t arg = std::sqrt(2.0 * eps) / std::abs(kappa0);
        real_t d = std::acosh(std::max(1.0, arg));
        if (sg * kappa0p > 0) d = -d;
        return sg * std::sqrt(2.0 * eps) / std::cosh(std::sqrt(eps) * s + d);
    }
    real_t sn, cn, dn;
    if (c1 < 0) {
        // non-inflectional: kappa = sigma sqrt(gp) dn(u, m), m = 1 - gm/gp
        const real_t m = 1.0 - gm / gp;
        const real_t sg = kappa0 >= 0 ? 1.0 : -1.0;
        const real_t d0 = std::clamp(std::abs(kappa0) / std::sqrt(gp), 0.0, 1.0);
        const real_t sphi =
            m > 0 ? std::sqrt(std::clamp((1.0 - d0 * d0) / m, 0.0, 1.0)) : 0.0;
        real_t u0 = detail::elliptic_f(std::asin(sphi), m);
        if (sg * kappa0p > 0) u0 = 2.0 * detail::elliptic_k(m) - u0;
        detail::jacobi_sn_cn_dn(u0 + 0.5 * std::sqrt(gp) * s, m, sn, cn, dn);
        return sg * std::sqrt(gp) * dn;
    }
    // inflectional: kappa = sqrt(gp) cn(u, m), m = gp / (gp - gm)
    const real_t m = gp / (gp - gm);
    const real_t cphi = std::clamp(kappa0 / std::sqrt(gp), -1.0, 1.0);
    real_t u0 = detail::elliptic_f(std::acos(cphi), m);
    if (kappa0p > 0) u0 = 4.0 * detail::elliptic_k(m) - u0;
    detail::jacobi_sn_cn_dn(u0 + 0.5 * std::sqrt(gp - gm) * s, m, sn, cn, dn);
    return std::sqrt(gp) * cn;
}

/// Period of the curvature along the elastica.
inline real_t elastica_period(real_t eps, real_t kappa0, real_t kappa0p) {
    const real_t c1 = elastica_first_integral(eps, kappa0, kappa0p);
    const real_t disc = eps * eps + 4.0 * c1;
    const real_t gp = eps + std::sqrt(disc);
    const real_t gm = eps - std::sqrt(disc);
    if (c1 < 0) return 4.0 * detail::elliptic_k(1.0 - gm / gp) / std::sqrt(gp);
    return 8.0 * detail::elliptic_k(gp / (gp - gm)) / std::sqrt(gp - gm);
}

namespace detail {

/// Hermite-cubic initial guess (kappa0, kappa0', length) for boundary data
/// in the start frame: y(0) = 0, y'(0) = 0, y(x1) = y1, y'(x1) = tan angle.
inline std::array<real_t, 3> cubic_guess(real_t x1, real_t y1, real_t theta1) {
    if (std::abs(x1) < 1e-9) x1 = 1e-9;
    const real_t t1 = std::tan(std::clamp(theta1, -1.4, 1.4));
    const real_t a = (3.0 * y1 - t1 * x1) / (x1 * x1);
    const real_t b = (t1 * x1 - 2.0 * y1) / (x1 * x1 * x1);
    const real_t k0 = 2.0 * a;
    const real_t k0p = 6.0 * b;
    // arclength of the cubic
    real_t len = 0;
    const int n = 64;
    for (int i = 0; i < n; ++i) {
        const real_t x = (i + 0.5) / n * x1;
        const real_t yp = 2 * a * x + 3 * b * x * x;
        len += std::sqrt(1.0 + yp * yp) * x1 / n;
    }
    return {k0, k0p, std::abs(len)};
}

}  // namespace detail

/// Shoot the elastica from g0 to g1: damped Newton on the endpoint map over
/// (kappa0, kappa0', L).  gamma weighs the angle residual against position.
inline CurveSE2 elastica_shoot(const ElasticaProblem& prob, real_t gamma = 1.0,
                               ShootingReport* report = nullptr,
                               std::optional<std::array<real_t, 3>> guess = {}) {
    const Se2Element rel = compose(inverse(prob.g0), prob.g1);
    const real_t th1 = wrap_angle_signed(rel.theta);
    std::array<real_t, 3> p =
        guess ? *guess : detail::cubic_guess(rel.x, rel.y, th1);
    if (p[2] < 1e-3) p[2] = std::max(1e-3, std::hypot(rel.x, rel.y));

    auto endpoint = [&](const std::array<real_t, 3>& v) {
        const real_t len = std::max(1e-4, v[2]);
        const CurveSE2 c =
            elastica_integrate(prob.epsilon, v[0], v[1], len, len / 2000.0);
        const auto& e = c.samples.back();
        return Eigen::Vector3d(e.x - rel.x, e.y - rel.y,
                               gamma * wrap_angle_signed(e.theta - th1));
    };

    Eigen::Vector3d f = endpoint(p);
    int it = 0;
    const int max_it = 200;
    for (; it < max_it && f.norm() > 1e-10; ++it) {
        Eigen::Matrix3d jac;
        for (int c = 0; c < 3; ++c) {
            std::array<real_t, 3> q = p;
            const real_t dh = std::max(1e-7, 1e-6 * std::abs(q[c]));
            q[c] += dh;
            jac.col(c) = (endpoint(q) - f) / dh;
        }
        Eigen::Vector3d step = jac.fullPivLu().solve(-f);
        real_t damp = 1.0;
        bool improved = false;
        for (int half = 0; half < 8; ++half) {
            std::array<real_t, 3> q = {p[0] + damp * step(0),
                                       p[1] + damp * step(1),
                                       p[2] + damp * step(2)};
            if (q[2] < 1e-3) q[2] = 1e-3;
            Eigen::Vector3d fq;
            try {
                fq = endpoint(q);
            } catch (const numeric_error&) {
                damp *= 0.5;
                continue;
            }
            if (fq.norm() < f.norm()) {
                p = q;
                f = fq;
                improved = true;
                break;
            }
            damp *= 0.5;
        }
        if (!improved) break;
    }

    const CurveSE2 local =
        elastica_integrate(prob.epsilon, p[0], p[1], p[2], p[2] / 4000.0);
    if (report) {
        report->iterations = it;
        report->position_residual = std::hypot(f(0), f(1));
        report->angle_residual = std::abs(f(2)) / gamma;
        report->converged =
            report->position_residual < 1e-4 && report->angle_residual < 1e-4;
        report->kappa0 = p[0];
        report->kappa0_prime = p[1];
        report->length = p[2];
    } else if (std::hypot(f(0), f(1)) > 1e-4 ||
               std::abs(f(2)) / gamma > 1e-4) {
        throw numeric_error("elastica_shoot: did not reach the endpoint "
                            "(residual " + std::to_string(f.norm()) + ")");
    }

    // map back to the g0 frame
    CurveSE2 out = local;
    for (auto& smp : out.samples) {
        const Se2Element g =
            compose(prob.g0, Se2Element(smp.x, smp.y, 0.0));
        smp.x = g.x;
        smp.y = g.y;
        smp.theta += prob.g0.theta;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Curves minimizing int sqrt(kappa^2 + eps) ds
// ---------------------------------------------------------------------------

/// Parameters of the closed form: normalized curvature
/// z = kappa / sqrt(kappa^2 + eps) evolves as
/// z(s) = z0 cosh(sqrt(eps) s) + z0p sinh(sqrt(eps) s) / sqrt(eps), and the
/// momentum components (mu2, mu3) with mu2^2 + mu3^2 = c^2 eps are conserved.
struct GeodesicParams {
    real_t z0{0};
    real_t z0p{0};
    real_t epsilon{0};
    real_t s_max{0};
    real_t c{0};
    real_t mu1{0}, mu2{0}, mu3{0};
};

namespace detail {

inline real_t geo_z(const GeodesicParams& g, real_t s) {
    const real_t r = std::sqrt(g.epsilon);
    return g.z0 * std::cosh(r * s) + g.z0p / r * std::sinh(r * s);
}
inline real_t geo_zdot(const GeodesicParams& g, real_t s) {
    const real_t r = std::sqrt(g.epsilon);
    return g.z0 * r * std::sinh(r * s) + g.z0p * std::cosh(r * s);
}

/// First s > 0 with |z(s)| = 1 (infinite curvature), or +infinity.
inline real_t geo_smax(real_t z0, real_t z0p, real_t eps) {
    const real_t r = std::sqrt(eps);
    real_t best = std::numeric_limits<real_t>::infinity();
    for (const real_t sigma : {1.0, -1.0}) {
        // z(s) = sigma  <=>  u^2 (z0 + z0p/r) - 2 sigma u + (z0 - z0p/r) = 0,
        // u = e^{r s}
        const real_t a = z0 + z0p / r;
        const real_t b = -2.0 * sigma;
        const real_t c = z0 - z0p / r;
        if (std::abs(a) < 1e-15) {
            if (std::abs(b) > 1e-300) {
                const real_t u = -c / b;
                if (u > 1.0 + 1e-13) best = std::min(best, std::log(u) / r);
            }
            continue;
        }
        const real_t disc = b * b - 4 * a * c;
        if (disc < 0) continue;
        for (const real_t sgn : {1.0, -1.0}) {
            const real_t u = (-b + sgn * std::sqrt(disc)) / (2 * a);
            if (u > 1.0 + 1e-13) best = std::min(best, std::log(u) / r);
        }
    }
    return best;
}

}  // namespace detail

/// Build the closed-form parameters from initial data (g0 is the starting
/// pose; z0, z0p the normalized curvature and its derivative at s = 0).
inline GeodesicParams geodesic_params(const Se2Element& g0, real_t z0,
                                      real_t z0p, real_t eps) {
    if (eps <= 0) throw numeric_error("geodesic_params: eps must be positive");
    if (std::abs(z0) >= 1.0)
        throw numeric_error("geodesic_params: |z0| must be < 1");
    GeodesicParams g;
    g.z0 = z0;
    g.z0p = z0p;
    g.epsilon = eps;
    g.c = std::sqrt(1.0 + z0p * z0p / eps - z0 * z0);
    const real_t w0 = std::sqrt(eps * (1.0 - z0 * z0));
    const real_t c0 = std::cos(g0.theta), s0 = std::sin(g0.theta);
    g.mu3 = -z0p * c0 + s0 * w0;
    g.mu2 = z0p * s0 + c0 * w0;
    g.mu1 = z0 + g.mu3 * g0.x - g.mu2 * g0.y;
    g.s_max = detail::geo_smax(z0, z0p, eps);
    return g;
}

/// Evaluate the closed-form curve from pose g0 over [0, length] with n + 1
/// samples.  Throws when length >= s_max (curvature blows up there).
inline CurveSE2 geodesic_closed_form(const Se2Element& g0, real_t z0,
                                     real_t z0p, real_t eps, real_t length,
                                     int n = 400,
                                     GeodesicParams* out_params = nullptr) {
    GeodesicParams g = geodesic_params(g0, z0, z0p, eps);
    if (out_params) *out_params = g;
    if (length >= g.s_max)
        throw numeric_error(
            "geodesic_closed_form: length reaches the curvature singularity");
    const real_t c2e = g.c * g.c * eps;
    CurveSE2 curve;
    curve.total_length = length;
    curve.samples.reserve(n + 1);

    // cumulative quadrature of W(s) = int sqrt(1 - z^2) (5-point
    // Gauss-Legendre per interval)
    static const real_t gl_x[5] = {-0.906179845938664, -0.538469310105683, 0.0,
                                   0.538469310105683, 0.906179845938664};
    static const real_t gl_w[5] = {0.236926885056189, 0.478628670499366,
                                   0.568888888888889, 0.478628670499366,
                                   0.236926885056189};
    real_t W = 0;
    real_t prev_theta = g0.theta;
    for (int i = 0; i <= n; ++i) {
        const real_t s = length * i / n;
        if (i > 0) {
            const real_t s0 = length * (i - 1) / n;
            const real_t hh = 0.5 * (s - s0);
            for (int qq = 0; qq < 5; ++qq) {
                const real_t sq = s0 + hh * (1.0 + gl_x[qq]);
                const real_t zz = detail::geo_z(g, sq);
                W += gl_w[qq] * hh * std::sqrt(std::max(0.0, 1.0 - zz * zz));
            }
        }
        const real_t z = detail::geo_z(g, s);
        const real_t zd = detail::geo_zdot(g, s);
        const real_t w = std::sqrt(std::max(0.0, 1.0 - z * z));
        const real_t x =
            g0.x + (g.mu2 * std::sqrt(eps) * W - g.mu3 * (z - g.z0)) / c2e;
        const real_t y =
            g0.y + (g.mu2 * (z - g.z0) + g.mu3 * std::sqrt(eps) * W) / c2e;
        const real_t ct = (g.mu2 * std::sqrt(eps) * w - g.mu3 * zd) / c2e;
        const real_t st = (g.mu2 * zd + g.mu3 * std::sqrt(eps) * w) / c2e;
        real_t theta = std::atan2(st, ct);
        theta = prev_theta + wrap_angle_signed(theta - prev_theta);
        prev_theta = theta;
        const real_t kappa = std::sqrt(eps) * z / std::max(1e-15, w);
        curve.samples.push_back({s, x, y, theta, kappa});
    }
    return curve;
}

/// Conservation-law residual zdot^2 + eps - c^2 eps - eps z^2 at arclength s.
inline real_t geodesic_conservation_residual(const GeodesicParams& g, real_t s) {
    const real_t z = detail::geo_z(g, s);
    const real_t zd = detail::geo_zdot(g, s);
    return zd * zd + g.epsilon - g.c * g.c * g.epsilon - g.epsilon * z * z;
}

/// Shoot the closed form from g0 to g1 over the unknowns (z0, z0p, L).
inline CurveSE2 geodesic_shoot(const Se2Element& g0, const Se2Element& g1,
                               real_t eps, ShootingReport* report = nullptr) {
    const Se2Element rel = compose(inverse(g0), g1);
    const real_t th1 = wrap_angle_signed(rel.theta);
    auto guess3 = detail::cubic_guess(rel.x, rel.y, th1);
    const real_t k0 = guess3[0], k0p = guess3[1];
    std::array<real_t, 3> p = {
        std::clamp(k0 / std::sqrt(k0 * k0 + eps), -0.6, 0.6),
        std::clamp(eps * k0p / std::pow(k0 * k0 + eps, 1.5),
                   -0.5 * std::sqrt(eps), 0.5 * std::sqrt(eps)),
        guess3[2]};

    auto endpoint = [&](const std::array<real_t, 3>& v) {
        GeodesicParams g = geodesic_params(Se2Element(0, 0, 0),
                                           std::clamp(v[0], -0.999, 0.999),
                                           v[1], eps);
        const real_t len = std::min(std::max(1e-4, v[2]), 0.999 * g.s_max);
        const CurveSE2 c = geodesic_closed_form(
            Se2Element(0, 0, 0), std::clamp(v[0], -0.999, 0.999), v[1], eps,
            len, 200);
        const auto& e = c.samples.back();
        return Eigen::Vector3d(e.x - rel.x, e.y - rel.y,
                               wrap_angle_signed(e.theta - th1));
    };

    auto solve_from = [&](std::array<real_t, 3> q0, Eigen::Vector3d& fout,
                          int& iters) {
        Eigen::Vector3d f = endpoint(q0);
        int it = 0;
        for (; it < 120 && f.norm() > 1e-12; ++it) {
            Eigen::Matrix3d jac;
            for (int c = 0; c < 3; ++c) {
                std::array<real_t, 3> q = q0;
                const real_t dh = std::max(1e-8, 1e-7 * std::abs(q[c]));
                q[c] += dh;
                jac.col(c) = (endpoint(q) - f) / dh;
            }
            Eigen::Vector3d step = jac.fullPivLu().solve(-f);
            real_t damp = 1.0;
            bool improved = false;
            for (int half = 0; half < 10; ++half) {
                std::array<real_t, 3> q = {q0[0] + damp * step(0),
                                           q0[1] + damp * step(1),
                                           q0[2] + damp * step(2)};
                q[0] = std::clamp(q[0], -0.999, 0.999);
                if (q[2] < 1e-3) q[2] = 1e-3;
                Eigen::Vector3d fq;
                try {
                    fq = endpoint(q);
                } catch (const numeric_error&) {
                    damp *= 0.5;
                    continue;
                }
                if (fq.norm() < f.norm()) {
                    q0 = q;
                    f = fq;
                    improved = true;
                    break;
                }
                damp *= 0.5;
            }
            if (!improved) break;
        }
        fout = f;
        iters = it;
        return q0;
    };

    // multi-start: the damped Hermite guess first, then tamer fallbacks
    const std::array<std::array<real_t, 3>, 4> starts = {
        p,
        {0.5 * p[0], 0.5 * p[1], p[2]},
        {0.0, 0.0, std::max(p[2], std::hypot(rel.x, rel.y))},
        {-0.3 * p[0], 0.25 * p[1], 1.3 * p[2]}};
    Eigen::Vector3d f = Eigen::Vector3d::Constant(1e30);
    int it = 0;
    for (const auto& s0 : starts) {
        Eigen::Vector3d fs;
        int its;
        const auto q = solve_from(s0, fs, its);
        if (fs.norm() < f.norm()) {
            f = fs;
            p = q;
            it = its;
        }
        if (f.norm() < 1e-9) break;
    }

    if (f.norm() > 1e-6) {
        // coarse scan of the (z0, z0', L) box, then polish the best cells
        const real_t dist = std::max(0.5, std::hypot(rel.x, rel.y));
        std::vector<std::pair<real_t, std::array<real_t, 3>>> cells;
        for (int a = -6; a <= 6; ++a)
            for (int b = -6; b <= 6; ++b)
                for (int c = 1; c <= 16; ++c) {
                    const std::array<real_t, 3> q = {
                        0.15 * a, 0.15 * b * std::sqrt(eps),
                        dist * (0.5 + 0.2 * c)};
                    try {
                        cells.emplace_back(endpoint(q).norm(), q);
                    } catch (const numeric_error&) {
                    }
                }
        std::partial_sort(cells.begin(), cells.begin() + std::min<size_t>(4, cells.size()),
                          cells.end(),
                          [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t c = 0; c < std::min<std::size_t>(4, cells.size()); ++c) {
            Eigen::Vector3d fs;
            int its;
            const auto q = solve_from(cells[c].second, fs, its);
            if (fs.norm() < f.norm()) {
                f = fs;
                p = q;
                it = its;
            }
            if (f.norm() < 1e-9) break;
        }
    }

    if (report) {
        report->iterations = it;
        report->position_residual = std::hypot(f(0), f(1));
        report->angle_residual = std::abs(f(2));
        report->converged =
            report->position_residual < 1e-6 && report->angle_residual < 1e-6;
        report->kappa0 = p[0];
        report->kappa0_prime = p[1];
        report->length = p[2];
    } else if (f.norm() > 1e-6) {
        throw numeric_error("geodesic_shoot: did not reach the endpoint");
    }
    const real_t smax = geodesic_params(g0, p[0], p[1], eps).s_max;
    return geodesic_closed_form(g0, p[0], p[1], eps,
                                std::min(p[2], 0.999999 * smax), 400);
}

// ---------------------------------------------------------------------------
// Comparison report and the snake extremal residual
// ---------------------------------------------------------------------------

struct CurveComparison {
    CurveSE2 elastica;
    CurveSE2 geodesic;
    real_t max_distance{0};
    real_t elastica_max_kappa{0};
    real_t geodesic_max_kappa{0};
};

/// Solve both boundary-value problems with the standard parameter couplings
/// (elastica eps = 4 alpha d11, geodesic eps = d11 / d22) and report how far
/// apart the curves run.
inline CurveComparison compare_curves(const Se2Element& g0, const Se2Element& g1,
                                      real_t alpha, real_t d11, real_t d22) {
    CurveComparison rep;
    const real_t eps_elastica = 4.0 * alpha * d11;
    const real_t eps_geodesic = d11 / d22;
    ElasticaProblem prob{g0, g1, eps_elastica};
    rep.elastica = elastica_shoot(prob);
    rep.geodesic = geodesic_shoot(g0, g1, eps_geodesic);
    // max over elastica samples of the distance to the geodesic polyline
    auto seg_dist = [](real_t px, real_t py, const CurveSample& a,
                       const CurveSample& b) {
        const real_t vx = b.x - a.x, vy = b.y - a.y;
        const real_t len2 = vx * vx + vy * vy;
        real_t t = len2 > 0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        return std::hypot(px - a.x - t * vx, py - a.y - t * vy);
    };
    for (const auto& a : rep.elastica.samples) {
        real_t best = std::numeric_limits<real_t>::infinity();
        for (std::size_t i = 1; i < rep.geodesic.samples.size(); ++i)
            best = std::min(best, seg_dist(a.x, a.y, rep.geodesic.samples[i - 1],
                                           rep.geodesic.samples[i]));
        rep.max_distance = std::max(rep.max_distance, best);
        rep.elastica_max_kappa = std::max(rep.elastica_max_kappa, std::abs(a.kappa));
    }
    for (const auto& b : rep.geodesic.samples)
        rep.geodesic_max_kappa = std::max(rep.geodesic_max_kappa, std::abs(b.kappa));
    return rep;
}

/// Residual of the extremal equation of curves attracted by a field:
///   kappa^2 + 3 kappa' + C_eta - d/ds C_theta - lambda kappa
/// with lambda fitted by least squares over the curve.  The field is a
/// callable on (x, y, theta); its left-invariant derivatives are taken by
/// central differences with step fd.
inline std::vector<real_t> snake_extremal_residual(
    const CurveSE2& curve, const std::function<real_t(real_t, real_t, real_t)>& field,
    real_t fd = 1e-4) {
    const std::size_t n = curve.samples.size();
    if (n < 5) throw numeric_error("snake_extremal_residual: curve too short");
    std::vector<real_t> ceta(n), ctheta(n), base(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = curve.samples[i];
        const real_t c = std::cos(s.theta), sn = std::sin(s.theta);
        ceta[i] = (field(s.x - fd * sn, s.y + fd * c, s.theta) -
                   field(s.x + fd * sn, s.y - fd * c, s.theta)) /
                  (2 * fd);
        ctheta[i] = (field(s.x, s.y, s.theta + fd) -
                     field(s.x, s.y, s.theta - fd)) /
                    (2 * fd);
    }
    auto ds = [&](const std::vector<real_t>& v, std::size_t i) {
        const std::size_t a = i == 0 ? 0 : i - 1;
        const std::size_t b = i + 1 >= n ? n - 1 : i + 1;
        return (v[b] - v[a]) / (curve.samples[b].s - curve.samples[a].s);
    };
    std::vector<real_t> kappa(n);
    for (std::size_t i = 0; i < n; ++i) kappa[i] = curve.samples[i].kappa;
    for (std::size_t i = 0; i < n; ++i)
        base[i] = sqr(kappa[i]) + 3.0 * ds(kappa, i) + ceta[i] - ds(ctheta, i);
    // least-squares lambda
    real_t num = 0, den = 0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        num += base[i] * kappa[i];
        den += sqr(kappa[i]);
    }
    const real_t lambda = den > 1e-14 ? num / den : 0.0;
    std::vector<real_t> res(n);
    for (std::size_t i = 0; i < n; ++i) res[i] = base[i] - lambda * kappa[i];
    return res;
}

}  // namespace se2lie
