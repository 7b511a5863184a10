#pragma once

// Group algebra of the planar roto-translation group: composition, inverse,
// exponential curves and horizontal lifting of planar curves.

#include <cstddef>
#include <vector>

#include "se2lie/common.hpp"

namespace se2lie {

/// Group element (x, y, theta) with theta stored in [0, 2pi).
struct Se2Element {
    real_t x{0};
    real_t y{0};
    real_t theta{0};

    Se2Element() = default;
    Se2Element(real_t x_, real_t y_, real_t theta_)
        : x(x_), y(y_), theta(wrap_angle(theta_)) {}

    static Se2Element identity() { return {}; }
};

/// Tangent coefficients (c1, c2, c3) in the moving frame
/// {d/dtheta, d/dxi, d/deta}.
struct TangentCoefficients {
    real_t c1{0};  // theta component
    real_t c2{0};  // xi component (along the orientation)
    real_t c3{0};  // eta component (perpendicular)
};

inline Se2Element compose(const Se2Element& g, const Se2Element& h) {
    const real_t c = std::cos(g.theta), s = std::sin(g.theta);
    return {g.x + c * h.x - s * h.y, g.y + s * h.x + c * h.y, g.theta + h.theta};
}

inline Se2Element inverse(const Se2Element& g) {
    const real_t c = std::cos(g.theta), s = std::sin(g.theta);
    return {-(c * g.x + s * g.y), -(-s * g.x + c * g.y), -g.theta};
}

/// Left action of g on a point p in the plane.
inline void apply_planar(const Se2Element& g, real_t px, real_t py,
                         real_t& qx, real_t& qy) {
    const real_t c = std::cos(g.theta), s = std::sin(g.theta);
    qx = g.x + c * px - s * py;
    qy = g.y + s * px + c * py;
}

/// Exponential curve t -> exp(t (c1 A1 + c2 A2 + c3 A3)) g0.
/// For c1 != 0 a circular spiral of radius sqrt(c2^2+c3^2)/|c1|; the straight
/// line limit at c1 = 0 is reached continuously.
inline Se2Element exp_curve(const Se2Element& g0, const TangentCoefficients& c,
                            real_t t) {
    const real_t phi = c.c1 * t;
    // (sin(theta0+phi)-sin(theta0))/c1 and friends, written via ratios in phi
    // so the c1 -> 0 limit is regular.
    const real_t ds = dsin_ratio(phi, g0.theta) * t;
    const real_t dc = dcos_ratio(phi, g0.theta) * t;
    return Se2Element(g0.x + c.c3 * dc + c.c2 * ds,
                      g0.y + c.c3 * ds - c.c2 * dc,
                      g0.theta + phi);
}

/// Arclength-sampled horizontal curve with curvature.
struct CurveSample {
    real_t s{0};
    real_t x{0};
    real_t y{0};
    real_t theta{0};  // continuous (unwrapped) tangent angle
    real_t kappa{0};
};

struct CurveSE2 {
    std::vector<CurveSample> samples;
    real_t total_length{0};

    bool empty() const { return samples.empty(); }
    std::size_t size() const { return samples.size(); }
};

/// Lift a planar polyline to a horizontal curve: theta is the unwrapped angle
/// of the finite-difference tangent, the parameterization is rescaled to unit
/// speed, and kappa = dtheta/ds.  Central differences inside, one-sided at the
/// ends.  Throws on repeated consecutive points (non-immersed curve).
inline CurveSE2 lift_planar_curve(const std::vector<std::pair<real_t, real_t>>& pts) {
    const std::size_t n = pts.size();
    if (n < 3) throw numeric_error("lift_planar_curve: need at least 3 points");

    std::vector<real_t> s(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const real_t dx = pts[i].first - pts[i - 1].first;
        const real_t dy = pts[i].second - pts[i - 1].second;
        const real_t d = std::hypot(dx, dy);
        if (d == 0.0)
            throw numeric_error("lift_planar_curve: repeated point (curve not immersed)");
        s[i] = s[i - 1] + d;
    }

    CurveSE2 curve;
    curve.total_length = s.back();
    curve.samples.resize(n);

    auto tangent = [&](std::size_t i, real_t& tx, real_t& ty) {
        std::size_t a = i == 0 ? 0 : i - 1;
        std::size_t b = i + 1 >= n ? n - 1 : i + 1;
        tx = (pts[b].first - pts[a].first) / (s[b] - s[a]);
        ty = (pts[b].second - pts[a].second) / (s[b] - s[a]);
    };

    real_t prev_theta = 0;
    for (std::size_t i = 0; i < n; ++i) {
        real_t tx, ty;
        tangent(i, tx, ty);
        real_t th = std::atan2(ty, tx);
        if (i > 0) th = prev_theta + wrap_angle_signed(th - prev_theta);
        prev_theta = th;
        curve.samples[i] = {s[i], pts[i].first, pts[i].second, th, 0.0};
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t a = i == 0 ? 0 : i - 1;
        std::size_t b = i + 1 >= n ? n - 1 : i + 1;
        curve.samples[i].kappa =
            (curve.samples[b].theta - curve.samples[a].theta) / (s[b] - s[a]);
    }
    return curve;
}

}  // namespace se2lie
