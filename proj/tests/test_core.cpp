#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "se2lie/core.hpp"

using namespace se2lie;

namespace {
Se2Element random_element(std::mt19937& rng) {
    std::uniform_real_distribution<real_t> pos(-5.0, 5.0), ang(0.0, kTwoPi);
    return {pos(rng), pos(rng), ang(rng)};
}
}  // namespace

TEST_CASE("group product basics") {
    const Se2Element e = Se2Element::identity();
    std::mt19937 rng(7);
    const Se2Element g = random_element(rng);

    SECTION("identity") {
        const Se2Element gi = compose(e, g);
        CHECK(gi.x == Catch::Approx(g.x).margin(1e-14));
        CHECK(gi.y == Catch::Approx(g.y).margin(1e-14));
        CHECK(gi.theta == Catch::Approx(g.theta).margin(1e-14));
    }
    SECTION("quarter turn acts on translations") {
        const Se2Element r(0, 0, kPi / 2);
        const Se2Element t(1, 0, 0);
        const Se2Element c = compose(r, t);
        CHECK(c.x == Catch::Approx(0.0).margin(1e-14));
        CHECK(c.y == Catch::Approx(1.0).margin(1e-14));
        CHECK(c.theta == Catch::Approx(kPi / 2));
    }
    SECTION("inverse") {
        const Se2Element c = compose(g, inverse(g));
        CHECK(std::abs(c.x) < 1e-12);
        CHECK(std::abs(c.y) < 1e-12);
        CHECK(std::min(c.theta, kTwoPi - c.theta) < 1e-12);
    }
}

TEST_CASE("associativity on random triples") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const Se2Element a = random_element(rng), b = random_element(rng),
                         c = random_element(rng);
        const Se2Element lhs = compose(compose(a, b), c);
        const Se2Element rhs = compose(a, compose(b, c));
        REQUIRE(std::abs(lhs.x - rhs.x) < 1e-12);
        REQUIRE(std::abs(lhs.y - rhs.y) < 1e-12);
        REQUIRE(std::min(std::abs(lhs.theta - rhs.theta),
                         kTwoPi - std::abs(lhs.theta - rhs.theta)) < 1e-12);
    }
}

TEST_CASE("exponential curves") {
    const Se2Element e = Se2Element::identity();

    SECTION("straight line along x") {
        const Se2Element g = exp_curve(e, {0.0, 1.0, 0.0}, 2.5);
        CHECK(g.x == Catch::Approx(2.5));
        CHECK(std::abs(g.y) < 1e-14);
        CHECK(std::abs(g.theta) < 1e-14);
    }
    SECTION("t = 0 returns the base point") {
        const Se2Element g0(0.3, -0.7, 1.1);
        const Se2Element g = exp_curve(g0, {0.4, 0.2, -0.9}, 0.0);
        CHECK(g.x == Catch::Approx(g0.x));
        CHECK(g.y == Catch::Approx(g0.y));
        CHECK(g.theta == Catch::Approx(g0.theta));
    }
    SECTION("curvature kappa projects to circle of radius 1/kappa") {
        const real_t kappa = 0.25;
        // center of the circle for start at identity: (0, 1/kappa)
        for (real_t t : {0.3, 1.0, 4.0, 9.0}) {
            const Se2Element g = exp_curve(e, {kappa, 1.0, 0.0}, t);
            const real_t r = std::hypot(g.x, g.y - 1.0 / kappa);
            REQUIRE(r == Catch::Approx(1.0 / kappa).epsilon(1e-10));
        }
    }
    SECTION("continuous in c1 at 0") {
        const Se2Element g0(0.1, 0.2, 0.9);
        const TangentCoefficients c{1e-9, 0.8, -0.5};
        const TangentCoefficients c0{0.0, 0.8, -0.5};
        const Se2Element a = exp_curve(g0, c, 3.0), b = exp_curve(g0, c0, 3.0);
        CHECK(std::abs(a.x - b.x) < 1e-7);
        CHECK(std::abs(a.y - b.y) < 1e-7);
    }
    SECTION("numerical tangent matches the coefficients") {
        // d/dt U(gamma(t)) = c1 dU/dtheta + c2 dU/dxi + c3 dU/deta
        auto field = [](const Se2Element& g) {
            return std::sin(0.7 * g.x) * std::cos(0.4 * g.y) + 0.3 * std::cos(g.theta);
        };
        const Se2Element g0(0.37, -0.81, 0.63);
        const TangentCoefficients c{0.5, 1.2, -0.4};
        const real_t h = 1e-5;
        const real_t num =
            (field(exp_curve(g0, c, h)) - field(exp_curve(g0, c, -h))) / (2 * h);
        // analytic directional derivative in the moving frame
        const real_t fx = 0.7 * std::cos(0.7 * g0.x) * std::cos(0.4 * g0.y);
        const real_t fy = -0.4 * std::sin(0.7 * g0.x) * std::sin(0.4 * g0.y);
        const real_t ft = -0.3 * std::sin(g0.theta);
        const real_t ct = std::cos(g0.theta), st = std::sin(g0.theta);
        const real_t want = c.c1 * ft + c.c2 * (ct * fx + st * fy) +
                            c.c3 * (-st * fx + ct * fy);
        CHECK(num == Catch::Approx(want).margin(1e-8));
    }
}

TEST_CASE("lifting planar curves") {
    SECTION("straight segment lifts to theta = 0") {
        std::vector<std::pair<real_t, real_t>> pts;
        for (int i = 0; i <= 20; ++i) pts.emplace_back(0.1 * i, 0.0);
        const CurveSE2 c = lift_planar_curve(pts);
        for (const auto& s : c.samples) {
            REQUIRE(std::abs(s.theta) < 1e-12);
            REQUIRE(std::abs(s.kappa) < 1e-12);
        }
        CHECK(c.total_length == Catch::Approx(2.0));
    }
    SECTION("unit circle: theta(s) = s + pi/2 and kappa = 1") {
        std::vector<std::pair<real_t, real_t>> pts;
        const int n = 4000;
        for (int i = 0; i <= n; ++i) {
            const real_t a = kTwoPi * i / n * 0.9;
            pts.emplace_back(std::cos(a), std::sin(a));
        }
        const CurveSE2 c = lift_planar_curve(pts);
        for (std::size_t i = 10; i + 10 < c.samples.size(); i += 100) {
            const auto& s = c.samples[i];
            REQUIRE(s.theta == Catch::Approx(s.s + kPi / 2).margin(1e-5));
            REQUIRE(s.kappa == Catch::Approx(1.0).margin(1e-4));
        }
    }
    SECTION("cubic y = x^3 has horizontal tangent at the origin") {
        std::vector<std::pair<real_t, real_t>> pts;
        for (int i = -50; i <= 50; ++i) {
            const real_t x = 0.01 * i;
            pts.emplace_back(x, x * x * x);
        }
        const CurveSE2 c = lift_planar_curve(pts);
        const auto& mid = c.samples[50];
        CHECK(std::abs(mid.theta) < 1e-3);
    }
    SECTION("repeated points are rejected") {
        std::vector<std::pair<real_t, real_t>> pts{{0, 0}, {0, 0}, {1, 0}};
        CHECK_THROWS_AS(lift_planar_curve(pts), numeric_error);
    }
}

TEST_CASE("left-invariant commutators from finite differences") {
    // [d_theta, d_xi] f = d_eta f, [d_theta, d_eta] f = -d_xi f,
    // [d_xi, d_eta] f = 0, with second-order convergence in the step.
    auto field = [](real_t x, real_t y, real_t theta) {
        return std::sin(0.9 * x + 0.3) * std::cos(0.6 * y) * std::cos(theta + 0.5) +
               0.2 * x * y;
    };
    auto deriv = [&](int dir, real_t x, real_t y, real_t th, real_t h,
                     auto&& f) -> real_t {
        const real_t c = std::cos(th), s = std::sin(th);
        switch (dir) {
            case 0: return (f(x, y, th + h) - f(x, y, th - h)) / (2 * h);
            case 1:
                return (f(x + h * c, y + h * s, th) - f(x - h * c, y - h * s, th)) /
                       (2 * h);
            default:
                return (f(x - h * s, y + h * c, th) - f(x + h * s, y - h * c, th)) /
                       (2 * h);
        }
    };
    const real_t x0 = 0.31, y0 = -0.44, t0 = 0.72;
    auto commutator = [&](int a, int b, real_t h) {
        auto da = [&](real_t x, real_t y, real_t th) {
            return deriv(a, x, y, th, h, field);
        };
        auto db = [&](real_t x, real_t y, real_t th) {
            return deriv(b, x, y, th, h, field);
        };
        return deriv(a, x0, y0, t0, h, db) - deriv(b, x0, y0, t0, h, da);
    };

    const real_t deta = deriv(2, x0, y0, t0, 1e-6, field);
    const real_t dxi = deriv(1, x0, y0, t0, 1e-6, field);

    real_t e1 = std::abs(commutator(0, 1, 0.08) - deta);
    real_t e2 = std::abs(commutator(0, 1, 0.04) - deta);
    CHECK(e2 < e1 / 3.0);  // ~4x for second order

    e1 = std::abs(commutator(0, 2, 0.08) + dxi);
    e2 = std::abs(commutator(0, 2, 0.04) + dxi);
    CHECK(e2 < e1 / 3.0);

    CHECK(std::abs(commutator(1, 2, 0.04)) < 1e-4);
}
