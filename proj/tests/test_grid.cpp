#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "se2lie/grid.hpp"

using namespace se2lie;

TEST_CASE("quadratic spline interpolates grid samples exactly") {
    const int nx = 17, ny = 13;
    std::mt19937 rng(3);
    std::uniform_real_distribution<real_t> u(-1, 1);
    std::vector<real_t> v(static_cast<std::size_t>(nx) * ny);
    for (auto& x : v) x = u(rng);

    for (Boundary mode : {Boundary::Reflect, Boundary::Periodic}) {
        SplineSlice2 s(v.data(), nx, ny, mode);
        for (int j = 1; j < ny - 1; ++j)
            for (int i = 1; i < nx - 1; ++i)
                REQUIRE(s(static_cast<real_t>(i), static_cast<real_t>(j)) ==
                        Catch::Approx(v[static_cast<std::size_t>(j) * nx + i])
                            .margin(1e-10));
    }
}

TEST_CASE("quadratic spline reproduces quadratics") {
    const int n = 32;
    std::vector<real_t> v(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            v[static_cast<std::size_t>(j) * n + i] =
                0.5 * i * i - 0.25 * j * j + 0.1 * i * j + 2.0;
    SplineSlice2 s(v.data(), n, n, Boundary::Reflect);
    // mirror boundaries do not extend a global quadratic, so accuracy is
    // checked away from the edges where the boundary influence (pole^d) fades
    for (real_t fx : {12.75, 16.3, 20.1})
        for (real_t fy : {12.6, 15.5, 19.25}) {
            const real_t want = 0.5 * fx * fx - 0.25 * fy * fy + 0.1 * fx * fy + 2.0;
            REQUIRE(s(fx, fy) == Catch::Approx(want).epsilon(1e-6));
        }
}

TEST_CASE("periodic spline wraps") {
    const int n = 16;
    std::vector<real_t> v(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            v[static_cast<std::size_t>(j) * n + i] =
                std::sin(kTwoPi * i / n) * std::cos(kTwoPi * j / n);
    SplineSlice2 s(v.data(), n, n, Boundary::Periodic);
    // sampling one period away must agree
    CHECK(s(3.4, 5.7) == Catch::Approx(s(3.4 + n, 5.7)).margin(1e-10));
    CHECK(s(3.4, 5.7) == Catch::Approx(s(3.4, 5.7 - n)).margin(1e-10));
    // near-interpolation of a smooth periodic function off the grid
    CHECK(s(4.5, 0.0) ==
          Catch::Approx(std::sin(kTwoPi * 4.5 / n)).margin(5e-3));
}

TEST_CASE("grid indexing is x-fastest") {
    GridSpec spec{4, 3, 2, 0.5};
    CHECK(spec.index(1, 0, 0) == 1);
    CHECK(spec.index(0, 1, 0) == 4);
    CHECK(spec.index(0, 0, 1) == 12);
    CHECK(spec.size() == 24);
    CHECK(spec.x_of(2) == Catch::Approx(0.0));
    CHECK(spec.theta_of(1) == Catch::Approx(kPi));
}
