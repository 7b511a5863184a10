#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "se2lie/completion.hpp"

using namespace se2lie;

TEST_CASE("mode polynomials") {
    SECTION("boundary conditions are exact") {
        const real_t x1 = 2.7, y1 = 0.8, th0 = 0.35, th1 = -0.2;
        for (real_t dk : {0.0, 0.6}) {
            const ModePolynomials m = mode_polynomials(x1, y1, th0, th1, dk, 0.0);
            REQUIRE(m.y(0.0) == 0.0);
            REQUIRE(m.theta(0.0) == th0);
            REQUIRE(m.y(x1) == Catch::Approx(y1).margin(1e-13));
            REQUIRE(m.theta(x1) == Catch::Approx(-th1).margin(1e-13));
            REQUIRE(m.y_deriv(0.0, 1) == Catch::Approx(th0).margin(1e-13));
            REQUIRE(m.y_deriv(x1, 1) == Catch::Approx(-th1).margin(1e-13));
        }
    }
    SECTION("equal drifts collapse to the cubic with vanishing 4th derivative") {
        const ModePolynomials m = mode_polynomials(3.0, 0.5, 0.2, 0.1, 0.7, 0.7);
        CHECK(m.y_coeff[4] == 0.0);
        CHECK(m.y_coeff[5] == 0.0);
        for (real_t x : {0.3, 1.5, 2.7})
            REQUIRE(std::abs(m.y_deriv(x, 4)) < 1e-14);
    }
    SECTION("straight segment when everything vanishes") {
        const ModePolynomials m = mode_polynomials(2.0, 0.0, 0.0, 0.0, 0.4, 0.4);
        for (real_t x : {0.2, 1.1, 1.9}) {
            REQUIRE(std::abs(m.y(x)) < 1e-15);
            REQUIRE(std::abs(m.theta(x)) < 1e-15);
        }
    }
    SECTION("variational equation y'''' = (k1 - k0) c''(x) / x1^3 holds") {
        const real_t x1 = 2.0, k0 = 0.9, k1 = 0.3;
        const ModePolynomials m = mode_polynomials(x1, 0.4, 0.1, -0.3, k0, k1);
        for (real_t x : {0.2, 0.9, 1.7}) {
            // c(x) = 20 (x - x1)(x - x1/2) x  =>  c''(x) = 120 x - 60 x1
            const real_t want = (k1 - k0) * (120.0 * x - 60.0 * x1) / (x1 * x1 * x1);
            REQUIRE(m.y_deriv(x, 4) == Catch::Approx(want).margin(1e-12));
        }
    }
}

TEST_CASE("contracted-group collision field") {
    DiffusionParams p;
    p.d11 = 0.1;
    p.alpha = 0.5;
    HeisCompletionField f;
    f.params = p;
    f.x1 = 2.0;
    f.y1 = 0.0;
    f.theta0 = 0.0;
    f.theta1 = 0.0;

    SECTION("support is the open slab 0 < x < x1") {
        CHECK(f(-0.1, 0.0, 0.0) == 0.0);
        CHECK(f(2.1, 0.0, 0.0) == 0.0);
        CHECK(f(1.0, 0.0, 0.0) > 0.0);
    }
    SECTION("collinear configuration peaks on the straight segment") {
        for (real_t x : {0.5, 1.0, 1.5}) {
            const real_t center = f(x, 0.0, 0.0);
            for (real_t dy : {-0.2, 0.2})
                REQUIRE(center > f(x, dy, 0.0));
            for (real_t dth : {-0.3, 0.3})
                REQUIRE(center > f(x, 0.0, dth));
        }
    }
    SECTION("symmetry of the collinear field under the midpoint flip") {
        for (real_t x : {0.4, 0.9})
            for (real_t y : {0.0, 0.12})
                for (real_t th : {0.0, 0.2})
                    REQUIRE(f(x, y, th) ==
                            Catch::Approx(f(f.x1 - x, y, -th)).epsilon(1e-12));
    }
}

namespace {

ScalarField3 delta_field(const GridSpec& spec, int i, int j, int k) {
    ScalarField3 d(spec);
    d(i, j, k) = 1.0 / spec.cell_volume();
    return d;
}

}  // namespace

TEST_CASE("grid collision distribution") {
    DiffusionParams p;
    p.d11 = 0.1;
    p.alpha = 0.5;

    SECTION("power one reduces to a plain product of convolutions") {
        GridSpec spec{16, 16, 8, 0.4};
        std::mt19937 rng(3);
        std::uniform_real_distribution<real_t> ur(0.0, 1.0);
        ScalarField3 u(spec), v(spec), kern(spec);
        for (auto& x : u.data) x = ur(rng);
        for (auto& x : v.data) x = ur(rng);
        for (int kk = 0; kk < 8; ++kk)
            for (int j = 6; j <= 9; ++j)
                for (int i = 6; i <= 9; ++i) kern(i, j, kk) = ur(rng);
        const ScalarField3 c = completion_field(u, v, kern, kern, p.alpha, 1.0);
        const ScalarField3 wf = se2_convolve(kern, u);
        const ScalarField3 wb = se2_convolve(kern, v);
        real_t worst = 0;
        for (std::size_t t = 0; t < c.data.size(); ++t) {
            const real_t prod = wf.data[t] * wb.data[t];
            const real_t want =
                p.alpha * (prod >= 0 ? std::sqrt(prod) : -std::sqrt(-prod));
            worst = std::max(worst, std::abs(c.data[t] - want));
        }
        CHECK(worst < 1e-12);
    }

    SECTION("delta pair against the closed-form field on the theta = 0 slice") {
        // collinear configuration evaluated where the group translation and
        // the contracted-group shear coincide; alpha large enough that the
        // kernel decays inside the periodic box
        p.alpha = 2.0;
        GridSpec spec{48, 24, 16, 0.125};
        // forward kernel sampled from the closed form; backward kernel is its
        // group reverse
        ScalarField3 fwd(spec), bwd(spec);
        for (int k = 0; k < spec.ntheta; ++k)
            for (int j = 0; j < spec.ny; ++j)
                for (int i = 0; i < spec.nx; ++i) {
                    const real_t x = spec.x_of(i), y = spec.y_of(j);
                    const real_t th = wrap_angle_signed(spec.theta_of(k));
                    fwd(i, j, k) = direction_resolvent_approx(x, y, th, p);
                    const Se2Element gi = inverse(Se2Element(x, y, th));
                    bwd(i, j, k) = direction_resolvent_approx(
                        gi.x, gi.y, wrap_angle_signed(gi.theta), p);
                }
        const int i0 = spec.nx / 2, j0 = spec.ny / 2;  // source at the origin
        const int i1 = i0 + 12;                        // sink at x = 1.5
        const ScalarField3 u = delta_field(spec, i0, j0, 0);
        const ScalarField3 v = delta_field(spec, i1, j0, 0);
        const ScalarField3 c =
            completion_field(u, v, fwd, bwd, p.alpha, 1.0);

        HeisCompletionField model;
        model.params = p;
        model.x1 = 1.5;
        // compare at 10 interior nodes on the theta = 0 slice
        real_t worst = 0;
        for (int t = 0; t < 10; ++t) {
            const int i = i0 + 1 + t;
            const real_t got = c(i, j0, 0) / p.alpha;  // alpha^{1/p} prefactor
            const real_t x = spec.x_of(i);
            const real_t want = std::sqrt(model(x, 0.0, 0.0));
            REQUIRE(got == Catch::Approx(want).epsilon(1e-6));
            worst = std::max(worst, std::abs(got - want));
        }
    }

    SECTION("exact field is invariant, contracted field is not") {
        DiffusionParams pe;
        pe.d11 = 0.3;
        pe.d22 = 0.3;
        pe.alpha = 4.0;  // fast decay: little kernel mass at the box edge
        GridSpec spec{20, 20, 8, 0.4};
        KernelGrid r = resolvent_kernel(pe, spec);
        // taper the outer ring to zero: the extreme row of an even centered
        // grid has no partner under a quarter turn, so kernel mass there is
        // an edge artifact, not part of the invariance statement
        for (int k = 0; k < spec.ntheta; ++k)
            for (int j = 0; j < spec.ny; ++j)
                for (int i = 0; i < spec.nx; ++i) {
                    const real_t m =
                        std::max(std::abs(spec.x_of(i)), std::abs(spec.y_of(j)));
                    const real_t taper =
                        std::clamp((3.2 - m) / 0.8, 0.0, 1.0);
                    r(i, j, k) *= taper;
                }
        // exact: completion field of translated delta pair equals the
        // translated completion field for a grid-exact action
        const int rot = spec.ntheta / 4;
        auto act_index = [&](int i, int j, int k, int& ai, int& aj, int& ak) {
            const int xs = i - spec.nx / 2, ys = j - spec.ny / 2;
            const int xr = ys, yr = -xs;  // rotate by -pi/2
            ai = ((xr + spec.nx / 2) % spec.nx + spec.nx) % spec.nx;
            aj = ((yr + spec.ny / 2) % spec.ny + spec.ny) % spec.ny;
            ak = ((k - rot) % spec.ntheta + spec.ntheta) % spec.ntheta;
        };
        const ScalarField3 u = delta_field(spec, 10, 10, 0);
        const ScalarField3 v = delta_field(spec, 13, 11, 2);
        const ScalarField3 base = completion_field(u, v, r, r, pe.alpha, 1.0);
        // act on the inputs
        ScalarField3 ua(spec), va(spec);
        for (int k = 0; k < spec.ntheta; ++k)
            for (int j = 0; j < spec.ny; ++j)
                for (int i = 0; i < spec.nx; ++i) {
                    int ai, aj, ak;
                    act_index(i, j, k, ai, aj, ak);
                    ua(i, j, k) = u(ai, aj, ak);
                    va(i, j, k) = v(ai, aj, ak);
                }
        const ScalarField3 moved = completion_field(ua, va, r, r, pe.alpha, 1.0);
        // two caveats for the comparison: the 1/(2p) root has unbounded
        // slope at zero (tail noise would dominate a plain sup norm), and on
        // an even centered grid the extreme row x = -L/2 has no +L/2 partner,
        // so the quarter turn is a bijection of the sample set only away from
        // that ring.  Compare on interior cells carrying field mass.
        real_t scale = 0;
        for (real_t v : base.data) scale = std::max(scale, v);
        real_t worst = 0;
        for (int k = 0; k < spec.ntheta; ++k)
            for (int j = 1; j < spec.ny; ++j)
                for (int i = 1; i < spec.nx; ++i) {
                    int ai, aj, ak;
                    act_index(i, j, k, ai, aj, ak);
                    if (ai == 0 || aj == 0) continue;
                    if (base(ai, aj, ak) < 1e-3 * scale) continue;
                    worst = std::max(worst,
                                     std::abs(moved(i, j, k) - base(ai, aj, ak)));
                }
        CHECK(worst < 1e-6 * scale);

        // contracted analogue: same exchange moves the field by more than
        // interpolation noise (demonstrated inequality, not a failure)
        DiffusionParams pd;
        pd.d11 = 0.1;
        pd.alpha = 0.5;
        HeisCompletionField hf;
        hf.params = pd;
        hf.x1 = 2.0;
        // rotate the pair by 90 degrees: the closed form has no covariance
        HeisCompletionField hf_rot = hf;
        real_t diff = 0;
        for (real_t x : {0.5, 1.0, 1.5}) {
            // evaluate the original at a rotated probe vs the rotated field:
            // for a covariant field these would agree; compare the 180-flip
            // against the midpoint symmetry axis instead
            diff = std::max(diff, std::abs(hf(x, 0.15, 0.2) -
                                           hf_rot(.5 + x * 0.0, 0.15, 0.2)));
        }
        // direct demonstration: shear translation does not equal group
        // translation away from theta = 0
        const real_t a1 = hf(1.0, 0.2, 0.5);
        const Se2Element shift(0.3, 0.1, 0.4);
        HeisCompletionField moved_field = hf;  // same parameters
        const Se2Element probe =
            compose(shift, Se2Element(1.0, 0.2, 0.5));
        const real_t a2 = moved_field(probe.x - 0.3, probe.y - 0.1,
                                      wrap_angle_signed(probe.theta) - 0.4);
        CHECK(std::abs(a1 - a2) > 1e-4 * std::max(a1, 1e-12));
    }
}

TEST_CASE("mode extraction from the closed-form field") {
    DiffusionParams p;
    p.d11 = 0.5;
    p.alpha = 1.0;
    HeisCompletionField f;
    f.params = p;
    f.x1 = 2.0;
    f.y1 = 0.5;
    f.theta0 = deg2rad(30.0);
    f.theta1 = deg2rad(-15.0);

    GridSpec spec{48, 40, 40, 0.05};
    auto sample_field = [&](real_t alpha) {
        DiffusionParams pp = p;
        pp.alpha = alpha;
        HeisCompletionField g = f;
        g.params = pp;
        ScalarField3 out(spec);
        for (int k = 0; k < spec.ntheta; ++k)
            for (int j = 0; j < spec.ny; ++j)
                for (int i = 0; i < spec.nx; ++i)
                    out(i, j, k) = g(spec.x_of(i) + 1.0,  // grid x in [-1.2, 1.2]
                                     spec.y_of(j) + 0.25,
                                     wrap_angle_signed(spec.theta_of(k)));
        return out;
    };
    const ScalarField3 field = sample_field(p.alpha);
    const ModeCurve curve = extract_mode_curve(field, DerivativePair::ThetaY);
    const ModePolynomials mode =
        mode_polynomials(f.x1, f.y1, f.theta0, f.theta1, 0.0, 0.0);

    int checked = 0;
    real_t worst = 0;
    for (const auto& s : curve.samples) {
        const real_t x = s.x + 1.0;
        if (x < 0.15 || x > 1.85 || !s.converged) continue;
        worst = std::max(worst, std::abs(s.y + 0.25 - mode.y(x)));
        ++checked;
    }
    INFO("checked " << checked << " slabs, worst |dy| = " << worst);
    REQUIRE(checked > 20);
    CHECK(worst < 1.5 * spec.spacing);

    SECTION("extraction does not depend on the lifetime rate") {
        const ScalarField3 f2 = sample_field(3.0);
        const ModeCurve c2 = extract_mode_curve(f2, DerivativePair::ThetaY);
        real_t dm = 0;
        for (std::size_t i = 0; i < std::min(curve.samples.size(), c2.samples.size());
             ++i) {
            if (!curve.samples[i].converged || !c2.samples[i].converged) continue;
            const real_t x = curve.samples[i].x + 1.0;
            if (x < 0.15 || x > 1.85) continue;
            dm = std::max(dm, std::abs(curve.samples[i].y - c2.samples[i].y));
        }
        CHECK(dm < 0.5 * spec.spacing);
    }
    SECTION("symmetric configuration extracts a symmetric curve") {
        HeisCompletionField g = f;
        g.y1 = 0.0;
        g.theta0 = deg2rad(20.0);
        g.theta1 = deg2rad(20.0);
        ScalarField3 out(spec);
        for (int k = 0; k < spec.ntheta; ++k)
            for (int j = 0; j < spec.ny; ++j)
                for (int i = 0; i < spec.nx; ++i)
                    out(i, j, k) = g(spec.x_of(i) + 1.0, spec.y_of(j),
                                     wrap_angle_signed(spec.theta_of(k)));
        const ModeCurve c = extract_mode_curve(out, DerivativePair::ThetaY);
        // y(x) should be symmetric about x1/2: compare mirrored slabs
        real_t dm = 0;
        const std::size_t n = c.samples.size();
        for (std::size_t i = 0; i < n / 2; ++i) {
            const auto& a = c.samples[i];
            const auto& b = c.samples[n - 1 - i];
            if (!a.converged || !b.converged) continue;
            const real_t xa = a.x + 1.0;
            if (xa < 0.15) continue;
            dm = std::max(dm, std::abs(a.y - b.y));
        }
        CHECK(dm < 0.5 * spec.spacing);
    }
}
