#include "vpe/errors.hpp"
#include "vpe/straighten.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace vpe;
using std::numbers::pi;

namespace {

double square_mu(double t) { return 0.5 / std::max(std::abs(std::cos(t)), std::abs(std::sin(t))); }

double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

} // namespace

TEST_CASE("flat_step is a smooth monotone step")
{
    CHECK(flat_step(-1.0) == 0.0);
    CHECK(flat_step(0.0) == 0.0);
    CHECK(flat_step(1.0) == 1.0);
    CHECK(flat_step(2.0) == 1.0);
    CHECK(flat_step(0.5) == doctest::Approx(0.5));
    CHECK(flat_step(0.02) < 1e-10);  // flat at zero
    double prev = 0.0;
    for (double u = 0.01; u < 1.0; u += 0.01) {
        CHECK(flat_step(u) >= prev);
        prev = flat_step(u);
        const double h = 1e-6;
        CHECK(flat_step_derivative(u) == doctest::Approx((flat_step(u + h) - flat_step(u - h)) / (2 * h)).epsilon(1e-5));
    }
}

TEST_CASE("minorant ladder on the square torus is strictly increasing and below mu")
{
    const auto m = ModelManifold::flat_torus({1, 0}, {0, 1});
    const auto profile = cut_time_profile(m);
    const MinorantLadder ladder = build_minorants(profile, 12);
    REQUIRE(ladder.size() == 12);
    for (int k = 0; k < 720; ++k) {
        const double t = 2 * pi * k / 720;
        const double mu = square_mu(t);
        double prev = 0.0;
        for (int i = 1; i <= ladder.size(); ++i) {
            const double v = ladder.value(i, t);
            CHECK(v < mu);
            CHECK(v > prev);
            prev = v;
        }
    }
    // Derivative against central differences on a smooth stage.
    for (double t : {0.1, 1.0, 2.2}) {
        const double h = 1e-6;
        const double fd = (ladder.value(3, t + h) - ladder.value(3, t - h)) / (2 * h);
        CHECK(ladder.derivative(3, t) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
}

TEST_CASE("ladder straightening of the square torus: rays, range, identity core, Jacobian")
{
    const auto m = ModelManifold::flat_torus({1, 0}, {0, 1});
    const auto profile = cut_time_profile(m);
    const MinorantLadder ladder = build_minorants(profile, 24);
    const SmoothMap rho = straighten(profile, ladder);
    const StarlikeDomain S(profile);
    for (int k = 0; k < 200; ++k) {
        const double t = 2 * pi * k / 200 + 0.001;
        for (double r : {0.01, 0.2, 0.7, 3.0, 40.0, 1e3}) {
            const Vec2 x = unit_direction(t) * r;
            const Vec2 y = rho(x);
            CHECK(std::abs(cross(x, y)) <= 1e-12 * r * y.norm());
            CHECK(x.dot(y) > 0.0);
            CHECK(S.contains(y));
        }
        // Onto up to 1e-3 at radius 1e3.
        CHECK(square_mu(t) - rho(unit_direction(t) * 1e3).norm() < 1e-3);
    }
    const double core = 0.5 * ladder.r0();
    CHECK(rho({0.3 * core, 0.2 * core}) == Vec2{0.3 * core, 0.2 * core});
    for (Vec2 x : {Vec2{0.3, 0.1}, Vec2{-0.2, 0.45}, Vec2{2.0, -1.0}}) {
        const Mat2 d = rho.jacobian(x) - rho.fd_jacobian(x);
        CHECK(d.max_abs() < 1e-6 * std::max(1.0, rho.jacobian(x).max_abs()));
        CHECK(jacobian_det(rho, x) > 0.0);
    }
}

TEST_CASE("simple ray maps follow the closed-form saturation")
{
    const auto sphere = ModelManifold::round_sphere(1.0);
    const auto profile = cut_time_profile(sphere);
    const SmoothMap rho = simple_ray_map(profile);
    for (double r : {0.1, 1.0, 5.0}) {
        const Vec2 y = rho({r, 0.0});
        CHECK(y.x == doctest::Approx(pi * (1 - std::exp(-r / pi))).epsilon(1e-13));
    }
    const auto cyl = cut_time_profile(ModelManifold::flat_cylinder(1.0));
    const SmoothMap t = simple_ray_map(cyl, Saturation::hyperbolic_tangent);
    // Along x1 the cut time is 1/2: f = 0.5 tanh(2 r).
    CHECK(t({0.4, 0.0}).x == doctest::Approx(0.5 * std::tanh(0.8)).epsilon(1e-13));
    // Vertical rays never reach a cut point.
    CHECK(t({0.0, 7.0}).y == doctest::Approx(7.0));
    const auto torus = cut_time_profile(ModelManifold::flat_torus({1, 0}, {0, 1}));
    CHECK_THROWS_AS(simple_ray_map(torus), RefusedProfile);
}
