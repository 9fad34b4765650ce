#include "vpe/errors.hpp"
#include "vpe/transport.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace vpe;
using std::numbers::pi;

namespace {

DensityField unit_square(DensityField::Fn f)
{
    return DensityField(std::move(f), Axis::interval(0, 1), Axis::interval(0, 1));
}

} // namespace

TEST_CASE("uniform to 2 y1 on the unit square: T1 = sqrt(x1)")
{
    const auto f = unit_square([](const Vec2&) { return 1.0; });
    const auto g = unit_square([](const Vec2& y) { return 2.0 * y.x; });
    const TriangularMap t = knothe_map(f, g);
    for (int i = 1; i < 100; ++i) {
        const double x1 = i / 100.0;
        CHECK(t.t1(x1) == doctest::Approx(std::sqrt(x1)).epsilon(1e-8));
        const Vec2 y = t({x1, 0.37});
        CHECK(y.y == doctest::Approx(0.37).epsilon(1e-8));
        CHECK(transport_residual(t, f, g, {x1, 0.37}) < 1e-6);
    }
}

TEST_CASE("separable densities: T2 is the 1D map x2^(1/3), independent of x1")
{
    const auto f = unit_square([](const Vec2&) { return 1.0; });
    const auto g = unit_square([](const Vec2& y) { return (0.5 + y.x) * 3.0 * y.y * y.y; });
    const TriangularMap t = knothe_map(f, g);
    for (double x1 : {0.1, 0.5, 0.9})
        for (double x2 : {0.05, 0.3, 0.8}) CHECK(t({x1, x2}).y == doctest::Approx(std::cbrt(x2)).epsilon(1e-8));
    // T1 solves (t^2 + t) / 2 = x1.
    for (double x1 : {0.2, 0.6}) CHECK(t.t1(x1) == doctest::Approx((-1 + std::sqrt(1 + 8 * x1)) / 2).epsilon(1e-8));
}

TEST_CASE("Gaussian to wider Gaussian on the plane is linear scaling")
{
    const double s = 2.0;
    auto gauss = [](double sig) {
        return [sig](const Vec2& x) { return std::exp(-x.dot(x) / (2 * sig * sig)) / (2 * pi * sig * sig); };
    };
    const DensityField f(gauss(1.0), Axis::real_line(1.0), Axis::real_line(1.0));
    const DensityField g(gauss(s), Axis::real_line(2.0), Axis::real_line(2.0));
    const TriangularMap t = knothe_map(f, g);
    for (Vec2 x : {Vec2{0.3, -0.2}, Vec2{-1.5, 1.0}, Vec2{2.0, 0.5}}) {
        const Vec2 y = t(x);
        CHECK(y.x == doctest::Approx(s * x.x).epsilon(1e-6));
        CHECK(y.y == doctest::Approx(s * x.y).epsilon(1e-6));
        const auto [a, b] = t.diagonal(x);
        const auto [fa, fb] = t.difference_diagonal(x);
        CHECK(a == doctest::Approx(fa).epsilon(1e-5));
        CHECK(b == doctest::Approx(fb).epsilon(1e-5));
    }
}

TEST_CASE("negative control: the identity does not transport uniform to 2 y1")
{
    const auto f = unit_square([](const Vec2&) { return 1.0; });
    const auto g = unit_square([](const Vec2& y) { return 2.0 * y.x; });
    double worst = 0.0;
    for (int i = 1; i < 20; ++i) worst = std::max(worst, std::abs(g({i / 20.0, 0.5}) - f({i / 20.0, 0.5})));
    CHECK(worst > 1e-1);
}

TEST_CASE("mass mismatch and mode errors")
{
    const auto f = unit_square([](const Vec2&) { return 1.0; });
    const auto g = unit_square([](const Vec2&) { return 2.0; });
    CHECK_THROWS_AS(knothe_map(f, g), MassMismatch);
    CHECK_THROWS_AS(anchored_knothe(f, f), FiniteMassForAnchored);
}

TEST_CASE("line-mode anchored transport of Lebesgue onto itself is the identity")
{
    auto one = [](const Vec2&) { return 1.0; };
    const DensityField f(one, Axis::real_line(4.0), Axis::real_line(4.0), DensityField::MassKind::infinite);
    auto two = [](const Vec2& y) { return 1.0 + 0.5 * std::tanh(y.y); };
    const DensityField g(two, Axis::real_line(4.0), Axis::real_line(4.0), DensityField::MassKind::infinite);
    const TriangularMap id = anchored_knothe(f, f);
    CHECK(id({1.5, -2.0}).y == doctest::Approx(-2.0).epsilon(1e-10));
    // g line integral from 0 to s is s + 0.5 log cosh s; T2 solves it equal to x2.
    const TriangularMap t = anchored_knothe(f, g);
    for (double x2 : {-3.0, -0.5, 0.7, 4.0}) {
        const double s = t({0.3, x2}).y;
        CHECK(s + 0.5 * std::log(std::cosh(s)) == doctest::Approx(x2).epsilon(1e-10));
        CHECK(transport_residual(t, f, g, {0.3, x2}) < 1e-10);
    }
}
