#include "vpe/errors.hpp"
#include "vpe/manifold.hpp"

#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>

using namespace vpe;
using std::numbers::pi;

namespace {

// Cut time of a lattice whose Voronoi cell has the given inradius-normal family:
// mu(theta) = min over normals n of h_n / <u, n>, h_n = |w|/2.
double voronoi_cut(const std::vector<Vec2>& w, double theta)
{
    const Vec2 u{std::cos(theta), std::sin(theta)};
    double best = INFINITY;
    for (const Vec2& v : w) {
        const double c = u.dot(v) / v.norm();
        if (c > 1e-15) best = std::min(best, 0.5 * v.norm() / c);
    }
    return best;
}

} // namespace

TEST_CASE("square torus cut time: 1/2 / max(|cos|, |sin|)")
{
    const auto m = ModelManifold::flat_torus({1, 0}, {0, 1});
    const auto p = cut_time_profile(m);
    for (int k = 0; k < 360; ++k) {
        const double t = 2 * pi * k / 360;
        const double expect = 0.5 / std::max(std::abs(std::cos(t)), std::abs(std::sin(t)));
        CHECK(p.value(t) == doctest::Approx(expect).epsilon(1e-14));
    }
    CHECK(p.inf_value() == doctest::Approx(0.5));
    CHECK(p.sup_value() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
    CHECK(p.regularity() == ProfileRegularity::piecewise);
}

TEST_CASE("hexagonal torus cut time matches the six Voronoi faces")
{
    const Vec2 w1{1, 0}, w2{0.5, std::sqrt(3.0) / 2};
    const auto m = ModelManifold::flat_torus(w1, w2);
    const std::vector<Vec2> faces{w1, w2, w2 - w1, w1 * -1.0, w2 * -1.0, w1 - w2};
    for (int k = 0; k < 720; ++k) {
        const double t = 2 * pi * k / 720;
        CHECK(cut_time(m, t).value() == doctest::Approx(voronoi_cut(faces, t)).epsilon(1e-13));
    }
}

TEST_CASE("lattice_vectors_within agrees with a brute-force count")
{
    const Vec2 w1{1.0, 0.2}, w2{-0.3, 0.9};
    const double R = 3.1;
    int count = 0;
    for (int i = -40; i <= 40; ++i)
        for (int j = -40; j <= 40; ++j)
            if ((i || j) && (w1 * i + w2 * j).norm() <= R) ++count;
    CHECK(lattice_vectors_within(w1, w2, R).size() == static_cast<std::size_t>(count));
    CHECK_THROWS_AS(lattice_vectors_within({1, 1}, {2, 2}, 1.0), ConfigurationError);
}

TEST_CASE("sphere, cylinder and plane cut times")
{
    CHECK(cut_time(ModelManifold::round_sphere(2.0), 0.7).value() == doctest::Approx(2 * pi));
    const auto cyl = ModelManifold::flat_cylinder(3.0);
    for (double t : {0.0, 0.3, 1.0, 2.5, 4.0})
        CHECK(cut_time(cyl, t).value() == doctest::Approx(1.5 / std::abs(std::cos(t))));
    CHECK(cut_time(cyl, pi / 2).value() > 1e15);  // cos(pi/2) rounds to 6e-17
    const auto plane = ModelManifold::plane_with_density({});
    CHECK(cut_time(plane, 1.0).is_infinite());
    CHECK(cut_time_profile(plane).regularity() == ProfileRegularity::infinite);
}

TEST_CASE("total volumes")
{
    CHECK(total_volume(ModelManifold::flat_torus({2, 0}, {0.5, 3})).value.value() == doctest::Approx(6.0));
    CHECK(total_volume(ModelManifold::round_sphere(1.5)).value.value() == doctest::Approx(4 * pi * 2.25));
    CHECK(total_volume(ModelManifold::flat_cylinder(1.0)).value.is_infinite());
    CHECK(total_volume(ModelManifold::plane_with_density({})).value.is_infinite());
    PlaneDensity g{PlaneDensity::Kind::gaussian, 3.0, 0.7};
    const auto r = total_volume(ModelManifold::plane_with_density(g));
    CHECK(r.value.value() == doctest::Approx(3.0 * 2 * pi * 0.49).epsilon(1e-8));
}

TEST_CASE("sphere exponential map: geodesic distance and analytic Jacobian")
{
    const double R = 1.3;
    const auto m = ModelManifold::round_sphere(R);
    for (Vec2 x : {Vec2{0.2, 0.1}, Vec2{-1.0, 2.0}, Vec2{2.5, -1.7}}) {
        const Vec2 y = exp_chart(m, x);
        // From the north pole, latitude drops by |x| / R.
        CHECK(y.y == doctest::Approx(pi / 2 - x.norm() / R).epsilon(1e-13));
        const Mat2 d = exp_chart_jacobian(m, x) - fd_jacobian([&](const Vec2& p) { return exp_chart(m, p); }, x);
        CHECK(d.max_abs() < 1e-7);
        // Pulled-back area: chart density times det equals R sin(s/R) / s.
        const double pulled = m.chart_density(y) * exp_chart_jacobian(m, x).det();
        CHECK(pulled == doctest::Approx(m.exp_density(x)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(exp_chart(m, {pi * R + 0.01, 0.0}), ChartRangeError);
}

TEST_CASE("flat charts wrap into the fundamental cell")
{
    const auto t = ModelManifold::flat_torus({1, 0}, {0, 1});
    const Vec2 y = exp_chart(t, {2.25, -0.75});
    CHECK(y.x == doctest::Approx(0.25));
    CHECK(y.y == doctest::Approx(0.25));
    CHECK(t.chart_distance({0.05, 0.5}, {0.95, 0.5}) == doctest::Approx(0.1));
    const auto c = ModelManifold::flat_cylinder(2.0);
    CHECK(exp_chart(c, {-0.5, 7.0}).x == doctest::Approx(1.5));
    CHECK(exp_chart(c, {-0.5, 7.0}).y == 7.0);
}

TEST_CASE("pullback density integrates to the manifold volume")
{
    // rho = identity on the plane with a gaussian density: the pullback is the density itself.
    PlaneDensity g{PlaneDensity::Kind::gaussian, 1.0, 1.0};
    const auto m = ModelManifold::plane_with_density(g);
    const DensityField d = pullback_density(m, SmoothMap::identity(), DensityField::MassKind::finite);
    CHECK(d({0.3, -0.4}) == doctest::Approx(std::exp(-0.125)));
    CHECK(d.mass().value() == doctest::Approx(2 * pi).epsilon(1e-7));
}
