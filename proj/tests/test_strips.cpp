#include "vpe/errors.hpp"
#include "vpe/strips.hpp"

#include <doctest.h>

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <numbers>

using namespace vpe;
using std::numbers::pi;

namespace {

DensityField standard_gaussian(double mass)
{
    return DensityField([mass](const Vec2& x) { return mass * std::exp(-0.5 * x.dot(x)) / (2 * pi); },
                        Axis::real_line(1.0), Axis::real_line(1.0));
}

} // namespace

TEST_CASE("strip bounds of a Gaussian are normal quantiles")
{
    const boost::math::normal n;
    const DensityField g = standard_gaussian(1.0);
    const StripPartition p = strip_bounds(g, {0.2, 0.5, 0.3});
    REQUIRE(p.size() == 3);
    CHECK(p.lower(0).is_negative_infinity());
    CHECK(p.upper(0).value() == doctest::Approx(quantile(n, 0.2)).epsilon(1e-7));
    CHECK(p.upper(1).value() == doctest::Approx(quantile(n, 0.7)).epsilon(1e-7));
    CHECK(p.upper(2).is_positive_infinity());
}

TEST_CASE("strict partitions leave a finite last bound")
{
    const boost::math::normal n;
    const StripPartition p = strip_bounds(standard_gaussian(2.0), {0.5, 0.5});
    CHECK(p.upper(1).value() == doctest::Approx(quantile(n, 0.5)).epsilon(1e-7).scale(1.0));
    CHECK_THROWS_AS(strip_bounds(standard_gaussian(1.0), {0.7, 0.4}), InsufficientVolume);
    CHECK_THROWS_AS(strip_bounds(standard_gaussian(1.0), {}), ConfigurationError);
    CHECK_THROWS_AS(strip_bounds(standard_gaussian(1.0), {-0.1}), ConfigurationError);
}

TEST_CASE("independent strip volume matches the normal CDF")
{
    const boost::math::normal n;
    const DensityField g = standard_gaussian(1.0);
    CHECK(strip_volume(g, Extended(-0.4), Extended(1.3)) == doctest::Approx(cdf(n, 1.3) - cdf(n, -0.4)).epsilon(1e-9));
    CHECK(strip_volume(g, Extended::negative_infinity(), Extended(0.25)) ==
          doctest::Approx(cdf(n, 0.25)).epsilon(1e-9));
    CHECK(strip_volume(g, Extended::negative_infinity(), Extended::infinity()) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("strip maps are orientation-preserving diffeomorphisms onto the strip")
{
    const SmoothMap s = strip_map(Extended(-1.0), Extended(2.0));
    for (double x : {-8.0, -5.0, 0.0, 3.0, 8.0}) {
        const Vec2 y = s({x, 0.7});
        CHECK(y.x > -1.0);
        CHECK(y.x < 2.0);
        CHECK(y.y == 0.7);
    }
    CHECK(s({-1e3, 0}).x - -1.0 < 1e-3);
    CHECK(2.0 - s({1e3, 0}).x < 1e-3);
    CHECK(jacobian_det(s, {0.3, 0.1}) > 0.0);
    const Mat2 d = s.jacobian({0.3, 0.1}) - s.fd_jacobian({0.3, 0.1});
    CHECK(d.max_abs() < 1e-7);
    const SmoothMap half = strip_map(Extended(1.0), Extended::infinity());
    CHECK(half({-10.0, 0}).x > 1.0);
    CHECK(half({50.0, 0}).x > 40.0);
    CHECK_THROWS_AS(strip_map(Extended(2.0), Extended(1.0)), ConfigurationError);
}
