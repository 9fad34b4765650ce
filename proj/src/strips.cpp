#include "vpe/strips.hpp"

#include "vpe/errors.hpp"
#include "vpe/kernels.hpp"
#include "vpe/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace vpe {

namespace {

double softplus(double x) { return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double logistic(double x)
{
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

StripPartition strip_bounds(const DensityField& omega, const std::vector<double>& volumes, StripOptions opt)
{
    if (volumes.empty()) throw ConfigurationError("strip partition needs at least one volume");
    for (double v : volumes)
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigurationError("strip volumes must be positive and finite");
    const double mass = omega.mass().value();
    double sum = 0.0;
    for (double v : volumes) sum += v;
    if (std::isfinite(mass) && sum > mass + opt.volume_tolerance * std::max(1.0, mass)) {
        std::ostringstream os;
        os << "component volumes sum to " << sum << " but the target mass is only " << mass;
        throw InsufficientVolume(os.str());
    }
    StripPartition p;
    p.volumes = volumes;
    p.bounds.push_back(Extended::negative_infinity());
    double cumulative = 0.0;
    for (std::size_t i = 0; i < volumes.size(); ++i) {
        cumulative += volumes[i];
        const bool last = i + 1 == volumes.size();
        if (last && std::abs(cumulative - mass) <= opt.volume_tolerance * std::max(1.0, mass)) {
            p.bounds.push_back(Extended::infinity());
            break;
        }
        const double guess = omega.marginal_inverse(cumulative);
        // Polish against the marginal CDF within a bracket around the table inverse.
        const double lo_prev = p.bounds.back().is_infinite() ? -std::numeric_limits<double>::max()
                                                             : p.bounds.back().value();
        double lo = guess - 1e-3 * std::max(1.0, std::abs(guess)), hi = guess + 1e-3 * std::max(1.0, std::abs(guess));
        lo = std::max(lo, lo_prev);
        while (omega.marginal_cdf(lo) > cumulative && lo > lo_prev) lo -= (hi - lo);
        while (omega.marginal_cdf(hi) < cumulative) hi += (hi - lo);
        const double a = num::solve_increasing([&](double t) { return omega.marginal_cdf(t); },
                                               [&](double t) { return omega.marginal_density(t); }, cumulative,
                                               lo, hi, {opt.bound_tolerance, 200});
        p.bounds.push_back(Extended(a));
    }
    return p;
}

SmoothMap strip_map(Extended a, Extended b)
{
    if (!(a < b)) throw ConfigurationError("strip map needs a < b");
    if (a.is_positive_infinity() || b.is_negative_infinity()) throw ConfigurationError("strip map needs a < b");
    const bool ia = a.is_infinite(), ib = b.is_infinite();
    if (ia && ib) return SmoothMap::identity();
    const double av = a.value(), bv = b.value();
    std::function<double(double)> h, dh;
    std::string tag;
    if (!ia && !ib) {
        h = [=](double x) { return av + (bv - av) * logistic(x); };
        dh = [=](double x) {
            const double l = logistic(x);
            return (bv - av) * l * (1.0 - l);
        };
        tag = "tau[finite]";
    } else if (ib) {
        h = [=](double x) { return av + softplus(x); };
        dh = [](double x) { return logistic(x); };
        tag = "tau[lower]";
    } else {
        h = [=](double x) { return bv - softplus(-x); };
        dh = [](double x) { return logistic(-x); };
        tag = "tau[upper]";
    }
    return SmoothMap::from_functions(
        tag, [h](const Vec2& x) { return Vec2{h(x.x), x.y}; },
        [dh](const Vec2& x) { return Mat2::diag(dh(x.x), 1.0); });
}

double strip_volume(const DensityField& omega, Extended a, Extended b, int panels)
{
    // Polar coordinates: a ray from the origin meets {a < x1 < b} in one
    // r-interval, and r is tan-compactified so unbounded rays are finite.
    const double al = a.value(), bl = b.value();
    if (!(bl > al)) return 0.0;
    const double scale = omega.axis1().kind == Axis::Kind::real_line ? omega.axis1().tan.scale : 1.0;
    const double floor = 1e-14 * omega.reference_value() * scale;
    const double pi = std::numbers::pi;
    const std::vector<double> v_start = [&] {
        std::vector<double> n(panels + 1);
        for (int k = 0; k <= panels; ++k) n[k] = static_cast<double>(k) / panels;
        return n;
    }();
    auto ray = [&](double theta) {
        const double c = std::cos(theta), sn = std::sin(theta);
        const double ra = al / c, rb = bl / c;
        const double lo = std::max(0.0, std::min(ra, rb)), hi = std::max(ra, rb);
        if (!(hi > lo)) return 0.0;
        const double v0 = 2.0 / pi * std::atan(lo / scale);
        const double v1 = std::isinf(hi) ? 1.0 : 2.0 / pi * std::atan(hi / scale);
        auto g = [&](double t) {
            const double v = v0 + (v1 - v0) * t;
            const double r = scale * std::tan(0.5 * pi * v);
            const double dr = scale * 0.5 * pi / std::pow(std::cos(0.5 * pi * v), 2) * (v1 - v0);
            const double w = omega({r * c, r * sn});
            return w == 0.0 ? 0.0 : w * r * dr;
        };
        const double rough = num::gauss_over(g, v_start);
        return num::adaptive_gauss(g, v_start, std::max(1e-10 * std::abs(rough), floor));
    };
    // Two half-planes split at cos(theta) = 0 where the r-limits jump.
    std::vector<double> th;
    for (int k = 0; k <= 2 * panels; ++k) th.push_back(-0.5 * pi + 2.0 * pi * k / (2 * panels));
    std::vector<double> rough(th.size() - 1, 0.0), pieces(th.size() - 1, 0.0);
    kernels::for_each_index(rough.size(), kernels::Exec::parallel,
                            [&](std::size_t k) { rough[k] = num::gauss_panel(ray, th[k], th[k + 1]); });
    double mass = 0.0;
    for (double v : rough) mass += std::abs(v);
    const double tol = std::max(1e-10 * mass, floor * scale) / static_cast<double>(rough.size());
    kernels::for_each_index(pieces.size(), kernels::Exec::parallel, [&](std::size_t k) {
        pieces[k] = num::adaptive_gauss(ray, {th[k], th[k + 1]}, tol);
    });
    double total = 0.0;
    for (double v : pieces) total += v;
    return total;
}

} // namespace vpe
