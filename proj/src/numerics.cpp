#include "vpe/numerics.hpp"

#include "vpe/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vpe::num {

const GaussRule& gauss8()
{
    static const GaussRule rule = [] {
        using Q = boost::math::quadrature::gauss<double, 8>;
        GaussRule r{};
        const auto& a = Q::abscissa();
        const auto& w = Q::weights();
        // boost stores the non-negative half of the symmetric rule.
        int k = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            r.nodes[k] = a[i];
            r.weights[k++] = w[i];
            if (a[i] != 0.0) {
                r.nodes[k] = -a[i];
                r.weights[k++] = w[i];
            }
        }
        return r;
    }();
    return rule;
}

double solve_increasing(const std::function<double(double)>& f, const std::function<double(double)>& df,
                        double target, double lo, double hi, RootOptions opt)
{
    double flo = f(lo) - target;
    double fhi = f(hi) - target;
    if (flo > 0.0) return lo;
    if (fhi < 0.0) return hi;
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < opt.max_iter; ++it) {
        const double fx = f(x) - target;
        if (fx == 0.0) return x;
        if (fx < 0.0) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        if (hi - lo <= opt.x_tol * std::max(1.0, std::abs(x))) return 0.5 * (lo + hi);
        double next = 0.5 * (lo + hi);
        // Newton once the bracket is tight enough to trust the local slope.
        if (df && (hi - lo) < 1e-2 * std::max(1.0, std::abs(x))) {
            const double d = df(x);
            if (d > 0.0 && std::isfinite(d)) {
                const double cand = x - fx / d;
                if (cand > lo && cand < hi) next = cand;
            }
        } else if (!df && flo != fhi) {
            const double cand = lo - flo * (hi - lo) / (fhi - flo);
            // Regula falsi stalls on one side; mix with bisection.
            if (cand > lo && cand < hi) next = 0.5 * (next + cand);
        }
        if (std::abs(next - x) <= 0.25 * opt.x_tol * std::max(1.0, std::abs(x))) return next;
        x = next;
    }
    return x;
}

double radical_inverse(std::uint64_t index, unsigned base)
{
    const double inv = 1.0 / base;
    double f = inv;
    double r = 0.0;
    while (index > 0) {
        r += f * static_cast<double>(index % base);
        index /= base;
        f *= inv;
    }
    return r;
}

Vec2 halton2(std::uint64_t index)
{
    return {radical_inverse(index + 1, 2), radical_inverse(index + 1, 3)};
}

double TanAxis::to_x(double u) const
{
    return center + scale * std::tan(0.5 * std::numbers::pi * u);
}

double TanAxis::to_u(double x) const
{
    return 2.0 / std::numbers::pi * std::atan((x - center) / scale);
}

double TanAxis::dx_du(double u) const
{
    const double c = std::cos(0.5 * std::numbers::pi * u);
    return scale * 0.5 * std::numbers::pi / (c * c);
}

double graded(double t, double a) { return t * (a + (1.0 - a) * std::abs(t)); }

std::vector<double> graded_nodes(int cells, double a)
{
    std::vector<double> out(cells + 1);
    for (int k = 0; k <= cells; ++k) out[k] = graded(-1.0 + 2.0 * k / cells, a);
    out.front() = -1.0;
    out.back() = 1.0;
    return out;
}

HermiteTable::HermiteTable(std::vector<double> knots, std::vector<double> values, std::vector<double> slopes)
: knots_(std::move(knots)), values_(std::move(values)), slopes_(std::move(slopes))
{
    if (knots_.size() < 2 || values_.size() != knots_.size() || slopes_.size() != knots_.size())
        throw ConfigurationError("Hermite table needs matching knots/values/slopes (>= 2)");
}

std::size_t HermiteTable::cell(double t) const
{
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    std::size_t i = static_cast<std::size_t>(std::distance(knots_.begin(), it));
    if (i == 0) return 0;
    return std::min(i - 1, knots_.size() - 2);
}

double HermiteTable::operator()(double t) const
{
    const std::size_t i = cell(t);
    const double h = knots_[i + 1] - knots_[i];
    const double s = (t - knots_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * values_[i] + h10 * h * slopes_[i] + h01 * values_[i + 1] + h11 * h * slopes_[i + 1];
}

double HermiteTable::derivative(double t) const
{
    const std::size_t i = cell(t);
    const double h = knots_[i + 1] - knots_[i];
    const double s = (t - knots_[i]) / h;
    const double s2 = s * s;
    const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1;
    const double d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;
    return (d00 * values_[i] + d01 * values_[i + 1]) / h + d10 * slopes_[i] + d11 * slopes_[i + 1];
}

double HermiteTable::inverse(double value) const
{
    auto it = std::upper_bound(values_.begin(), values_.end(), value);
    std::size_t i = static_cast<std::size_t>(std::distance(values_.begin(), it));
    i = (i == 0) ? 0 : std::min(i - 1, values_.size() - 2);
    return solve_increasing([this](double t) { return (*this)(t); }, [this](double t) { return derivative(t); },
                            value, knots_[i], knots_[i + 1], {1e-15, 200});
}

} // namespace vpe::num
