#include "vpe/transport.hpp"

#include "vpe/errors.hpp"
#include "vpe/kernels.hpp"
#include "vpe/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace vpe {

namespace {

constexpr double kEdge = 1e-9;

double axis_scale(const Axis& a) { return a.kind == Axis::Kind::real_line ? a.tan.scale : a.hi - a.lo; }

// Cumulative slice mass over the x1 axis for slice-anchored transport.
class SliceTable
{
public:
    SliceTable(const DensityField& d, int grid) : axis_(d.axis1())
    {
        std::vector<double> knots(grid + 1), slopes(grid + 1), cell(grid);
        for (int j = 0; j <= grid; ++j) knots[j] = -1.0 + 2.0 * j / grid;
        auto p = [&](double u) {
            u = std::clamp(u, -1.0 + kEdge, 1.0 - kEdge);
            return d.slice_mass(axis_.to_x(u)) * axis_.dx_du(u);
        };
        kernels::for_each_index(grid, kernels::Exec::parallel, [&](std::size_t j) {
            cell[j] = num::gauss_panel(p, knots[j], knots[j + 1]);
            slopes[j] = p(knots[j]);
        });
        slopes[grid] = p(1.0);
        std::vector<double> values(grid + 1, 0.0);
        for (int j = 0; j < grid; ++j) {
            if (!(cell[j] >= 0.0) || !std::isfinite(cell[j]))
                throw DensityResolution("slice mass quadrature is not finite; refine the density grid");
            values[j + 1] = values[j] + cell[j];
        }
        table_ = num::HermiteTable(std::move(knots), std::move(values), std::move(slopes));
        origin_ = table_(axis_.to_u(0.0));
    }

    /// ∫_0^{x1} slice mass
    double anchored(double x1) const { return table_(std::clamp(axis_.to_u(x1), -1.0, 1.0)) - origin_; }
    double density(double x1) const
    {
        const double u = std::clamp(axis_.to_u(x1), -1.0 + kEdge, 1.0 - kEdge);
        return table_.derivative(u) / axis_.dx_du(u);
    }
    double inverse(double m) const
    {
        const double v = std::clamp(m + origin_, table_.front(), table_.back());
        return axis_.to_x(std::clamp(table_.inverse(v), -1.0 + kEdge, 1.0 - kEdge));
    }

private:
    Axis axis_;
    num::HermiteTable table_;
    double origin_ = 0.0;
};

} // namespace

struct TriangularMap::Impl : SmoothMap::Impl
{
    DensityField f, g;
    TriangularMap::Mode mode;
    double scale = 1.0;
    std::shared_ptr<SliceTable> slices_f, slices_g;

    Impl(DensityField f_, DensityField g_, TriangularMap::Mode m) : f(std::move(f_)), g(std::move(g_)), mode(m) {}

    double t1(double x1) const
    {
        switch (mode) {
        case Mode::finite: return g.marginal_inverse(f.marginal_cdf(x1) / scale);
        case Mode::anchored_slices: return slices_g->inverse(slices_f->anchored(x1));
        case Mode::anchored_lines: return x1;
        }
        return x1;
    }

    double d11(double x1, double t) const
    {
        switch (mode) {
        case Mode::finite: return f.marginal_density(x1) / (scale * g.marginal_density(t));
        case Mode::anchored_slices: return slices_f->density(x1) / slices_g->density(t);
        case Mode::anchored_lines: return 1.0;
        }
        return 1.0;
    }

    double t2(double x1, double t, double x2) const
    {
        if (mode == Mode::anchored_lines) {
            // Safeguarded Newton on G(s) = ∫_0^s g(x1, .), integrating only the step increments.
            const double target = f.anchored_line_integral(x1, x2);
            const double tol = 1e-12 * std::max(1.0, std::abs(target));
            double s = x2, big = g.anchored_line_integral(x1, s);
            double lo = -std::numeric_limits<double>::infinity(), hi = -lo;
            for (int k = 0; k < 400; ++k) {
                const double err = big - target;
                if (std::abs(err) <= tol) return s;
                (err < 0 ? lo : hi) = s;
                if (hi - lo <= 1e-15 * std::max(1.0, std::abs(s))) return s;
                double next = s - err / g({x1, s});
                if (!std::isfinite(next) || next <= lo || next >= hi) {
                    if (std::isfinite(lo) && std::isfinite(hi)) next = 0.5 * (lo + hi);
                    else next = err < 0 ? s + std::max(1.0, 2.0 * std::abs(s)) : s - std::max(1.0, 2.0 * std::abs(s));
                }
                if (std::abs(next) > 1e300) break;
                big += g.line_integral(x1, s, next);
                s = next;
            }
            throw AnchoringInfeasible("line integral of the target density does not reach the source's");
        }
        const auto cf = f.conditional(x1);
        const auto cg = g.conditional(t);
        return cg->inverse(cf->cdf(x2) * cg->total() / cf->total());
    }

    double d22(double x1, double t, double x2, double s) const
    {
        const double fx = f({x1, x2}), gy = g({t, s});
        if (mode == Mode::anchored_lines) return fx / gy;
        return fx / f.conditional(x1)->total() * g.conditional(t)->total() / gy;
    }

    Vec2 evaluate(const Vec2& x) const override
    {
        const double t = t1(x.x);
        return {t, t2(x.x, t, x.y)};
    }

    Mat2 jacobian(const Vec2& x) const override
    {
        const double t = t1(x.x);
        const double s = t2(x.x, t, x.y);
        const double h = 1e-5 * std::max(1.0, std::abs(x.x));
        const double sp = t2(x.x + h, t1(x.x + h), x.y);
        const double sm = t2(x.x - h, t1(x.x - h), x.y);
        return {d11(x.x, t), 0.0, (sp - sm) / (2.0 * h), d22(x.x, t, x.y, s)};
    }

    bool has_analytic_jacobian() const override { return true; }
};

double TriangularMap::t1(double x1) const { return impl->t1(x1); }

std::pair<double, double> TriangularMap::diagonal(const Vec2& x) const
{
    const double t = impl->t1(x.x);
    const double s = impl->t2(x.x, t, x.y);
    return {impl->d11(x.x, t), impl->d22(x.x, t, x.y, s)};
}

std::pair<double, double> TriangularMap::difference_diagonal(const Vec2& x) const
{
    const double h1 = 1e-5 * std::max(1.0, std::abs(x.x)), h2 = 1e-5 * std::max(1.0, std::abs(x.y));
    const double a = (impl->t1(x.x + h1) - impl->t1(x.x - h1)) / (2.0 * h1);
    const double t = impl->t1(x.x);
    const double b = (impl->t2(x.x, t, x.y + h2) - impl->t2(x.x, t, x.y - h2)) / (2.0 * h2);
    return {a, b};
}

namespace {

TriangularMap package(std::shared_ptr<TriangularMap::Impl> impl, std::string tag)
{
    impl->tag = std::move(tag);
    TriangularMap out;
    out.mode = impl->mode;
    out.mass_scale = impl->scale;
    out.impl = impl;
    out.map = SmoothMap(impl);
    return out;
}

// Integral of the slice mass over [a, b] in x1 with `panels` Gauss panels.
double slice_integral(const DensityField& d, double a, double b, int panels)
{
    return num::gauss_composite([&](double x1) { return d.slice_mass(x1); }, a, b, panels);
}

bool slice_tails_diverge(const DensityField& d, int direction)
{
    const double s = axis_scale(d.axis1()) * (direction >= 0 ? 1.0 : -1.0);
    const double i1 = std::abs(slice_integral(d, 0.0, 10.0 * s, 40));
    const double i2 = i1 + std::abs(slice_integral(d, 10.0 * s, 100.0 * s, 40));
    const double i3 = i2 + std::abs(slice_integral(d, 100.0 * s, 1000.0 * s, 40));
    return (i3 - i2) > 0.5 * (i2 - i1) && (i3 - i2) > 1e-3 * i3;
}

enum class LineKind { finite, infinite, mixed };

LineKind classify_lines(const DensityField& d)
{
    const double s = axis_scale(d.axis1());
    int infinite = 0, total = 0;
    for (double p : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
        for (int dir : {-1, 1}) {
            ++total;
            if (d.line_diverges(p * s, dir)) ++infinite;
        }
    }
    if (infinite == 0) return LineKind::finite;
    if (infinite == total) return LineKind::infinite;
    return LineKind::mixed;
}

} // namespace

TriangularMap knothe_map(const DensityField& f, const DensityField& g, TransportOptions opt)
{
    if (!f.finite_mass() || !g.finite_mass())
        throw MassMismatch("knothe_map needs finite masses; use anchored_knothe for infinite ones");
    const double mf = f.mass().value(), mg = g.mass().value();
    const double rel = std::abs(mf - mg) / mf;
    if (rel > opt.mass_tolerance) {
        std::ostringstream os;
        os << "source mass " << mf << " and target mass " << mg << " differ by " << rel << " (relative)";
        throw MassMismatch(os.str());
    }
    auto impl = std::make_shared<TriangularMap::Impl>(f, g, TriangularMap::Mode::finite);
    impl->scale = mf / mg;
    return package(impl, "knothe");
}

TriangularMap anchored_knothe(const DensityField& f, const DensityField& g, TransportOptions)
{
    if (f.finite_mass() || g.finite_mass())
        throw FiniteMassForAnchored("anchored transport needs infinite masses; use knothe_map");
    const LineKind lf = classify_lines(f), lg = classify_lines(g);
    if (lf == LineKind::infinite && lg == LineKind::infinite) {
        auto impl = std::make_shared<TriangularMap::Impl>(f, g, TriangularMap::Mode::anchored_lines);
        return package(impl, "anchored_knothe[lines]");
    }
    if (lf == LineKind::finite && lg == LineKind::finite) {
        for (const DensityField* d : {&f, &g})
            for (int dir : {-1, 1})
                if (!slice_tails_diverge(*d, dir))
                    throw AnchoringInfeasible(std::string("slice masses of the ") + (d == &f ? "source" : "target") +
                                              " density are integrable towards x1 = " + (dir > 0 ? "+" : "-") +
                                              "inf; anchored balance cannot be onto");
        auto impl = std::make_shared<TriangularMap::Impl>(f, g, TriangularMap::Mode::anchored_slices);
        impl->slices_f = std::make_shared<SliceTable>(f, f.options().grid);
        impl->slices_g = std::make_shared<SliceTable>(g, g.options().grid);
        return package(impl, "anchored_knothe[slices]");
    }
    throw AnchoringInfeasible("source and target vertical lines are not uniformly of finite or of "
                              "two-sided infinite mass");
}

double transport_residual(const TriangularMap& t, const DensityField& f, const DensityField& g, const Vec2& x)
{
    const Vec2 y = t(x);
    const auto [a, b] = t.diagonal(x);
    const double fx = f(x);
    return std::abs(t.mass_scale * g(y) * a * b - fx) / fx;
}

} // namespace vpe
