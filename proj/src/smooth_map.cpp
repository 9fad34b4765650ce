#include "vpe/smooth_map.hpp"

#include "vpe/errors.hpp"

#include <algorithm>
#include <sstream>

namespace vpe {

Mat2 fd_jacobian(const std::function<Vec2(const Vec2&)>& f, const Vec2& x, double h)
{
    const double h0 = h * std::max(1.0, std::abs(x.x));
    const double h1 = h * std::max(1.0, std::abs(x.y));
    const Vec2 d0 = (f({x.x + h0, x.y}) - f({x.x - h0, x.y})) / (2.0 * h0);
    const Vec2 d1 = (f({x.x, x.y + h1}) - f({x.x, x.y - h1})) / (2.0 * h1);
    return Mat2::columns(d0, d1);
}

namespace {

class FunctionMap final : public SmoothMap::Impl
{
public:
    FunctionMap(SmoothMap::EvalFn eval, std::optional<SmoothMap::JacFn> jac, SmoothMap::DomainFn domain)
    : eval_(std::move(eval)), jac_(std::move(jac)), domain_(std::move(domain)) {}

    Vec2 evaluate(const Vec2& x) const override
    {
        if (domain_ && !domain_(x)) {
            std::ostringstream os;
            os << "map '" << tag << "' evaluated outside its domain at (" << x.x << ", " << x.y << ")";
            throw DomainViolation(os.str());
        }
        return eval_(x);
    }

    Mat2 jacobian(const Vec2& x) const override
    {
        if (jac_) return (*jac_)(x);
        return fd_jacobian([this](const Vec2& p) { return eval_(p); }, x, fd_step);
    }

    bool has_analytic_jacobian() const override { return jac_.has_value(); }

private:
    SmoothMap::EvalFn eval_;
    std::optional<SmoothMap::JacFn> jac_;
    SmoothMap::DomainFn domain_;
};

class ComposedMap final : public SmoothMap::Impl
{
public:
    ComposedMap(SmoothMap outer, SmoothMap inner) : outer_(std::move(outer)), inner_(std::move(inner))
    {
        tag = outer_.tag() + " o " + inner_.tag();
        fd_step = std::min(outer_.fd_step(), inner_.fd_step());
    }

    Vec2 evaluate(const Vec2& x) const override { return outer_.evaluate(inner_.evaluate(x)); }

    Mat2 jacobian(const Vec2& x) const override
    {
        return outer_.jacobian(inner_.evaluate(x)) * inner_.jacobian(x);
    }

    bool has_analytic_jacobian() const override
    {
        return outer_.has_analytic_jacobian() && inner_.has_analytic_jacobian();
    }

    double det(const Vec2& x) const override
    {
        double d;
        evaluate_det(x, d);
        return d;
    }

    Vec2 evaluate_det(const Vec2& x, double& d) const override
    {
        double di, dout;
        const Vec2 y = inner_.evaluate_det(x, di);
        const Vec2 z = outer_.evaluate_det(y, dout);
        d = di * dout;
        return z;
    }

private:
    SmoothMap outer_;
    SmoothMap inner_;
};

} // namespace

SmoothMap::SmoothMap() : SmoothMap(identity()) {}

SmoothMap SmoothMap::from_functions(std::string tag, EvalFn eval, std::optional<JacFn> jac, DomainFn domain,
                                    double fd_step)
{
    auto impl = std::make_shared<FunctionMap>(std::move(eval), std::move(jac), std::move(domain));
    impl->tag = std::move(tag);
    impl->fd_step = fd_step;
    return SmoothMap(std::move(impl));
}

SmoothMap SmoothMap::identity()
{
    static const SmoothMap id = from_functions(
        "identity", [](const Vec2& x) { return x; }, [](const Vec2&) { return Mat2::identity(); });
    return id;
}

SmoothMap SmoothMap::linear(const Mat2& m, std::string tag)
{
    return from_functions(
        std::move(tag), [m](const Vec2& x) { return m * x; }, [m](const Vec2&) { return m; });
}

SmoothMap SmoothMap::reflect_x1()
{
    return linear(Mat2::diag(-1.0, 1.0), "reflect_x1");
}

Mat2 SmoothMap::fd_jacobian(const Vec2& x) const
{
    return vpe::fd_jacobian([this](const Vec2& p) { return evaluate(p); }, x, fd_step());
}

SmoothMap compose(const SmoothMap& outer, const SmoothMap& inner)
{
    return SmoothMap(std::make_shared<ComposedMap>(outer, inner));
}

double jacobian_det(const SmoothMap& map, const Vec2& x)
{
    const double d = map.det(x);
    if (!std::isfinite(d)) {
        std::ostringstream os;
        os << "non-finite Jacobian of '" << map.tag() << "' at (" << x.x << ", " << x.y << ")";
        throw NumericalError(os.str());
    }
    return d;
}

SmoothMap ensure_orientation(const SmoothMap& map, const Vec2& probe)
{
    const double d = jacobian_det(map, probe);
    if (d == 0.0) throw DegenerateMap("zero Jacobian determinant of '" + map.tag() + "' at the probe point");
    if (d > 0.0) return map;
    return compose(map, SmoothMap::reflect_x1());
}

} // namespace vpe
