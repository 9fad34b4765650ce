#pragma once

#include "vpe/geometry.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace vpe {

/// Central-difference Jacobian of `f` at x with step `h` scaled by the local
/// coordinate magnitude (h * max(1, |x_j|)).
Mat2 fd_jacobian(const std::function<Vec2(const Vec2&)>& f, const Vec2& x, double h = 1e-5);

/// An immutable smooth map between plane regions.
///
/// Values are cheap to copy (shared immutable state) and safe to evaluate
/// from any number of threads. The Jacobian is analytic when the builder
/// supplied one, otherwise central finite differences with step `fd_step`.
/// Domain membership is advisory: when a predicate is attached, evaluation
/// spot-checks it and raises DomainViolation naming the map.
class SmoothMap
{
public:
    using EvalFn = std::function<Vec2(const Vec2&)>;
    using JacFn = std::function<Mat2(const Vec2&)>;
    using DomainFn = std::function<bool(const Vec2&)>;

    struct Impl
    {
        virtual ~Impl() = default;
        virtual Vec2 evaluate(const Vec2& x) const = 0;
        virtual Mat2 jacobian(const Vec2& x) const = 0;
        virtual bool has_analytic_jacobian() const = 0;
        /// det of the Jacobian; overridden where a cheaper or more accurate form exists.
        virtual double det(const Vec2& x) const { return jacobian(x).det(); }
        /// evaluate(x) together with det(x).
        virtual Vec2 evaluate_det(const Vec2& x, double& d) const
        {
            d = det(x);
            return evaluate(x);
        }
        std::string tag;
        double fd_step = 1e-5;
    };

    SmoothMap();  // identity
    explicit SmoothMap(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

    static SmoothMap from_functions(std::string tag, EvalFn eval, std::optional<JacFn> jac = std::nullopt,
                                    DomainFn domain = nullptr, double fd_step = 1e-5);
    static SmoothMap identity();
    static SmoothMap linear(const Mat2& m, std::string tag = "linear");
    /// (x1, x2) -> (-x1, x2)
    static SmoothMap reflect_x1();

    Vec2 operator()(const Vec2& x) const { return evaluate(x); }
    Vec2 evaluate(const Vec2& x) const { return impl_->evaluate(x); }
    Mat2 jacobian(const Vec2& x) const { return impl_->jacobian(x); }
    /// Finite-difference Jacobian regardless of whether an analytic one exists.
    Mat2 fd_jacobian(const Vec2& x) const;
    bool has_analytic_jacobian() const { return impl_->has_analytic_jacobian(); }
    double det(const Vec2& x) const { return impl_->det(x); }
    Vec2 evaluate_det(const Vec2& x, double& d) const { return impl_->evaluate_det(x, d); }
    const std::string& tag() const { return impl_->tag; }
    double fd_step() const { return impl_->fd_step; }

private:
    std::shared_ptr<const Impl> impl_;
};

/// outer ∘ inner, with the chain-rule Jacobian.
SmoothMap compose(const SmoothMap& outer, const SmoothMap& inner);

/// Determinant of the Jacobian at x; throws NumericalError on non-finite entries.
double jacobian_det(const SmoothMap& map, const Vec2& x);

/// Returns `map` if it preserves orientation at `probe`, otherwise map ∘ reflect_x1.
SmoothMap ensure_orientation(const SmoothMap& map, const Vec2& probe);

struct JacobianReport
{
    Vec2 point;
    double det = 0.0;
    double residual = 0.0;
};

} // namespace vpe
