#pragma once

#include "vpe/geometry.hpp"
#include "vpe/numerics.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>

namespace vpe {

/// How an axis of a density's region is compactified for quadrature.
struct Axis
{
    enum class Kind { real_line, interval };
    Kind kind = Kind::real_line;
    double lo = 0.0, hi = 0.0;          // interval bounds
    num::TanAxis tan;                   // real-line map

    static Axis real_line(double scale = 1.0, double center = 0.0)
    {
        Axis a;
        a.tan = {scale, center};
        return a;
    }
    static Axis interval(double lo, double hi)
    {
        Axis a;
        a.kind = Kind::interval;
        a.lo = lo;
        a.hi = hi;
        return a;
    }

    double to_x(double u) const;
    double to_u(double x) const;
    double dx_du(double u) const;
    bool contains(double x) const { return kind == Kind::real_line || (x > lo && x < hi); }
};

struct DensityOptions
{
    int grid = 256;     ///< initial marginal table cells along x1
    int panels = 16;    ///< initial Gauss panels per conditional (x2) integral
    double conditional_tol = 1e-8;   ///< relative tolerance of adaptive conditional integrals
    double refine_tol = 1e-4;  ///< relative error allowed in the interpolated marginal density
    int refine_depth = 10;     ///< maximum halvings of an initial marginal cell
};

/// Conditional distribution of x2 given x1, built on demand from adaptive Gauss panels.
class ConditionalTable
{
public:
    /// Panels are bisected until each agrees with its halves to
    /// max(rel_tol * |rough total|, abs_tol).
    ConditionalTable(const std::function<double(const Vec2&)>& f, const Axis& axis, double x1, int panels,
                     double rel_tol = 1e-8, double abs_tol = 0.0);

    double x1() const { return x1_; }
    /// ∫ f(x1, s) ds over the whole slice.
    double total() const { return cumulative_.back(); }
    /// ∫_{-inf}^{x2} f(x1, s) ds
    double cdf(double x2) const;
    /// Unnormalized inverse: x2 with cdf(x2) = mass.
    double inverse(double mass) const;

private:
    double partial_u(double u, std::size_t panel) const;
    double integrand_u(double u) const;

    std::function<double(const Vec2&)> f_;
    Axis axis_;
    double x1_;
    std::vector<double> bounds_;      // panel boundaries in u
    std::vector<double> cumulative_;  // mass up to bounds_[k]
};

/// A smooth positive density on the plane or a rectangle.
///
/// Mass is either finite (computed by quadrature from the marginal table) or
/// declared infinite. The marginal table is built lazily on first use under
/// a once-flag; afterwards every service is read-only and thread-safe.
/// Copies share the table.
class DensityField
{
public:
    using Fn = std::function<double(const Vec2&)>;
    enum class MassKind { finite, infinite };

    DensityField(Fn eval, Axis x1, Axis x2, MassKind mass_kind = MassKind::finite, DensityOptions opt = {});

    double operator()(const Vec2& x) const { return eval_(x); }
    const Fn& function() const { return eval_; }
    const Axis& axis1() const { return ax1_; }
    const Axis& axis2() const { return ax2_; }
    const DensityOptions& options() const { return opt_; }
    bool contains(const Vec2& x) const { return ax1_.contains(x.x) && ax2_.contains(x.y); }

    /// Total mass; infinite when declared so.
    Extended mass() const;
    bool finite_mass() const { return mass_kind_ == MassKind::finite; }

    /// ∫ f(x1, s) ds
    double slice_mass(double x1) const;
    /// ∫_{-inf}^{x1} slice_mass (finite mass only).
    double marginal_cdf(double x1) const;
    /// d/dx1 of the interpolated marginal_cdf.
    double marginal_density(double x1) const;
    /// x1 with marginal_cdf(x1) = m (finite mass only).
    double marginal_inverse(double m) const;

    /// Conditional table at x1, cached per thread for repeated queries.
    std::shared_ptr<const ConditionalTable> conditional(double x1) const;

    /// ∫_0^{x2} f(x1, s) ds, signed (negative for x2 < 0).
    double anchored_line_integral(double x1, double x2) const { return line_integral(x1, 0.0, x2); }
    /// ∫_a^b f(x1, s) ds, signed.
    double line_integral(double x1, double a, double b) const;
    /// Heuristic divergence test of ∫_0^{±inf} f(x1, s) ds.
    bool line_diverges(double x1, int direction) const;

    std::uint64_t id() const { return id_; }
    /// Largest |f| at a few probe points near the frame center; sets absolute
    /// quadrature floors so roundoff-level tails do not drive refinement.
    double reference_value() const { return reference_; }

private:
    void build_marginal() const;
    double slice_floor(double x1) const;

    Fn eval_;
    Axis ax1_, ax2_;
    MassKind mass_kind_;
    DensityOptions opt_;
    std::uint64_t id_;
    double reference_ = 0.0;

    struct Marginal
    {
        std::once_flag once;
        num::HermiteTable table;  // in u1 coordinates
    };
    const num::HermiteTable& marginal() const;
    std::shared_ptr<Marginal> marginal_ = std::make_shared<Marginal>();  // shared by copies
};

} // namespace vpe
