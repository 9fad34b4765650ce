#pragma once

#include "vpe/density.hpp"
#include "vpe/smooth_map.hpp"

#include <functional>
#include <memory>

namespace vpe {

/// Knothe-Rosenblatt map T(x) = (T1(x1), T2(x1, x2)) with g(T) det DT = f.
struct TriangularMap
{
    enum class Mode { finite, anchored_slices, anchored_lines };

    SmoothMap map;
    Mode mode = Mode::finite;
    double mass_scale = 1.0;  ///< factor applied to g so both masses agree exactly

    Vec2 operator()(const Vec2& x) const { return map(x); }
    double t1(double x1) const;
    double t2(double x1, double x2) const { return map({x1, x2}).y; }
    /// (dT1/dx1, dT2/dx2), the diagonal of the triangular Jacobian.
    std::pair<double, double> diagonal(const Vec2& x) const;
    /// Same diagonal by central differences of t1 and of t2 at fixed x1.
    std::pair<double, double> difference_diagonal(const Vec2& x) const;

    struct Impl;
    std::shared_ptr<const Impl> impl;
};

struct TransportOptions
{
    double mass_tolerance = 1e-6;
};

/// Finite-mass transport: marginal CDF matching in x1, conditional in x2.
TriangularMap knothe_map(const DensityField& f, const DensityField& g, TransportOptions opt = {});

/// Infinite-mass transport anchored at the origin.
///
/// Slice mode (every vertical line has finite mass): T1 solves
/// ∫_0^{T1} ḡ = ∫_0^{x1} f̄, T2 matches conditional CDFs.
/// Line mode (every vertical line has infinite mass in both directions):
/// T1 = x1 and T2 solves ∫_0^{T2} g(x1, s) ds = ∫_0^{x2} f(x1, s) ds.
TriangularMap anchored_knothe(const DensityField& f, const DensityField& g, TransportOptions opt = {});

/// |g(T(x)) det DT(x) - f(x)| / f(x)
double transport_residual(const TriangularMap& t, const DensityField& f, const DensityField& g, const Vec2& x);

} // namespace vpe
