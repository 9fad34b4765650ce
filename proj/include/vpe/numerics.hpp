#pragma once

#include "vpe/geometry.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace vpe::num {

/// 8-point Gauss-Legendre rule on [-1, 1].
struct GaussRule
{
    std::array<double, 8> nodes;
    std::array<double, 8> weights;
};
const GaussRule& gauss8();

/// ∫_a^b f with one 8-point Gauss-Legendre panel.
template <class F>
double gauss_panel(F&& f, double a, double b)
{
    const auto& g = gauss8();
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double s = 0.0;
    for (int k = 0; k < 8; ++k) s += g.weights[k] * f(mid + half * g.nodes[k]);
    return s * half;
}

/// ∫_a^b f with `panels` equal Gauss-Legendre panels.
template <class F>
double gauss_composite(F&& f, double a, double b, int panels)
{
    double s = 0.0;
    const double h = (b - a) / panels;
    for (int i = 0; i < panels; ++i) s += gauss_panel(f, a + i * h, a + (i + 1) * h);
    return s;
}

/// ∫ f over consecutive panels [nodes[k], nodes[k+1]].
template <class F>
double gauss_over(F&& f, const std::vector<double>& nodes)
{
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) s += gauss_panel(f, nodes[i], nodes[i + 1]);
    return s;
}

/// Adaptive Gauss-Legendre by panel bisection: a panel is accepted when its
/// two halves agree with the whole to `abs_tol`. Accepted pieces (the halves)
/// are appended to `bounds`/`pieces` in increasing order when given.
template <class F>
double adaptive_gauss(F&& f, const std::vector<double>& start, double abs_tol, int max_depth = 24,
                      std::vector<double>* bounds = nullptr, std::vector<double>* pieces = nullptr)
{
    struct Item
    {
        double a, b, whole;
        int depth;
    };
    // Bounded total work: noisy integrands stop refining after max_panels.
    constexpr std::size_t max_panels = 4096;
    std::size_t accepted = 0;
    double total = 0.0;
    if (bounds) bounds->assign(1, start.front());
    if (pieces) pieces->clear();
    std::vector<Item> stack;
    for (std::size_t i = start.size() - 1; i-- > 0;)
        stack.push_back({start[i], start[i + 1], gauss_panel(f, start[i], start[i + 1]), 0});
    while (!stack.empty()) {
        const Item it = stack.back();
        stack.pop_back();
        const double m = 0.5 * (it.a + it.b);
        const double l = gauss_panel(f, it.a, m), r = gauss_panel(f, m, it.b);
        if (std::abs(l + r - it.whole) <= abs_tol || it.depth >= max_depth || accepted >= max_panels) {
            ++accepted;
            total += l + r;
            if (bounds) {
                bounds->push_back(m);
                bounds->push_back(it.b);
            }
            if (pieces) {
                pieces->push_back(l);
                pieces->push_back(r);
            }
            continue;
        }
        stack.push_back({m, it.b, r, it.depth + 1});
        stack.push_back({it.a, m, l, it.depth + 1});
    }
    return total;
}

/// Solves f(x) = target for a strictly increasing f on the bracket [lo, hi].
/// Bisection until the bracket is small, then Newton steps guarded by the
/// bracket. `df` may be null (pure bisection/secant).
struct RootOptions
{
    double x_tol = 1e-12;
    int max_iter = 200;
};
double solve_increasing(const std::function<double(double)>& f, const std::function<double(double)>& df,
                        double target, double lo, double hi, RootOptions opt = {});

/// Radical inverse in the given prime base.
double radical_inverse(std::uint64_t index, unsigned base);
/// Point `index` of the 2D Halton sequence (bases 2, 3), skipping index 0.
Vec2 halton2(std::uint64_t index);

/// tan compactification of the real line: x = scale * tan(pi u / 2), u in (-1, 1).
/// Maps Cauchy-like tails onto bounded integrands.
struct TanAxis
{
    double scale = 1.0;
    double center = 0.0;

    double to_x(double u) const;
    double to_u(double x) const;
    /// dx/du
    double dx_du(double u) const;
};

/// Odd graded map of [-1, 1] onto itself, g(t) = t (a + (1 - a)|t|), with
/// slope a at 0; spaces uniform nodes in t densely near u = 0.
double graded(double t, double a = 0.125);
std::vector<double> graded_nodes(int cells, double a = 0.125);

/// Cubic Hermite interpolant on a strictly increasing knot vector with
/// prescribed values and slopes. Monotone when the data are monotone and the
/// slopes are exact derivatives of a smooth increasing function.
class HermiteTable
{
public:
    HermiteTable() = default;
    HermiteTable(std::vector<double> knots, std::vector<double> values, std::vector<double> slopes);

    double operator()(double t) const;
    double derivative(double t) const;
    /// Inverse for increasing data; `value` must lie in [front, back].
    double inverse(double value) const;

    std::span<const double> knots() const { return knots_; }
    std::span<const double> values() const { return values_; }
    double front() const { return values_.front(); }
    double back() const { return values_.back(); }
    bool empty() const { return knots_.empty(); }

private:
    std::size_t cell(double t) const;
    std::vector<double> knots_, values_, slopes_;
};

} // namespace vpe::num
