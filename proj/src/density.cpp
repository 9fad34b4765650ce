#include "vpe/density.hpp"

#include "vpe/errors.hpp"
#include "vpe/kernels.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstring>
#include <sstream>

namespace vpe {

namespace {

std::atomic<std::uint64_t> next_density_id{1};

// Keep compactified evaluations off the singular endpoints.
constexpr double kEdge = 1e-9;

} // namespace

double Axis::to_x(double u) const
{
    if (kind == Kind::interval) return 0.5 * (lo + hi) + 0.5 * (hi - lo) * u;
    return tan.to_x(u);
}

double Axis::to_u(double x) const
{
    if (kind == Kind::interval) return (x - 0.5 * (lo + hi)) / (0.5 * (hi - lo));
    return tan.to_u(x);
}

double Axis::dx_du(double u) const
{
    if (kind == Kind::interval) return 0.5 * (hi - lo);
    return tan.dx_du(u);
}

// ---------------------------------------------------------------------------

ConditionalTable::ConditionalTable(const std::function<double(const Vec2&)>& f, const Axis& axis, double x1,
                                   int panels, double rel_tol, double abs_tol)
: f_(f), axis_(axis), x1_(x1)
{
    auto g = [this](double u) { return integrand_u(u); };
    std::vector<double> start = num::graded_nodes(panels);
    // Far from the center, radially decaying densities put the slice mass at
    // |x2| ~ |x1|, squeezed against u = ±1; seed breakpoints there.
    if (axis.kind == Axis::Kind::real_line && std::abs(x1) > 4.0 * axis.tan.scale) {
        for (int k = -4; k <= 4; ++k)
            for (double sgn : {-1.0, 1.0}) {
                const double u = axis.to_u(axis.tan.center + sgn * std::abs(x1) * std::ldexp(1.0, k));
                if (u > -1.0 && u < 1.0) start.push_back(u);
            }
        std::sort(start.begin(), start.end());
        start.erase(std::unique(start.begin(), start.end()), start.end());
    }
    const double rough = num::gauss_over(g, start);
    if (!std::isfinite(rough)) {
        std::ostringstream os;
        os << "conditional density integral is not finite at x1 = " << x1;
        throw DensityResolution(os.str());
    }
    std::vector<double> pieces;
    num::adaptive_gauss(g, start, std::max(rel_tol * std::abs(rough), abs_tol), 24, &bounds_, &pieces);
    cumulative_.assign(bounds_.size(), 0.0);
    for (std::size_t k = 0; k < pieces.size(); ++k) {
        if (!(pieces[k] >= -1e-14 * std::abs(rough)) || !std::isfinite(pieces[k])) {
            std::ostringstream os;
            os << "conditional density integral is not finite and non-negative at x1 = " << x1;
            throw DensityResolution(os.str());
        }
        cumulative_[k + 1] = cumulative_[k] + std::max(pieces[k], 0.0);
    }
}

double ConditionalTable::integrand_u(double u) const
{
    return f_({x1_, axis_.to_x(u)}) * axis_.dx_du(u);
}

double ConditionalTable::partial_u(double u, std::size_t panel) const
{
    if (u <= bounds_[panel]) return 0.0;
    return num::gauss_panel([this](double s) { return integrand_u(s); }, bounds_[panel], u);
}

double ConditionalTable::cdf(double x2) const
{
    const double u = std::clamp(axis_.to_u(x2), -1.0, 1.0);
    auto it = std::upper_bound(bounds_.begin(), bounds_.end(), u);
    std::size_t k = static_cast<std::size_t>(std::distance(bounds_.begin(), it));
    k = (k == 0) ? 0 : std::min(k - 1, bounds_.size() - 2);
    return cumulative_[k] + partial_u(u, k);
}

double ConditionalTable::inverse(double mass) const
{
    const double total = cumulative_.back();
    mass = std::clamp(mass, 0.0, total);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), mass);
    std::size_t k = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
    k = (k == 0) ? 0 : std::min(k - 1, bounds_.size() - 2);
    const double lo = std::max(bounds_[k], -1.0 + kEdge);
    const double hi = std::min(bounds_[k + 1], 1.0 - kEdge);
    const double base = cumulative_[k];
    const double u = num::solve_increasing([&](double s) { return base + partial_u(s, k); },
                                           [&](double s) { return integrand_u(s); }, mass, lo, hi,
                                           {1e-14, 200});
    return axis_.to_x(u);
}

// ---------------------------------------------------------------------------

DensityField::DensityField(Fn eval, Axis x1, Axis x2, MassKind mass_kind, DensityOptions opt)
: eval_(std::move(eval)), ax1_(x1), ax2_(x2), mass_kind_(mass_kind), opt_(opt), id_(next_density_id++)
{
    if (opt_.grid < 8 || opt_.panels < 4) throw ConfigurationError("density grid resolution too small");
    const double s1 = ax1_.kind == Axis::Kind::real_line ? ax1_.tan.scale : 0.25 * (ax1_.hi - ax1_.lo);
    const double s2 = ax2_.kind == Axis::Kind::real_line ? ax2_.tan.scale : 0.25 * (ax2_.hi - ax2_.lo);
    const double c1 = ax1_.to_x(0.0), c2 = ax2_.to_x(0.0);
    for (double a : {-1.0, 0.0, 1.0})
        for (double b : {-1.0, 0.0, 1.0}) {
            const double v = eval_({c1 + a * s1, c2 + b * s2});
            if (std::isfinite(v)) reference_ = std::max(reference_, std::abs(v));
        }
}

double DensityField::slice_floor(double x1) const
{
    // Relative to the x1 measure of the compactified marginal, which weights
    // far slices by ~x1^2.
    const double s2 = ax2_.kind == Axis::Kind::real_line ? ax2_.tan.scale : (ax2_.hi - ax2_.lo);
    double w = 1.0;
    if (ax1_.kind == Axis::Kind::real_line) {
        const double t = (x1 - ax1_.tan.center) / ax1_.tan.scale;
        w = 1.0 / (1.0 + t * t);
    }
    return 1e-14 * reference_ * s2 * w;
}

std::shared_ptr<const ConditionalTable> DensityField::conditional(double x1) const
{
    struct Entry
    {
        std::uint64_t id = 0;
        double x1 = 0.0;
        std::shared_ptr<const ConditionalTable> table;
    };
    thread_local std::array<Entry, 8> cache;
    thread_local std::size_t next = 0;
    for (const auto& e : cache)
        if (e.id == id_ && std::memcmp(&e.x1, &x1, sizeof(double)) == 0) return e.table;
    auto table = std::make_shared<const ConditionalTable>(eval_, ax2_, x1, opt_.panels, opt_.conditional_tol,
                                                         slice_floor(x1));
    cache[next] = {id_, x1, table};
    next = (next + 1) % cache.size();
    return table;
}

double DensityField::slice_mass(double x1) const
{
    return conditional(x1)->total();
}

void DensityField::build_marginal() const
{
    struct Cell
    {
        double a, b, pa, pb, mass;
        int depth;
    };
    auto p = [this](double u) {
        u = std::clamp(u, -1.0 + kEdge, 1.0 - kEdge);
        const double x1 = ax1_.to_x(u);
        return ConditionalTable(eval_, ax2_, x1, opt_.panels, opt_.conditional_tol, slice_floor(x1)).total() * ax1_.dx_du(u);
    };
    const auto par = kernels::Exec::parallel;
    using gauss5 = boost::math::quadrature::gauss<double, 5>;

    const int n = opt_.grid;
    const std::vector<double> knots0 = num::graded_nodes(n);
    std::vector<double> pk(n + 1);
    kernels::for_each_index(static_cast<std::size_t>(n + 1), par, [&](std::size_t j) { pk[j] = p(knots0[j]); });
    std::vector<Cell> pending(n);
    kernels::for_each_index(static_cast<std::size_t>(n), par, [&](std::size_t j) {
        pending[j] = {knots0[j], knots0[j + 1], pk[j], pk[j + 1], num::gauss_panel(p, knots0[j], knots0[j + 1]), 0};
    });
    double pmax = 0.0;
    for (double v : pk)
        if (std::isfinite(v)) pmax = std::max(pmax, v);

    // Split cells where the Hermite derivative misses the slice mass at its
    // extremal error points.
    std::vector<Cell> done;
    const double g = 0.5 / std::sqrt(3.0);
    while (!pending.empty()) {
        std::vector<std::array<Cell, 2>> halves(pending.size());
        std::vector<char> split(pending.size(), 0);
        kernels::for_each_index(pending.size(), par, [&](std::size_t i) {
            const Cell& c = pending[i];
            if (c.depth >= opt_.refine_depth) return;
            const double h = c.b - c.a;
            bool bad = false;
            for (double s : {0.5 - g, 0.5 + g}) {
                const double s2 = s * s;
                const double d = (-6 * s2 + 6 * s) * c.mass / h + (3 * s2 - 4 * s + 1) * c.pa + (3 * s2 - 2 * s) * c.pb;
                const double exact = p(c.a + s * h);
                if (std::abs(d - exact) > opt_.refine_tol * (std::abs(exact) + 1e-4 * pmax)) bad = true;
            }
            if (!bad) return;
            const double m = 0.5 * (c.a + c.b), pm = p(m);
            halves[i] = {Cell{c.a, m, c.pa, pm, gauss5::integrate(p, c.a, m), c.depth + 1},
                         Cell{m, c.b, pm, c.pb, gauss5::integrate(p, m, c.b), c.depth + 1}};
            split[i] = 1;
        });
        std::vector<Cell> next;
        for (std::size_t i = 0; i < pending.size(); ++i) {
            if (split[i]) {
                next.push_back(halves[i][0]);
                next.push_back(halves[i][1]);
            } else {
                done.push_back(pending[i]);
            }
        }
        pending = std::move(next);
    }
    std::sort(done.begin(), done.end(), [](const Cell& l, const Cell& r) { return l.a < r.a; });

    std::vector<double> knots{done.front().a}, values{0.0}, slopes{done.front().pa};
    for (const Cell& c : done) {
        if (!(c.mass >= 0.0) || !std::isfinite(c.mass))
            throw DensityResolution("marginal quadrature produced a non-finite or negative cell mass; "
                                    "refine the density grid");
        knots.push_back(c.b);
        values.push_back(values.back() + c.mass);
        slopes.push_back(c.pb);
    }
    if (!(values.back() > 0.0)) throw DensityResolution("density has zero mass on its grid");
    for (auto& s : slopes)
        if (!std::isfinite(s) || s < 0.0) s = 0.0;
    marginal_->table = num::HermiteTable(std::move(knots), std::move(values), std::move(slopes));
}

const num::HermiteTable& DensityField::marginal() const
{
    std::call_once(marginal_->once, [this] { build_marginal(); });
    return marginal_->table;
}

Extended DensityField::mass() const
{
    if (mass_kind_ == MassKind::infinite) return Extended::infinity();
    return Extended(marginal().back());
}

double DensityField::marginal_cdf(double x1) const
{
    if (mass_kind_ == MassKind::infinite) throw FiniteMassForAnchored("marginal CDF requested for infinite mass");
    const double u = std::clamp(ax1_.to_u(x1), -1.0, 1.0);
    return std::clamp(marginal()(u), 0.0, marginal().back());
}

double DensityField::marginal_density(double x1) const
{
    if (mass_kind_ == MassKind::infinite) throw FiniteMassForAnchored("marginal density requested for infinite mass");
    const double u = std::clamp(ax1_.to_u(x1), -1.0 + kEdge, 1.0 - kEdge);
    return marginal().derivative(u) / ax1_.dx_du(u);
}

double DensityField::marginal_inverse(double m) const
{
    if (mass_kind_ == MassKind::infinite) throw FiniteMassForAnchored("marginal inverse requested for infinite mass");
    const double u = std::clamp(marginal().inverse(std::clamp(m, 0.0, marginal().back())), -1.0 + kEdge, 1.0 - kEdge);
    return ax1_.to_x(u);
}

double DensityField::line_integral(double x1, double a, double b) const
{
    if (a == b) return 0.0;
    // Absolute per-panel floor scaled by the panel length: integrands carrying
    // finite-difference noise would otherwise never meet a relative target.
    const double sign = a < b ? 1.0 : -1.0;
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double level = std::max(reference_, std::abs(eval_({x1, 0.5 * (lo + hi)})));
    return sign * num::adaptive_gauss([&](double s) { return eval_({x1, s}); }, {lo, hi},
                                      1e-13 * level * (hi - lo), 30);
}

bool DensityField::line_diverges(double x1, int direction) const
{
    const double scale = ax2_.kind == Axis::Kind::real_line ? ax2_.tan.scale : (ax2_.hi - ax2_.lo);
    const double s = direction >= 0 ? 1.0 : -1.0;
    const double i1 = std::abs(anchored_line_integral(x1, s * 10.0 * scale));
    const double i2 = std::abs(anchored_line_integral(x1, s * 100.0 * scale));
    const double i3 = std::abs(anchored_line_integral(x1, s * 1000.0 * scale));
    // Integrable tails stop growing; divergent ones keep adding comparable mass per decade.
    return (i3 - i2) > 0.5 * (i2 - i1) && (i3 - i2) > 1e-3 * std::max(i3, 1e-300);
}

} // namespace vpe
