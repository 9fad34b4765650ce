#include "vpe/manifold.hpp"

#include "vpe/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace vpe {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kHuge = 1e12;  // sampled values beyond this are treated as unbounded

struct Frame3
{
    std::array<double, 3> p, e1, e2;
};

Frame3 sphere_frame(const Vec2& base)
{
    const double lon = base.x, lat = base.y;
    const double cl = std::cos(lat), sl = std::sin(lat), co = std::cos(lon), so = std::sin(lon);
    Frame3 f;
    f.p = {cl * co, cl * so, sl};
    f.e1 = {sl * co, sl * so, -cl};  // towards the south along the meridian
    f.e2 = {-so, co, 0.0};           // east
    return f;
}

std::array<double, 3> lonlat_to_unit(const Vec2& y)
{
    const double cl = std::cos(y.y);
    return {cl * std::cos(y.x), cl * std::sin(y.x), std::sin(y.y)};
}

double wrap_pi(double a)
{
    a = std::remainder(a, 2.0 * kPi);
    return a;
}

} // namespace

// ---------------------------------------------------------------------------

CutTimeProfile::CutTimeProfile(std::function<double(double)> mu, ProfileRegularity regularity, std::string label,
                               std::optional<LatticePieces> pieces)
: mu_(std::move(mu)), regularity_(regularity), label_(std::move(label)), pieces_(std::move(pieces))
{
    constexpr int n = 3600;
    inf_ = kInf;
    sup_ = 0.0;
    for (int k = 0; k < n; ++k) {
        const double v = mu_(2.0 * kPi * k / n);
        if (!(v > 0.0)) throw ConfigurationError("cut-time profile '" + label_ + "' must be positive");
        inf_ = std::min(inf_, v);
        sup_ = std::max(sup_, v > kHuge ? kInf : v);
    }
    if (!std::isfinite(sup_)) {
        lipschitz_ = (regularity_ == ProfileRegularity::infinite) ? 0.0 : kInf;
        return;
    }
    constexpr int fine = 1 << 16;
    const double h = 2.0 * kPi / fine;
    double prev = mu_(0.0);
    lipschitz_ = 0.0;
    for (int k = 1; k <= fine; ++k) {
        const double v = mu_(k * h);
        lipschitz_ = std::max(lipschitz_, std::abs(v - prev) / h);
        prev = v;
    }
}

Extended CutTimeProfile::operator()(double theta) const
{
    const double v = mu_(theta);
    if (!std::isfinite(v)) return Extended::infinity();
    return Extended(v);
}

CutTimeProfile CutTimeProfile::capped(double cap) const
{
    auto mu = mu_;
    ProfileRegularity reg = ProfileRegularity::piecewise;
    if (regularity_ == ProfileRegularity::infinite) reg = ProfileRegularity::constant;
    if (regularity_ == ProfileRegularity::constant) reg = ProfileRegularity::constant;
    std::ostringstream os;
    os << label_ << " capped at " << cap;
    std::optional<LatticePieces> pieces = pieces_;
    if (pieces) pieces->cap = std::min(pieces->cap, cap);
    return CutTimeProfile([mu, cap](double t) { return std::min(mu(t), cap); }, reg, os.str(), pieces);
}

// ---------------------------------------------------------------------------

std::vector<Vec2> lattice_vectors_within(Vec2 w1, Vec2 w2, double radius)
{
    const double det = w1.x * w2.y - w1.y * w2.x;
    if (!(std::abs(det) > 1e-14 * std::max(1.0, w1.norm() * w2.norm())))
        throw ConfigurationError("degenerate lattice basis (|det(w1 w2)| = 0)");
    const int imax = static_cast<int>(std::ceil(radius * w2.norm() / std::abs(det)));
    const int jmax = static_cast<int>(std::ceil(radius * w1.norm() / std::abs(det)));
    std::vector<Vec2> out;
    for (int i = -imax; i <= imax; ++i)
        for (int j = -jmax; j <= jmax; ++j) {
            if (i == 0 && j == 0) continue;
            const Vec2 v = w1 * i + w2 * j;
            if (v.norm() <= radius) out.push_back(v);
        }
    return out;
}

double lattice_cut_time(const std::vector<Vec2>& vectors, double theta)
{
    const Vec2 v = unit_direction(theta);
    double best = kInf;
    for (const auto& w : vectors) {
        const double p = v.dot(w);
        if (p > 0.0) best = std::min(best, w.dot(w) / (2.0 * p));
    }
    return best;
}

namespace {

// Voronoi-relevant vectors: w is relevant iff ±w are the only shortest
// vectors of the coset w + 2L. Candidates come from the brute-force search.
std::vector<Vec2> voronoi_relevant(Vec2 w1, Vec2 w2)
{
    const double radius = 4.0 * std::max(w1.norm(), w2.norm());
    const double det = w1.x * w2.y - w1.y * w2.x;
    const auto candidates = lattice_vectors_within(w1, w2, radius);
    auto coords = [&](const Vec2& v) {
        const long i = std::lround((v.x * w2.y - v.y * w2.x) / det);
        const long j = std::lround((w1.x * v.y - w1.y * v.x) / det);
        return std::pair{i, j};
    };
    std::vector<Vec2> out;
    for (const auto& w : candidates) {
        const auto [wi, wj] = coords(w);
        const double n2 = w.dot(w);
        bool relevant = true;
        for (const auto& u : candidates) {
            if (u == w || u == -w) continue;
            const auto [ui, uj] = coords(u);
            if ((ui - wi) % 2 == 0 && (uj - wj) % 2 == 0 && u.dot(u) <= n2 * (1.0 + 1e-12)) {
                relevant = false;
                break;
            }
        }
        if (relevant) out.push_back(w);
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------------------

ModelManifold ModelManifold::flat_torus(Vec2 w1, Vec2 w2, Vec2 base)
{
    ModelManifold m;
    m.kind_ = Kind::flat_torus;
    m.w1_ = w1;
    m.w2_ = w2;
    m.base_ = base;
    m.relevant_ = voronoi_relevant(w1, w2);
    return m;
}

ModelManifold ModelManifold::round_sphere(double radius, Vec2 base)
{
    if (!(radius > 0.0)) throw ConfigurationError("sphere radius must be positive");
    ModelManifold m;
    m.kind_ = Kind::round_sphere;
    m.radius_ = radius;
    m.base_ = base;
    return m;
}

ModelManifold ModelManifold::flat_cylinder(double circumference, Vec2 base)
{
    if (!(circumference > 0.0)) throw ConfigurationError("cylinder circumference must be positive");
    ModelManifold m;
    m.kind_ = Kind::flat_cylinder;
    m.circumference_ = circumference;
    m.base_ = base;
    m.relevant_ = {{circumference, 0.0}, {-circumference, 0.0}};
    return m;
}

ModelManifold ModelManifold::plane_with_density(PlaneDensity density, Vec2 base)
{
    if (!(density.amplitude > 0.0) || !(density.sigma > 0.0))
        throw ConfigurationError("plane density must be strictly positive");
    ModelManifold m;
    m.kind_ = Kind::plane_with_density;
    m.density_ = density;
    m.base_ = base;
    return m;
}

std::string ModelManifold::kind_name() const
{
    switch (kind_) {
    case Kind::flat_torus: return "flat_torus";
    case Kind::round_sphere: return "round_sphere";
    case Kind::flat_cylinder: return "flat_cylinder";
    case Kind::plane_with_density: return "plane_with_density";
    }
    return "unknown";
}

double ModelManifold::exp_density(const Vec2& z) const
{
    switch (kind_) {
    case Kind::flat_torus:
    case Kind::flat_cylinder: return 1.0;
    case Kind::round_sphere: {
        const double s = z.norm();
        if (s < 1e-8) return 1.0 - s * s / (6.0 * radius_ * radius_);
        return radius_ * std::sin(s / radius_) / s;
    }
    case Kind::plane_with_density: return density_(base_ + z);
    }
    return 0.0;
}

double ModelManifold::chart_density(const Vec2& y) const
{
    switch (kind_) {
    case Kind::flat_torus:
    case Kind::flat_cylinder: return 1.0;
    case Kind::round_sphere: return radius_ * radius_ * std::cos(y.y);
    case Kind::plane_with_density: return density_(y);
    }
    return 0.0;
}

Vec2 ModelManifold::chart_difference(const Vec2& a, const Vec2& b) const
{
    Vec2 d = a - b;
    switch (kind_) {
    case Kind::flat_torus: {
        const double det = w1_.x * w2_.y - w1_.y * w2_.x;
        const double s = std::round((d.x * w2_.y - d.y * w2_.x) / det);
        const double t = std::round((w1_.x * d.y - w1_.y * d.x) / det);
        Vec2 best = d - w1_ * s - w2_ * t;
        for (int i = -1; i <= 1; ++i)
            for (int j = -1; j <= 1; ++j) {
                const Vec2 c = d - w1_ * (s + i) - w2_ * (t + j);
                if (c.norm() < best.norm()) best = c;
            }
        return best;
    }
    case Kind::flat_cylinder: d.x = std::remainder(d.x, circumference_); return d;
    case Kind::round_sphere: d.x = wrap_pi(d.x); return d;
    case Kind::plane_with_density: return d;
    }
    return d;
}

double ModelManifold::chart_distance(const Vec2& a, const Vec2& b) const
{
    if (kind_ == Kind::round_sphere) {
        const auto p = lonlat_to_unit(a), q = lonlat_to_unit(b);
        const double cx = p[1] * q[2] - p[2] * q[1];
        const double cy = p[2] * q[0] - p[0] * q[2];
        const double cz = p[0] * q[1] - p[1] * q[0];
        const double dot = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
        return radius_ * std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
    }
    return chart_difference(a, b).norm();
}

// ---------------------------------------------------------------------------

CutTimeProfile cut_time_profile(const ModelManifold& m)
{
    switch (m.kind()) {
    case ModelManifold::Kind::flat_torus: {
        auto vecs = m.relevant_vectors();
        return CutTimeProfile([vecs](double t) { return lattice_cut_time(vecs, t); },
                              ProfileRegularity::piecewise, "flat_torus", LatticePieces{vecs});
    }
    case ModelManifold::Kind::round_sphere: {
        const double v = kPi * m.radius();
        return CutTimeProfile([v](double) { return v; }, ProfileRegularity::constant, "round_sphere");
    }
    case ModelManifold::Kind::flat_cylinder: {
        auto vecs = m.relevant_vectors();
        return CutTimeProfile([vecs](double t) { return lattice_cut_time(vecs, t); },
                              ProfileRegularity::even_reciprocal, "flat_cylinder", LatticePieces{vecs});
    }
    case ModelManifold::Kind::plane_with_density:
        return CutTimeProfile([](double) { return kInf; }, ProfileRegularity::infinite, "plane_with_density");
    }
    throw ConfigurationError("unknown manifold kind");
}

Extended cut_time(const ModelManifold& m, double theta)
{
    switch (m.kind()) {
    case ModelManifold::Kind::flat_torus:
    case ModelManifold::Kind::flat_cylinder: {
        const double v = lattice_cut_time(m.relevant_vectors(), theta);
        return std::isfinite(v) ? Extended(v) : Extended::infinity();
    }
    case ModelManifold::Kind::round_sphere: return Extended(kPi * m.radius());
    case ModelManifold::Kind::plane_with_density: return Extended::infinity();
    }
    return Extended::infinity();
}

Vec2 exp_chart(const ModelManifold& m, const Vec2& x)
{
    switch (m.kind()) {
    case ModelManifold::Kind::flat_torus: {
        const Vec2 y = x + m.base_point();
        const Vec2 w1 = m.w1(), w2 = m.w2();
        const double det = w1.x * w2.y - w1.y * w2.x;
        double s = (y.x * w2.y - y.y * w2.x) / det;
        double t = (w1.x * y.y - w1.y * y.x) / det;
        s -= std::floor(s);
        t -= std::floor(t);
        if (s >= 1.0) s = 0.0;
        if (t >= 1.0) t = 0.0;
        return w1 * s + w2 * t;
    }
    case ModelManifold::Kind::flat_cylinder: {
        const double c = m.circumference();
        double a = std::fmod(x.x + m.base_point().x, c);
        if (a < 0.0) a += c;
        if (a >= c) a = 0.0;
        return {a, x.y + m.base_point().y};
    }
    case ModelManifold::Kind::round_sphere: {
        const double r = m.radius();
        const double s = x.norm();
        if (s >= kPi * r) {
            std::ostringstream os;
            os << "tangent vector of length " << s << " exceeds the sphere chart range pi*R = " << kPi * r;
            throw ChartRangeError(os.str());
        }
        const Frame3 f = sphere_frame(m.base_point());
        const double c = std::cos(s / r);
        const double k = s > 0.0 ? std::sin(s / r) / s : 1.0 / r;
        std::array<double, 3> q{};
        for (int i = 0; i < 3; ++i) q[i] = c * f.p[i] + k * (x.x * f.e1[i] + x.y * f.e2[i]);
        return {std::atan2(q[1], q[0]), std::asin(std::clamp(q[2], -1.0, 1.0))};
    }
    case ModelManifold::Kind::plane_with_density: return x + m.base_point();
    }
    return x;
}

Mat2 exp_chart_jacobian(const ModelManifold& m, const Vec2& x)
{
    if (m.kind() != ModelManifold::Kind::round_sphere) return Mat2::identity();
    const double r = m.radius();
    const double s = x.norm();
    if (s >= kPi * r) throw ChartRangeError("tangent vector outside the sphere chart range");
    const Frame3 f = sphere_frame(m.base_point());
    const double c = std::cos(s / r), sn = std::sin(s / r);
    double k, dk_over_s, dc_over_x;  // k = sin(s/r)/s, (dk/ds)/s, (dc/ds)/s
    if (s < 1e-6) {
        k = 1.0 / r - s * s / (6.0 * r * r * r);
        dk_over_s = -1.0 / (3.0 * r * r * r);
        dc_over_x = -1.0 / (r * r);
    } else {
        k = sn / s;
        dk_over_s = (c * s / r - sn) / (s * s * s);
        dc_over_x = -sn / (r * s);
    }
    std::array<double, 3> q{}, dq1{}, dq2{};
    for (int i = 0; i < 3; ++i) {
        const double v = x.x * f.e1[i] + x.y * f.e2[i];
        q[i] = c * f.p[i] + k * v;
        dq1[i] = dc_over_x * x.x * f.p[i] + dk_over_s * x.x * v + k * f.e1[i];
        dq2[i] = dc_over_x * x.y * f.p[i] + dk_over_s * x.y * v + k * f.e2[i];
    }
    const double rho2 = q[0] * q[0] + q[1] * q[1];
    const double rho = std::sqrt(rho2);
    return {(q[0] * dq1[1] - q[1] * dq1[0]) / rho2, (q[0] * dq2[1] - q[1] * dq2[0]) / rho2, dq1[2] / rho,
            dq2[2] / rho};
}

SmoothMap exp_chart_map(const ModelManifold& m)
{
    return SmoothMap::from_functions(
        "exp_p[" + m.kind_name() + "]", [m](const Vec2& x) { return exp_chart(m, x); },
        [m](const Vec2& x) { return exp_chart_jacobian(m, x); });
}

DensityField pullback_density(const ModelManifold& m, const SmoothMap& rho, DensityField::MassKind mass_kind,
                              PullbackOptions opt)
{
    const double far = 10.0 * opt.scale;
    auto eval = [m, rho, far](const Vec2& x) {
        double dr;
        const Vec2 z = rho.evaluate_det(x, dr);
        if (!std::isfinite(dr)) throw NumericalError("non-finite straightening Jacobian");
        const double d = m.exp_density(z) * dr;
        if (d > 0.0) return d;
        // Far out the saturating radial profile underflows; the sign there is roundoff.
        if (d > -1e-12 && x.norm() > far) return 0.0;
        std::ostringstream os;
        os << "pullback density " << d << " at (" << x.x << ", " << x.y
           << "): straightening left the starlike domain";
        throw StraighteningFault(os.str());
    };
    return DensityField(eval, Axis::real_line(opt.scale), Axis::real_line(opt.scale), mass_kind, opt.grid);
}

// ---------------------------------------------------------------------------

namespace {

VolumeResult integrate_plane(const std::function<double(const Vec2&)>& f, VolumeOptions opt)
{
    const num::TanAxis axis{1.0, 0.0};
    auto integrate = [&](int panels) {
        auto inner = [&](double u1) {
            const double x1 = axis.to_x(u1);
            const double w1 = axis.dx_du(u1);
            return w1 * num::gauss_composite([&](double u2) { return f({x1, axis.to_x(u2)}) * axis.dx_du(u2); },
                                             -1.0, 1.0, panels);
        };
        return num::gauss_composite(inner, -1.0, 1.0, panels);
    };
    int panels = 4;
    double prev = integrate(panels);
    int growth = 0;
    for (int r = 0; r < opt.max_refinements; ++r) {
        panels *= 2;
        const double cur = integrate(panels);
        if (!std::isfinite(cur) || cur > opt.divergence_bound) return {Extended::infinity(), true, cur, kInf};
        if (std::abs(cur - prev) <= opt.rel_tol * std::abs(cur)) return {Extended(cur), true, cur, cur};
        growth = (cur > 1.5 * prev) ? growth + 1 : 0;
        if (growth >= 3) return {Extended::infinity(), true, cur, kInf};
        if (r + 1 == opt.max_refinements)
            return {Extended(cur), false, std::min(prev, cur), std::max(prev, cur)};
        prev = cur;
    }
    return {Extended(prev), false, prev, prev};
}

} // namespace

VolumeResult total_volume(const ModelManifold& m, VolumeOptions opt)
{
    switch (m.kind()) {
    case ModelManifold::Kind::flat_torus: {
        const double det = std::abs(m.w1().x * m.w2().y - m.w1().y * m.w2().x);
        return {Extended(det), true, det, det};
    }
    case ModelManifold::Kind::round_sphere: {
        const double v = 4.0 * kPi * m.radius() * m.radius();
        return {Extended(v), true, v, v};
    }
    case ModelManifold::Kind::flat_cylinder: return {Extended::infinity(), true, kInf, kInf};
    case ModelManifold::Kind::plane_with_density: {
        const PlaneDensity d = m.plane_density();
        if (d.kind == PlaneDensity::Kind::constant) return {Extended::infinity(), true, kInf, kInf};
        return integrate_plane([d](const Vec2& x) { return d(x); }, opt);
    }
    }
    throw ConfigurationError("unknown manifold kind");
}

} // namespace vpe
