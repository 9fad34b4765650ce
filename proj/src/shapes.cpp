#include "vpe/shapes.hpp"

#include "vpe/errors.hpp"
#include "vpe/numerics.hpp"
#include "vpe/straighten.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace vpe {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Radial map z -> z h(r)/r about a center; `ratio(r)` = h(r)/r, `dh(r)` = h'(r).
SmoothMap radial_map(std::string tag, Vec2 center, Vec2 offset, std::function<double(double)> ratio,
                     std::function<double(double)> dh, std::function<bool(const Vec2&)> domain)
{
    auto eval = [=](const Vec2& x) {
        const Vec2 z = x - center;
        return offset + z * ratio(z.norm());
    };
    auto jac = [=](const Vec2& x) {
        const Vec2 z = x - center;
        const double r = z.norm();
        const double g = ratio(r);
        if (r == 0.0) return Mat2::diag(g, g);
        const Vec2 v = z / r;
        const double a = dh(r) - g;  // (h' - h/r) v v^T + (h/r) I
        return Mat2{g + a * v.x * v.x, a * v.x * v.y, a * v.x * v.y, g + a * v.y * v.y};
    };
    return SmoothMap::from_functions(std::move(tag), eval, jac, std::move(domain));
}

double rect_closure_distance(const Shape& r, const Vec2& p)
{
    const double dx = std::max({r.x_lo - p.x, 0.0, p.x - r.x_hi});
    const double dy = std::max({r.y_lo - p.y, 0.0, p.y - r.y_hi});
    return std::hypot(dx, dy);
}

double outer_radius(const Shape& s) { return s.kind == Shape::Kind::disk ? s.radius : s.r_out; }

// Closures of a and b intersect.
bool closures_meet(const Shape& a, const Shape& b)
{
    using K = Shape::Kind;
    if (a.kind == K::plane || b.kind == K::plane) return true;
    if (a.kind == K::rectangle && b.kind == K::rectangle)
        return a.x_lo <= b.x_hi && b.x_lo <= a.x_hi && a.y_lo <= b.y_hi && b.y_lo <= a.y_hi;
    if (a.kind == K::rectangle) return closures_meet(b, a);
    // a is round
    const double ra = outer_radius(a);
    if (b.kind == K::rectangle) {
        if (rect_closure_distance(b, a.center) > ra) return false;
        if (a.kind == K::annulus) {
            // Rectangle strictly inside the hole?
            const double far = std::max(std::hypot(b.x_lo - a.center.x, b.y_lo - a.center.y),
                                        std::max(std::hypot(b.x_hi - a.center.x, b.y_lo - a.center.y),
                                                 std::max(std::hypot(b.x_lo - a.center.x, b.y_hi - a.center.y),
                                                          std::hypot(b.x_hi - a.center.x, b.y_hi - a.center.y))));
            if (far < a.r_in) return false;
        }
        return true;
    }
    const double rb = outer_radius(b);
    const double d = (a.center - b.center).norm();
    if (d > ra + rb) return false;
    if (a.kind == K::annulus && d + rb < a.r_in) return false;
    if (b.kind == K::annulus && d + ra < b.r_in) return false;
    return true;
}

} // namespace

Shape Shape::rectangle(double x_lo, double x_hi, double y_lo, double y_hi)
{
    if (!(x_lo < x_hi) || !(y_lo < y_hi) || !std::isfinite(x_hi - x_lo) || !std::isfinite(y_hi - y_lo))
        throw ConfigurationError("rectangle needs finite a < b and c < d");
    Shape s;
    s.kind = Kind::rectangle;
    s.x_lo = x_lo;
    s.x_hi = x_hi;
    s.y_lo = y_lo;
    s.y_hi = y_hi;
    return s;
}

Shape Shape::disk(Vec2 center, double radius)
{
    if (!(radius > 0.0) || !std::isfinite(radius) || !center.finite())
        throw ConfigurationError("disk needs a finite center and radius > 0");
    Shape s;
    s.kind = Kind::disk;
    s.center = center;
    s.radius = radius;
    return s;
}

Shape Shape::annulus(Vec2 center, double r_in, double r_out)
{
    if (!(r_in > 0.0) || !(r_in < r_out) || !std::isfinite(r_out) || !center.finite())
        throw ConfigurationError("annulus needs 0 < r_in < r_out");
    Shape s;
    s.kind = Kind::annulus;
    s.center = center;
    s.r_in = r_in;
    s.r_out = r_out;
    return s;
}

Shape Shape::plane()
{
    Shape s;
    s.kind = Kind::plane;
    return s;
}

std::string Shape::name() const
{
    switch (kind) {
    case Kind::rectangle: return "rectangle";
    case Kind::disk: return "disk";
    case Kind::annulus: return "annulus";
    case Kind::plane: return "plane";
    }
    return "shape";
}

Extended Shape::area() const
{
    switch (kind) {
    case Kind::rectangle: return Extended((x_hi - x_lo) * (y_hi - y_lo));
    case Kind::disk: return Extended(kPi * radius * radius);
    case Kind::annulus: return Extended(kPi * (r_out * r_out - r_in * r_in));
    case Kind::plane: return Extended::infinity();
    }
    return Extended::infinity();
}

bool Shape::contains(const Vec2& x) const
{
    switch (kind) {
    case Kind::rectangle: return x.x > x_lo && x.x < x_hi && x.y > y_lo && x.y < y_hi;
    case Kind::disk: return (x - center).norm() < radius;
    case Kind::annulus: {
        const double r = (x - center).norm();
        return r > r_in && r < r_out;
    }
    case Kind::plane: return x.finite();
    }
    return false;
}

double Shape::boundary_distance(const Vec2& x) const
{
    switch (kind) {
    case Kind::rectangle: return std::min({x.x - x_lo, x_hi - x.x, x.y - y_lo, y_hi - x.y});
    case Kind::disk: return radius - (x - center).norm();
    case Kind::annulus: {
        const double r = (x - center).norm();
        return std::min(r - r_in, r_out - r);
    }
    case Kind::plane: return kInf;
    }
    return 0.0;
}

void Shape::bounds(Vec2& lo, Vec2& hi, double window) const
{
    switch (kind) {
    case Kind::rectangle:
        lo = {x_lo, y_lo};
        hi = {x_hi, y_hi};
        return;
    case Kind::disk:
    case Kind::annulus: {
        const double r = outer_radius(*this);
        lo = center - Vec2{r, r};
        hi = center + Vec2{r, r};
        return;
    }
    case Kind::plane:
        lo = {-window, -window};
        hi = {window, window};
        return;
    }
}

PlanarDomain::PlanarDomain(std::vector<Shape> components) : components_(std::move(components))
{
    if (components_.empty()) throw ConfigurationError("domain has no components");
    for (std::size_t i = 0; i < components_.size(); ++i)
        for (std::size_t j = i + 1; j < components_.size(); ++j)
            if (closures_meet(components_[i], components_[j])) {
                std::ostringstream os;
                os << "components " << i << " (" << components_[i].name() << ") and " << j << " ("
                   << components_[j].name() << ") are not closure-disjoint";
                throw ConfigurationError(os.str());
            }
}

Extended lebesgue_volume(const PlanarDomain& d)
{
    double sum = 0.0;
    for (const auto& s : d.components()) {
        const Extended a = s.area();
        if (a.is_infinite()) return Extended::infinity();
        sum += a.value();
    }
    return Extended(sum);
}

// ---------------------------------------------------------------------------

SmoothMap shape_to_plane(const Shape& s)
{
    auto domain = [s](const Vec2& x) { return s.contains(x); };
    switch (s.kind) {
    case Shape::Kind::rectangle: {
        const double m1 = 0.5 * (s.x_lo + s.x_hi), w1 = s.x_hi - s.x_lo;
        const double m2 = 0.5 * (s.y_lo + s.y_hi), w2 = s.y_hi - s.y_lo;
        auto eval = [=](const Vec2& x) {
            return Vec2{std::tan(kPi * (x.x - m1) / w1), std::tan(kPi * (x.y - m2) / w2)};
        };
        auto jac = [=](const Vec2& x) {
            const double c1 = std::cos(kPi * (x.x - m1) / w1), c2 = std::cos(kPi * (x.y - m2) / w2);
            return Mat2::diag(kPi / (w1 * c1 * c1), kPi / (w2 * c2 * c2));
        };
        return SmoothMap::from_functions("sigma[rectangle]", eval, jac, domain);
    }
    case Shape::Kind::disk: {
        const double k = kPi / (2.0 * s.radius);
        auto ratio = [k](double r) { return r < 1e-8 ? k * (1.0 + (k * r) * (k * r) / 3.0) : std::tan(k * r) / r; };
        auto dh = [k](double r) {
            const double c = std::cos(k * r);
            return k / (c * c);
        };
        return radial_map("sigma[disk]", s.center, {}, ratio, dh, domain);
    }
    case Shape::Kind::annulus: {
        const double lg = 0.5 * (std::log(s.r_in) + std::log(s.r_out));
        const double k = kPi / (std::log(s.r_out) - std::log(s.r_in));
        auto h = [=](double r) { return std::exp(std::tan(k * (std::log(r) - lg))); };
        auto ratio = [=](double r) { return h(r) / r; };
        auto dh = [=](double r) {
            const double c = std::cos(k * (std::log(r) - lg));
            return h(r) * k / (c * c * r);
        };
        return radial_map("sigma[annulus]", s.center, {}, ratio, dh, domain);
    }
    case Shape::Kind::plane: return SmoothMap::identity();
    }
    throw ConfigurationError("unknown shape");
}

Vec2 plane_to_shape(const Shape& s, const Vec2& y)
{
    switch (s.kind) {
    case Shape::Kind::rectangle: {
        const double w1 = s.x_hi - s.x_lo, w2 = s.y_hi - s.y_lo;
        return {0.5 * (s.x_lo + s.x_hi) + w1 / kPi * std::atan(y.x), 0.5 * (s.y_lo + s.y_hi) + w2 / kPi * std::atan(y.y)};
    }
    case Shape::Kind::disk: {
        const double rho = y.norm();
        const double c = 2.0 * s.radius / kPi;
        const double ratio = rho < 1e-8 ? c * (1.0 - rho * rho / 3.0) : c * std::atan(rho) / rho;
        return s.center + y * ratio;
    }
    case Shape::Kind::annulus: {
        const double rho = y.norm();
        if (rho == 0.0) throw DomainViolation("plane_to_shape[annulus]: the origin is the excluded puncture");
        const double lg = 0.5 * (std::log(s.r_in) + std::log(s.r_out));
        const double L = std::log(s.r_out) - std::log(s.r_in);
        const double r = std::exp(lg + L / kPi * std::atan(std::log(rho)));
        return s.center + y * (r / rho);
    }
    case Shape::Kind::plane: return y;
    }
    return y;
}

SmoothMap plane_to_shape_map(const Shape& s)
{
    return SmoothMap::from_functions("sigma_inv[" + s.name() + "]", [s](const Vec2& y) { return plane_to_shape(s, y); });
}

double plane_to_shape_density(const Shape& s, const Vec2& y)
{
    switch (s.kind) {
    case Shape::Kind::rectangle: {
        const double w1 = s.x_hi - s.x_lo, w2 = s.y_hi - s.y_lo;
        return (w1 / kPi) / (1.0 + y.x * y.x) * (w2 / kPi) / (1.0 + y.y * y.y);
    }
    case Shape::Kind::disk: {
        const double rho = y.norm();
        const double c = 2.0 * s.radius / kPi;
        const double ratio = rho < 1e-8 ? 1.0 - rho * rho / 3.0 : std::atan(rho) / rho;
        return c * c * ratio / (1.0 + rho * rho);
    }
    case Shape::Kind::annulus: {
        const double rho = y.norm();
        if (rho == 0.0) return 0.0;
        const double lg = 0.5 * (std::log(s.r_in) + std::log(s.r_out));
        const double L = std::log(s.r_out) - std::log(s.r_in);
        const double t = std::log(rho);
        const double r = std::exp(lg + L / kPi * std::atan(t));
        const double dr = r * (L / kPi) / (1.0 + t * t) / rho;
        return dr * r / rho;
    }
    case Shape::Kind::plane: return 1.0;
    }
    return 0.0;
}

std::vector<Vec2> interior_samples(const Shape& s, std::size_t n, double margin, double window, std::uint64_t offset)
{
    Vec2 lo, hi;
    s.bounds(lo, hi, window);
    std::vector<Vec2> out;
    out.reserve(n);
    std::uint64_t index = offset;
    const std::uint64_t limit = offset + 1000 * n + 1000;
    while (out.size() < n) {
        if (++index > limit) throw ConfigurationError("margin leaves no interior to sample in " + s.name());
        const Vec2 h = num::halton2(index);
        const Vec2 x{lo.x + (hi.x - lo.x) * h.x, lo.y + (hi.y - lo.y) * h.y};
        if (s.kind == Shape::Kind::plane || (s.contains(x) && s.boundary_distance(x) >= margin)) out.push_back(x);
    }
    return out;
}

// ---------------------------------------------------------------------------

LedgerEntry estimate_deficit(const std::function<bool(const Vec2&)>& image_contains, double radius,
                             std::uint64_t samples, std::uint64_t seed, kernels::Exec exec)
{
    constexpr std::size_t chunks = 64;
    std::vector<std::uint64_t> misses(chunks, 0);
    kernels::for_each_index(chunks, exec, [&](std::size_t c) {
        std::seed_seq seq{seed, static_cast<std::uint64_t>(c)};
        std::mt19937_64 gen(seq);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const std::uint64_t begin = samples * c / chunks, end = samples * (c + 1) / chunks;
        std::uint64_t miss = 0;
        for (std::uint64_t i = begin; i < end; ++i) {
            const double r = radius * std::sqrt(unit(gen));
            const double t = 2.0 * kPi * unit(gen);
            if (!image_contains({r * std::cos(t), r * std::sin(t)})) ++miss;
        }
        misses[c] = miss;
    });
    std::uint64_t total = 0;
    for (auto m : misses) total += m;
    const double area = kPi * radius * radius;
    const double p = static_cast<double>(total) / static_cast<double>(samples);
    LedgerEntry e;
    e.ball_radius = radius;
    e.deficit = area * p;
    e.half_width = 1.96 * area * std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
    return e;
}

ExhaustionChain exhaustion_glue(const ExhaustionProvider& provider, ExhaustionOptions opt)
{
    if (opt.stages < 1) throw ConfigurationError("exhaustion needs at least one stage");
    ExhaustionChain chain;
    for (int k = 1; k <= opt.stages; ++k) {
        ExhaustionStage stage = provider(k);
        double disagreement = 0.0;
        if (k > 1) {
            const ExhaustionStage& prev = chain.stages.back();
            int found = 0;
            for (std::uint64_t i = 1; found < opt.probes && i < 1000ull * opt.probes; ++i) {
                const Vec2 h = num::halton2(i);
                const Vec2 x{prev.extent * (2.0 * h.x - 1.0), prev.extent * (2.0 * h.y - 1.0)};
                if (!prev.contains(x)) continue;
                ++found;
                if (!stage.contains(x)) {
                    std::ostringstream os;
                    os << "V_" << k - 1 << " is not contained in V_" << k << " at (" << x.x << ", " << x.y << ")";
                    throw InconsistentChain(os.str());
                }
                disagreement = std::max(disagreement, (stage.sigma(x) - prev.sigma(x)).norm());
            }
            if (disagreement > opt.agreement_tol) {
                std::ostringstream os;
                os << "sigma_" << k << " disagrees with sigma_" << k - 1 << " on V_" << k - 1 << " by "
                   << disagreement;
                throw InconsistentChain(os.str());
            }
        }
        LedgerEntry e = estimate_deficit(stage.image_contains, static_cast<double>(k), opt.samples,
                                         opt.seed + static_cast<std::uint64_t>(k), opt.exec);
        e.k = k;
        e.bound = std::ldexp(1.0, -k);
        e.max_disagreement = disagreement;
        if (e.deficit > e.bound + 3.0 * e.half_width) {
            std::ostringstream os;
            os << "stage " << k << ": |B_k \\ sigma_k(V_k)| estimate " << e.deficit << " exceeds 2^-" << k
               << " + 3 half-widths (" << e.bound + 3.0 * e.half_width << ")";
            throw DeficitViolation(os.str());
        }
        chain.ledger.push_back(e);
        chain.stages.push_back(std::move(stage));
    }
    auto stages = std::make_shared<std::vector<ExhaustionStage>>(chain.stages);
    auto pick = [stages](const Vec2& x) -> const ExhaustionStage& {
        for (const auto& s : *stages)
            if (s.contains(x)) return s;
        throw DomainViolation("glued exhaustion map: point outside every stage");
    };
    chain.glued = SmoothMap::from_functions(
        "sigma[glued]", [pick](const Vec2& x) { return pick(x).sigma(x); },
        [pick](const Vec2& x) { return pick(x).sigma.jacobian(x); });
    return chain;
}

namespace {

double demo_radius(int k) { return static_cast<double>(k) / (k + 1); }

// C_k: total radial shortfall so that pi (k^2 - (k - C_k)^2) = 2^{-k}/2.
double demo_shortfall(int k)
{
    if (k <= 0) return 0.0;
    const double d = std::ldexp(0.5, -k);
    return k - std::sqrt(static_cast<double>(k) * k - d / kPi);
}

// Base profile h(r) = r/(1-r) for r >= 1/4, flattened to r near 0.
double demo_base(double r, double& dh)
{
    const double b = flat_step(8.0 * r - 1.0), db = 8.0 * flat_step_derivative(8.0 * r - 1.0);
    const double e = r * r / (1.0 - r);
    const double de = r * (2.0 - r) / ((1.0 - r) * (1.0 - r));
    dh = 1.0 + de * b + e * db;
    return r + e * b;
}

} // namespace

double demo_disk_chain_deficit(int k) { return std::ldexp(0.5, -k); }

ExhaustionProvider demo_disk_chain()
{
    return [](int k) {
        const double rk = demo_radius(k);
        const double target = k - demo_shortfall(k);
        // h_k(r) = h(r) - sum_{j<=k} c_j step_j(r), c_j = C_j - C_{j-1}.
        auto hk = [k](double r, double& dh) {
            double h = demo_base(r, dh);
            for (int j = 1; j <= k; ++j) {
                const double lo = j == 1 ? 0.25 : demo_radius(j - 1), hi = demo_radius(j);
                const double c = demo_shortfall(j) - demo_shortfall(j - 1);
                const double u = (r - lo) / (hi - lo);
                h -= c * flat_step(u);
                dh -= c * flat_step_derivative(u) / (hi - lo);
            }
            return h;
        };
        auto ratio = [hk](double r) {
            double dh;
            return r < 0.1 ? 1.0 : hk(r, dh) / r;
        };
        auto deriv = [hk](double r) {
            double dh;
            hk(r, dh);
            return dh;
        };
        ExhaustionStage s;
        s.contains = [rk](const Vec2& x) { return x.norm() < rk; };
        s.extent = rk;
        s.sigma = radial_map("sigma_" + std::to_string(k), {}, {}, ratio, deriv, nullptr);
        s.image_contains = [target](const Vec2& y) { return y.norm() < target; };
        return s;
    };
}

ExhaustionProvider identity_ball_chain()
{
    return [](int k) {
        ExhaustionStage s;
        const double r = k;
        s.contains = [r](const Vec2& x) { return x.norm() < r; };
        s.extent = r;
        s.sigma = SmoothMap::identity();
        s.image_contains = [r](const Vec2& y) { return y.norm() < r; };
        return s;
    };
}

} // namespace vpe
