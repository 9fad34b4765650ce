#include "vpe/straighten.hpp"

#include "vpe/errors.hpp"
#include "vpe/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace vpe {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double psi(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }
double dpsi(double s) { return s > 0.0 ? std::exp(-1.0 / s) / (s * s) : 0.0; }

// Compact bump exp(-1/(1-u^2)) and its derivative in u.
inline double bump(double u)
{
    const double q = 1.0 - u * u;
    return q > 0.0 ? std::exp(-1.0 / q) : 0.0;
}
inline double bump_derivative(double u)
{
    const double q = 1.0 - u * u;
    return q > 0.0 ? std::exp(-1.0 / q) * (-2.0 * u / (q * q)) : 0.0;
}

// Saturating stage blend: flat at 0, strictly increasing on (0, inf), -> 1.
inline double blend(double u) { return u <= 0.0 ? 0.0 : flat_step(u) * -std::expm1(-u); }
inline double blend_derivative(double u)
{
    if (u <= 0.0) return 0.0;
    return flat_step_derivative(u) * -std::expm1(-u) + flat_step(u) * std::exp(-u);
}

// Quintic Hermite table of core_integral with exact first and second derivatives.
struct CoreTable
{
    static constexpr int n = 1024;
    std::vector<double> f, d1, d2;
    CoreTable() : f(n + 1), d1(n + 1), d2(n + 1)
    {
        const double h = 1.0 / n;
        for (int k = 0; k <= n; ++k) {
            const double y = k * h;
            f[k] = k == 0 ? 0.0 : f[k - 1] + num::gauss_panel([](double v) { return 1.0 - flat_step(v); }, y - h, y);
            d1[k] = 1.0 - flat_step(y);
            d2[k] = -flat_step_derivative(y);
        }
    }
    double operator()(double y) const
    {
        const double h = 1.0 / n;
        const int k = std::min(static_cast<int>(y * n), n - 1);
        const double t = y * n - k, t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
        const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5, h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
        const double h2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5), h3 = 10 * t3 - 15 * t4 + 6 * t5;
        const double h4 = -4 * t3 + 7 * t4 - 3 * t5, h5 = 0.5 * (t3 - 2 * t4 + t5);
        return h0 * f[k] + h * h1 * d1[k] + h * h * h2 * d2[k] + h3 * f[k + 1] + h * h4 * d1[k + 1] +
               h * h * h5 * d2[k + 1];
    }
};

// ∫_0^y (1 - flat_step(v)) dv for y in [0, 1].
double core_integral(double y)
{
    if (y <= 0.0) return 0.0;
    if (y >= 1.0) return 0.5;
    static const CoreTable table;
    return table(y);
}

} // namespace

double flat_step(double u)
{
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const double a = psi(u), b = psi(1.0 - u);
    return a / (a + b);
}

double flat_step_derivative(double u)
{
    if (u <= 0.0 || u >= 1.0) return 0.0;
    const double a = psi(u), b = psi(1.0 - u);
    const double da = dpsi(u), db = -dpsi(1.0 - u);
    const double s = a + b;
    return (da * s - a * (da + db)) / (s * s);
}

// ---------------------------------------------------------------------------

MinorantLadder::MinorantLadder(CutTimeProfile profile, std::vector<LadderStage> stages, double r0, bool smooth)
: profile_(std::move(profile)), stages_(std::move(stages)), r0_(r0), smooth_(smooth) {}

double MinorantLadder::target(int i, double theta) const
{
    const auto& s = stages_[i - 1];
    return std::min(static_cast<double>(i), profile_.value(theta) - s.eps + 0.5 * s.delta);
}

namespace {

struct PieceValues
{
    double h[16];
    double dh[16];
    int n = 0;
};

void lattice_piece_values(const LatticePieces& p, double theta, PieceValues& out)
{
    const double c = std::cos(theta), s = std::sin(theta);
    out.n = 0;
    for (const auto& w : p.vectors) {
        const double q = c * w.x + s * w.y;
        if (q <= 0.0 || out.n >= 16) continue;
        const double dq = -s * w.x + c * w.y;
        const double ww = w.dot(w);
        out.h[out.n] = ww / (2.0 * q);
        out.dh[out.n] = -ww * dq / (2.0 * q * q);
        ++out.n;
    }
}

// Soft minimum of {i, h_k + c, cap + c} and its theta-derivative.
void soft_stage(const PieceValues& pv, double cap, double level, double c, double beta, double& v, double& d)
{
    double m = level;
    for (int k = 0; k < pv.n; ++k) m = std::min(m, pv.h[k] + c);
    if (std::isfinite(cap)) m = std::min(m, cap + c);
    // Terms with z > 40 are below roundoff against the minimum term.
    double sum = 0.0, dsum = 0.0;
    auto add = [&](double a, double b) {
        const double z = beta * (a - m);
        if (z > 40.0) return;
        const double e = z == 0.0 ? 1.0 : std::exp(-z);
        sum += e;
        dsum += e * b;
    };
    add(level, 0.0);
    for (int k = 0; k < pv.n; ++k) add(pv.h[k] + c, pv.dh[k]);
    if (std::isfinite(cap)) add(cap + c, 0.0);
    v = sum == 1.0 ? m : m - std::log(sum) / beta;
    d = dsum / sum;
}

} // namespace

void MinorantLadder::evaluate_stages(int count, double theta, double* value, double* derivative) const
{
    if (smooth_ && profile_.pieces() && count > 0 && stages_[0].beta > 0.0) {
        PieceValues pv;
        const LatticePieces& p = *profile_.pieces();
        lattice_piece_values(p, theta, pv);
        for (int i = 1; i <= count; ++i) {
            const auto& s = stages_[i - 1];
            soft_stage(pv, p.cap, static_cast<double>(i), -s.eps + 0.5 * s.delta, s.beta, value[i - 1],
                       derivative[i - 1]);
            value[i - 1] -= s.shift;
        }
        return;
    }
    for (int i = 1; i <= count; ++i) evaluate(i, theta, value[i - 1], derivative[i - 1]);
}

void MinorantLadder::evaluate(int i, double theta, double& value, double& derivative) const
{
    const auto& s = stages_[i - 1];
    if (smooth_ && s.beta > 0.0) {
        PieceValues pv;
        const LatticePieces& p = *profile_.pieces();
        lattice_piece_values(p, theta, pv);
        soft_stage(pv, p.cap, static_cast<double>(i), -s.eps + 0.5 * s.delta, s.beta, value, derivative);
        value -= s.shift;
        return;
    }
    if (!smooth_ || s.width == 0.0) {
        // Unsmoothed or constant clamp stage: exact, no shift needed.
        value = target(i, theta);
        derivative = 0.0;
        return;
    }
    const double step = kTwoPi / static_cast<double>(s.nodes);
    const double jlo = std::ceil((theta - s.width) / step);
    const double jhi = std::floor((theta + s.width) / step);
    double s0 = 0.0, s1 = 0.0, d0 = 0.0, d1 = 0.0;
    for (double j = jlo; j <= jhi; j += 1.0) {
        const double t = j * step;
        const double u = (theta - t) / s.width;
        const double k = bump(u);
        if (k == 0.0) continue;
        const double dk = bump_derivative(u) / s.width;
        const double m = target(i, t);
        s0 += k;
        s1 += m * k;
        d0 += dk;
        d1 += m * dk;
    }
    value = s1 / s0 - s.shift;
    derivative = (d1 * s0 - s1 * d0) / (s0 * s0);
}

double MinorantLadder::value(int i, double theta) const
{
    double v, d;
    evaluate(i, theta, v, d);
    return v;
}

double MinorantLadder::derivative(int i, double theta) const
{
    double v, d;
    evaluate(i, theta, v, d);
    return d;
}

MinorantLadder build_minorants(const CutTimeProfile& profile, int stages, LadderOptions opt)
{
    if (stages < 1) throw ConfigurationError("a minorant ladder needs at least one stage");
    const double inf_mu = profile.inf_value();
    const double eps1 = opt.eps1.value_or(0.5 * std::min(1.0, inf_mu));
    if (!(eps1 > 0.0) || !(eps1 < 2.0)) throw ConfigurationError("eps_1 must lie in (0, 2)");
    if (inf_mu <= eps1) {
        std::ostringstream os;
        os << "profile minimum " << inf_mu << " does not exceed eps_1 = " << eps1 << "; shrink eps_1";
        throw InfeasibleLadder(os.str());
    }
    const double r0 = opt.r0.value_or(std::min(0.5, 0.5 * inf_mu));
    if (!(r0 > 0.0) || !(r0 < 1.0)) throw ConfigurationError("r0 must lie in (0, 1)");

    const bool smooth = profile.regularity() == ProfileRegularity::piecewise ||
                        profile.regularity() == ProfileRegularity::even_reciprocal;

    std::vector<LadderStage> out;
    out.reserve(stages);
    for (int i = 1; i <= stages; ++i) {
        LadderStage s;
        s.index = i;
        s.eps = eps1 * std::ldexp(1.0, 1 - i);
        s.delta = opt.delta_ratio * s.eps;
        s.start = 0.5 * r0 + (i - 1) * opt.stage_spacing;
        s.length = opt.stage_spacing;
        if (smooth && profile.pieces()) {
            const int n = static_cast<int>(profile.pieces()->vectors.size()) + 2;
            s.beta = 8.0 * std::log(static_cast<double>(n)) / s.delta;
            s.shift = 0.25 * s.delta;
        } else if (smooth) {
            constexpr int fine = 1 << 16;
            const double h = kTwoPi / fine;
            auto m = [&](double t) {
                return std::min(static_cast<double>(i), profile.value(t) - s.eps + 0.5 * s.delta);
            };
            double lip = 0.0, prev = m(0.0);
            for (int k = 1; k <= fine; ++k) {
                const double v = m(k * h);
                lip = std::max(lip, std::abs(v - prev) / h);
                prev = v;
            }
            if (lip > 0.0) {
                s.width = std::min(0.1, s.delta / (8.0 * lip));
                s.nodes = static_cast<std::int64_t>(std::ceil(kTwoPi / (0.25 * s.width)));
                s.shift = 0.25 * s.delta;
            }
        }
        out.push_back(s);
    }
    MinorantLadder ladder(profile, std::move(out), r0, smooth);

    // Strict chain check on sampled directions.
    const double core = 0.75 * r0;
    for (int k = 0; k < 3600; ++k) {
        const double t = kTwoPi * k / 3600;
        const double mu = profile.value(t);
        double prev = core;
        std::vector<double> vals(stages), ders(stages);
        ladder.evaluate_stages(stages, t, vals.data(), ders.data());
        for (int i = 1; i <= stages; ++i) {
            const double v = vals[i - 1];
            if (!(v > prev) || !(v < mu)) {
                std::ostringstream os;
                os << "minorant chain broken at stage " << i << ", theta = " << t << " (value " << v
                   << ", previous " << prev << ", mu " << mu << ")";
                throw InfeasibleLadder(os.str());
            }
            prev = v;
        }
    }
    return ladder;
}

// ---------------------------------------------------------------------------

namespace {

class RaySmoothImpl final : public SmoothMap::Impl
{
public:
    RaySmoothImpl(std::shared_ptr<const RayMap> ray, double identity_radius)
    : ray_(std::move(ray)), identity_radius_(identity_radius) {}

    Vec2 evaluate(const Vec2& x) const override
    {
        const double r = x.norm();
        if (r <= identity_radius_ || r == 0.0) return x;
        double f, fr, ft;
        ray_->radius(r, std::atan2(x.y, x.x), f, fr, ft);
        return x * (f / r);
    }

    Mat2 jacobian(const Vec2& x) const override
    {
        const double r = x.norm();
        if (r <= identity_radius_ || r == 0.0) return Mat2::identity();
        double f, fr, ft;
        ray_->radius(r, std::atan2(x.y, x.x), f, fr, ft);
        const Vec2 v = x / r;
        const Vec2 n{-v.y, v.x};
        // D rho = fr v v^T + (ft / r) v n^T + (f / r) n n^T
        const double g = f / r, h = ft / r;
        return {fr * v.x * v.x + h * v.x * n.x + g * n.x * n.x, fr * v.x * v.y + h * v.x * n.y + g * n.x * n.y,
                fr * v.y * v.x + h * v.y * n.x + g * n.y * n.x, fr * v.y * v.y + h * v.y * n.y + g * n.y * n.y};
    }

    bool has_analytic_jacobian() const override { return true; }

    double det(const Vec2& x) const override
    {
        double d;
        evaluate_det(x, d);
        return d;
    }

    // det D rho = f fr / r
    Vec2 evaluate_det(const Vec2& x, double& d) const override
    {
        const double r = x.norm();
        if (r <= identity_radius_ || r == 0.0) {
            d = 1.0;
            return x;
        }
        double f, fr, ft;
        ray_->radius(r, std::atan2(x.y, x.x), f, fr, ft);
        d = f * fr / r;
        return x * (f / r);
    }

private:
    std::shared_ptr<const RayMap> ray_;
    double identity_radius_;
};

class LadderRayMap final : public RayMap
{
public:
    explicit LadderRayMap(MinorantLadder ladder) : ladder_(std::move(ladder))
    {
        core_start_ = 0.5 * ladder_.r0();
        core_width_ = core_start_;
        core_mass_ = core_start_ + 0.5 * core_width_;
        // Past its ramp a stage blends as 1 - exp(-u); with a common stage
        // length one exponential serves every stage.
        length_ = ladder_.stages().front().length;
        for (const auto& st : ladder_.stages()) {
            if (st.length != length_) uniform_ = false;
            tail_factor_.push_back(std::exp(st.start / length_));
        }
    }

    void radius(double r, double theta, double& f, double& fr, double& ft) const override
    {
        ft = 0.0;
        if (r <= core_start_) {
            f = r;
            fr = 1.0;
            return;
        }
        const double y = (r - core_start_) / core_width_;
        f = core_start_ + core_width_ * core_integral(y);
        fr = 1.0 - flat_step(y);
        int active = 0;
        for (const auto& s : ladder_.stages()) {
            if (r <= s.start) break;
            ++active;
        }
        if (active == 0) return;
        double vals[64], ders[64];
        std::vector<double> vbuf, dbuf;
        double* v = vals;
        double* dv = ders;
        if (active > 64) {
            vbuf.resize(active);
            dbuf.resize(active);
            v = vbuf.data();
            dv = dbuf.data();
        }
        ladder_.evaluate_stages(active, theta, v, dv);
        const double decay = uniform_ ? std::exp(-r / length_) : 0.0;
        double prev = core_mass_, prev_d = 0.0;
        for (int i = 0; i < active; ++i) {
            const auto& s = ladder_.stage(i + 1);
            const double u = (r - s.start) / s.length;
            const double inc = v[i] - prev, inc_d = dv[i] - prev_d;
            double b, db;
            if (uniform_ && u >= 1.0) {
                const double e = decay * tail_factor_[i];
                b = 1.0 - e;
                db = e;
            } else {
                b = blend(u);
                db = blend_derivative(u);
            }
            f += inc * b;
            fr += inc * db / s.length;
            ft += inc_d * b;
            prev = v[i];
            prev_d = dv[i];
        }
    }

private:
    MinorantLadder ladder_;
    double core_start_, core_width_, core_mass_;
    double length_ = 1.0;
    bool uniform_ = true;
    std::vector<double> tail_factor_;
};

class SimpleRayMap final : public RayMap
{
public:
    SimpleRayMap(CutTimeProfile profile, Saturation sat) : profile_(std::move(profile)), sat_(sat) {}

    void radius(double r, double theta, double& f, double& fr, double& ft) const override
    {
        const double mu = profile_.value(theta);
        const double kappa = std::isfinite(mu) ? 1.0 / mu : 0.0;
        profile_at(r, kappa, f, fr);
        ft = 0.0;
        if (profile_.regularity() == ProfileRegularity::even_reciprocal) {
            constexpr double h = 1e-6;
            auto k = [&](double t) {
                const double m = profile_.value(t);
                return std::isfinite(m) ? 1.0 / m : 0.0;
            };
            const double dk = (k(theta + h) - k(theta - h)) / (2.0 * h);
            ft = df_dkappa(r, kappa) * dk;
        }
    }

private:
    void profile_at(double r, double kappa, double& f, double& fr) const
    {
        if (kappa == 0.0) {
            f = r;
            fr = 1.0;
            return;
        }
        const double z = r * kappa;
        if (sat_ == Saturation::exponential) {
            f = -std::expm1(-z) / kappa;
            fr = std::exp(-z);
        } else {
            f = std::tanh(z) / kappa;
            const double c = 1.0 / std::cosh(z);
            fr = c * c;
        }
    }

    // d/dkappa of tanh(r kappa)/kappa (the only saturation used with kappa'(theta) != 0).
    static double df_dkappa(double r, double kappa)
    {
        const double z = r * kappa;
        if (std::abs(z) < 1e-4) return -2.0 / 3.0 * r * r * r * kappa;
        const double c = 1.0 / std::cosh(z);
        return (z * c * c - std::tanh(z)) / (kappa * kappa);
    }

    CutTimeProfile profile_;
    Saturation sat_;
};

} // namespace

SmoothMap ray_map_to_smooth(std::shared_ptr<const RayMap> ray, std::string tag, double identity_radius)
{
    auto impl = std::make_shared<RaySmoothImpl>(std::move(ray), identity_radius);
    impl->tag = std::move(tag);
    return SmoothMap(std::move(impl));
}

SmoothMap straighten(const CutTimeProfile& profile, const MinorantLadder& ladder)
{
    if (profile.regularity() == ProfileRegularity::infinite) return SmoothMap::identity();
    if (ladder.profile().label() != profile.label())
        throw ConfigurationError("minorant ladder was built for profile '" + ladder.profile().label() +
                                 "', not '" + profile.label() + "'");
    return ray_map_to_smooth(std::make_shared<LadderRayMap>(ladder), "straighten[" + profile.label() + "]",
                             0.5 * ladder.r0());
}

SmoothMap simple_ray_map(const CutTimeProfile& profile, Saturation saturation)
{
    switch (profile.regularity()) {
    case ProfileRegularity::infinite: return SmoothMap::identity();
    case ProfileRegularity::constant: break;
    case ProfileRegularity::even_reciprocal:
        if (saturation != Saturation::hyperbolic_tangent)
            throw RefusedProfile("profile '" + profile.label() +
                                 "' has a |smooth| reciprocal; only the tanh saturation is smooth on it");
        break;
    case ProfileRegularity::piecewise:
        throw RefusedProfile("profile '" + profile.label() +
                             "' is only piecewise smooth; use straighten with a minorant ladder");
    }
    return ray_map_to_smooth(std::make_shared<SimpleRayMap>(profile, saturation),
                             "ray_map[" + profile.label() + "]", 0.0);
}

} // namespace vpe
