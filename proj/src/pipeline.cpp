#include "vpe/pipeline.hpp"

#include "vpe/errors.hpp"
#include "vpe/numerics.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace vpe {

namespace {

constexpr double kPi = std::numbers::pi;

template <class F>
auto staged(const std::string& stage, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(stage, e);
    }
}

// Vol of exp_p({|x| < min(mu, R)}) for the capped Case 1 window.
double windowed_mass(const ModelManifold& m, const CutTimeProfile& profile, double cap)
{
    constexpr int n = 720;
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        const double t = 2.0 * kPi * (k + 0.5) / n;
        const double r = std::min(profile.value(t), cap);
        const Vec2 u = unit_direction(t);
        sum += num::gauss_composite([&](double s) { return m.exp_density(u * s) * s; }, 0.0, r, 8);
    }
    return sum * 2.0 * kPi / n;
}

Vec2 interior_probe(const Shape& s)
{
    switch (s.kind) {
    case Shape::Kind::rectangle: return {0.5 * (s.x_lo + s.x_hi), 0.5 * (s.y_lo + s.y_hi)};
    case Shape::Kind::disk: return s.center;
    case Shape::Kind::annulus: return s.center + Vec2{std::sqrt(s.r_in * s.r_out), 0.0};
    case Shape::Kind::plane: return {};
    }
    return {};
}

} // namespace

std::string ConditionResult::verdict_name() const
{
    switch (verdict) {
    case Verdict::equality: return "equality";
    case Verdict::strict: return "strict";
    case Verdict::violation: return "violation";
    }
    return "unknown";
}

ConditionResult check_condition(const PlanarDomain& u, const ModelManifold& m, double equality_tol)
{
    ConditionResult c;
    c.domain_volume = lebesgue_volume(u);
    c.manifold_volume = total_volume(m).value;
    const bool du = c.domain_volume.is_infinite(), dm = c.manifold_volume.is_infinite();
    if (du && dm) {
        c.verdict = ConditionResult::Verdict::equality;
    } else if (du) {
        c.verdict = ConditionResult::Verdict::violation;
        c.excess = std::numeric_limits<double>::infinity();
    } else if (dm) {
        c.verdict = ConditionResult::Verdict::strict;
    } else {
        const double d = c.domain_volume.value() - c.manifold_volume.value();
        if (std::abs(d) <= equality_tol) c.verdict = ConditionResult::Verdict::equality;
        else if (d > 0.0) {
            c.verdict = ConditionResult::Verdict::violation;
            c.excess = d;
        } else c.verdict = ConditionResult::Verdict::strict;
    }
    return c;
}

namespace {
std::atomic<std::size_t> g_builds{0};
} // namespace

std::size_t build_invocations() { return g_builds.load(); }

EmbeddingAtlas build_embedding(const PlanarDomain& u, const ModelManifold& m, BuildConfig cfg)
{
    ++g_builds;
    EmbeddingAtlas atlas(m);
    atlas.config = cfg;
    atlas.condition = check_condition(u, m);
    if (!atlas.condition.ok()) {
        std::ostringstream os;
        os << "|U| = " << atlas.condition.domain_volume.value() << " exceeds Vol(M) = "
           << atlas.condition.manifold_volume.value();
        throw StageError("condition", InsufficientVolume(os.str()));
    }
    const bool infinite_case = atlas.condition.domain_volume.is_infinite();
    atlas.case_tag = infinite_case ? EmbeddingAtlas::Case::infinite : EmbeddingAtlas::Case::finite;
    // Only values of the omega marginal are used (strip bounds), so its table is not refined.
    DensityOptions omega_grid = cfg.grid;
    omega_grid.refine_depth = 0;
    const PullbackOptions pb{omega_grid, cfg.density_scale};

    if (infinite_case) {
        if (u.size() != 1 || u[0].kind != Shape::Kind::plane)
            throw StageError("condition", ConfigurationError("infinite-area domains must be the single plane shape"));
        staged("straighten", [&] {
            const CutTimeProfile profile = cut_time_profile(m);
            atlas.profile = profile;
            switch (profile.regularity()) {
            case ProfileRegularity::infinite:
                atlas.rho = SmoothMap::identity();
                atlas.rho_kind = "identity";
                break;
            case ProfileRegularity::even_reciprocal:
                atlas.rho = simple_ray_map(profile, Saturation::hyperbolic_tangent);
                atlas.rho_kind = "simple_tanh";
                break;
            default:
                throw RefusedProfile("infinite-area domains need a target whose straightening has "
                                     "infinite-mass lines (flat cylinder or constant plane density)");
            }
            return 0;
        });
        staged("pullback", [&] {
            atlas.omega.emplace(pullback_density(m, atlas.rho, DensityField::MassKind::infinite, pb));
            return 0;
        });
        ComponentEmbedding c;
        c.shape = u[0];
        c.sigma = SmoothMap::identity();
        c.tau = SmoothMap::identity();
        c.volume = std::numeric_limits<double>::infinity();
        c.target_volume = std::numeric_limits<double>::infinity();
        staged("transport", [&] {
            c.source.emplace([](const Vec2&) { return 1.0; }, Axis::real_line(cfg.density_scale),
                             Axis::real_line(cfg.density_scale), DensityField::MassKind::infinite, cfg.grid);
            c.target.emplace(*atlas.omega);
            c.psi = anchored_knothe(*c.source, *c.target);
            return 0;
        });
        c.pre_chart = compose(atlas.rho, c.psi->map);
        c.phi = compose(exp_chart_map(m), c.pre_chart);
        atlas.components.push_back(std::move(c));
        return atlas;
    }

    // Case 1: |U| finite.
    staged("straighten", [&] {
        CutTimeProfile profile = cut_time_profile(m);
        if (atlas.condition.manifold_volume.is_infinite()) {
            const double need = 2.0 * atlas.condition.domain_volume.value();
            double cap = 2.0;
            while (windowed_mass(m, profile, cap) < need) {
                cap *= 2.0;
                if (cap > 1e6) throw InsufficientVolume("no finite window of the target holds twice |U|");
            }
            atlas.profile_cap = cap;
            profile = profile.capped(cap);
        }
        atlas.profile = profile;
        switch (profile.regularity()) {
        case ProfileRegularity::infinite:
            atlas.rho = SmoothMap::identity();
            atlas.rho_kind = "identity";
            break;
        case ProfileRegularity::constant:
            atlas.rho = simple_ray_map(profile);
            atlas.rho_kind = "simple";
            break;
        case ProfileRegularity::even_reciprocal:
            atlas.rho = simple_ray_map(profile, Saturation::hyperbolic_tangent);
            atlas.rho_kind = "simple_tanh";
            break;
        case ProfileRegularity::piecewise:
            atlas.rho = straighten(profile, build_minorants(profile, cfg.ladder.stages, cfg.ladder));
            atlas.rho_kind = "ladder";
            break;
        }
        if (profile.regularity() != ProfileRegularity::infinite) {
            double gap = 0.0;
            for (int k = 0; k < cfg.probe_directions; ++k) {
                const double t = 2.0 * kPi * k / cfg.probe_directions;
                const double reach = atlas.rho(unit_direction(t) * cfg.probe_radius).norm();
                gap = std::max(gap, profile.value(t) - reach);
            }
            atlas.ontoness_gap = gap;
            if (atlas.condition.verdict == ConditionResult::Verdict::equality && gap > cfg.ontoness_margin) {
                std::ostringstream os;
                os << "ontoness probe at radius " << cfg.probe_radius << " leaves a gap of " << gap
                   << " > " << cfg.ontoness_margin << "; raise the probe radius or the ladder stage count";
                throw ExhaustionMargin(os.str());
            }
        }
        return 0;
    });

    staged("pullback", [&] {
        atlas.omega.emplace(pullback_density(m, atlas.rho, DensityField::MassKind::finite, pb));
        atlas.omega->mass();
        return 0;
    });

    std::vector<double> volumes;
    for (const auto& s : u.components()) volumes.push_back(s.area().value());
    atlas.strips = staged("strips", [&] { return strip_bounds(*atlas.omega, volumes); });

    for (std::size_t i = 0; i < u.size(); ++i) {
        const std::string tag = "component " + std::to_string(i) + " (" + u[i].name() + ")";
        ComponentEmbedding c;
        c.shape = u[i];
        c.strip = i;
        c.volume = volumes[i];
        staged(tag + ": sigma", [&] {
            c.sigma = ensure_orientation(shape_to_plane(u[i]), interior_probe(u[i]));
            return 0;
        });
        const Extended lo = atlas.strips.lower(i), hi = atlas.strips.upper(i);
        c.tau = staged(tag + ": tau", [&] { return strip_map(lo, hi); });
        c.target_volume = (hi.is_infinite() ? atlas.omega->mass().value() : atlas.omega->marginal_cdf(hi.value())) -
                          (lo.is_infinite() ? 0.0 : atlas.omega->marginal_cdf(lo.value()));
        staged(tag + ": transport", [&] {
            const Shape shape = u[i];
            c.source.emplace([shape](const Vec2& y) { return plane_to_shape_density(shape, y); }, Axis::real_line(),
                             Axis::real_line(), DensityField::MassKind::finite, cfg.grid);
            const DensityField omega = *atlas.omega;
            const SmoothMap tau = c.tau;
            c.target.emplace(
                [omega, tau](const Vec2& y) { return omega(tau(y)) * tau.jacobian(y).a; },
                Axis::real_line(cfg.density_scale), Axis::real_line(cfg.density_scale), DensityField::MassKind::finite,
                cfg.grid);
            c.psi = knothe_map(*c.source, *c.target);
            return 0;
        });
        c.pre_chart = compose(atlas.rho, compose(c.tau, compose(c.psi->map, c.sigma)));
        c.phi = compose(exp_chart_map(m), c.pre_chart);
        atlas.components.push_back(std::move(c));
    }
    return atlas;
}

// ---------------------------------------------------------------------------

namespace {

struct CellKey
{
    std::int64_t a, b, c;
    bool operator==(const CellKey&) const = default;
};

struct CellHash
{
    std::size_t operator()(const CellKey& k) const
    {
        std::uint64_t h = 1469598103934665603ull;
        for (std::int64_t v : {k.a, k.b, k.c}) {
            h ^= static_cast<std::uint64_t>(v);
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

std::int64_t wrap(std::int64_t i, std::int64_t n) { return n > 0 ? ((i % n) + n) % n : i; }

// Pairs of chart points closer than `threshold` in the manifold's chart distance.
std::size_t count_collisions(const ModelManifold& m, const std::vector<Vec2>& pts, double threshold)
{
    const double cell = 1e-6;
    struct Coord
    {
        double a, b, c;
    };
    std::int64_t na = 0, nb = 0;
    double sa = cell, sb = cell;
    auto coord = [&](const Vec2& y) -> Coord {
        switch (m.kind()) {
        case ModelManifold::Kind::round_sphere: {
            const double cl = std::cos(y.y);
            const double r = m.radius();
            return {r * cl * std::cos(y.x), r * cl * std::sin(y.x), r * std::sin(y.y)};
        }
        case ModelManifold::Kind::flat_torus: {
            const Vec2 w1 = m.w1(), w2 = m.w2();
            const double det = w1.x * w2.y - w1.y * w2.x;
            double s = (y.x * w2.y - y.y * w2.x) / det, t = (w1.x * y.y - w1.y * y.x) / det;
            return {s - std::floor(s), t - std::floor(t), 0.0};
        }
        case ModelManifold::Kind::flat_cylinder: {
            const double s = y.x / m.circumference();
            return {s - std::floor(s), y.y, 0.0};
        }
        case ModelManifold::Kind::plane_with_density: return {y.x, y.y, 0.0};
        }
        return {y.x, y.y, 0.0};
    };
    if (m.kind() == ModelManifold::Kind::flat_torus) {
        // Fractional coordinates: a cell of `cell` chart length per lattice step.
        const double lmin = std::min(m.w1().norm(), m.w2().norm());
        sa = sb = std::max(cell / lmin, 1e-12);
        na = static_cast<std::int64_t>(std::floor(1.0 / sa));
        nb = na;
        sa = sb = 1.0 / static_cast<double>(na);
    } else if (m.kind() == ModelManifold::Kind::flat_cylinder) {
        na = static_cast<std::int64_t>(std::floor(m.circumference() / cell));
        sa = 1.0 / static_cast<double>(na);
    }
    auto key = [&](const Coord& c) {
        return CellKey{wrap(static_cast<std::int64_t>(std::floor(c.a / sa)), na),
                       wrap(static_cast<std::int64_t>(std::floor(c.b / sb)), nb),
                       static_cast<std::int64_t>(std::floor(c.c / cell))};
    };
    std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> grid;
    grid.reserve(pts.size() * 2);
    std::vector<CellKey> keys(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        keys[i] = key(coord(pts[i]));
        grid[keys[i]].push_back(i);
    }
    const int dc = m.kind() == ModelManifold::Kind::round_sphere ? 1 : 0;
    std::size_t collisions = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (int da = -1; da <= 1; ++da)
            for (int db = -1; db <= 1; ++db)
                for (int dd = -dc; dd <= dc; ++dd) {
                    const CellKey k{wrap(keys[i].a + da, na), wrap(keys[i].b + db, nb), keys[i].c + dd};
                    auto it = grid.find(k);
                    if (it == grid.end()) continue;
                    for (std::size_t j : it->second)
                        if (j > i && m.chart_distance(pts[i], pts[j]) < threshold) ++collisions;
                }
    }
    return collisions;
}

std::string case_name(EmbeddingAtlas::Case c) { return c == EmbeddingAtlas::Case::finite ? "finite" : "infinite"; }

} // namespace

VerificationReport verify(const EmbeddingAtlas& atlas, VerifyOptions opt)
{
    const auto t0 = std::chrono::steady_clock::now();
    const ModelManifold& m = atlas.manifold;
    VerificationReport rep;
    rep.manifold = m.kind_name();
    rep.case_tag = case_name(atlas.case_tag);
    rep.verdict = atlas.condition.verdict_name();
    rep.ontoness_gap = atlas.ontoness_gap;

    // Sample allocation proportional to component area.
    const std::size_t nc = atlas.components.size();
    std::vector<std::size_t> counts(nc, opt.samples);
    if (atlas.case_tag == EmbeddingAtlas::Case::finite && nc > 1) {
        double total = 0.0;
        for (const auto& c : atlas.components) total += c.volume;
        std::size_t used = 0;
        for (std::size_t i = 0; i < nc; ++i) {
            counts[i] = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opt.samples * atlas.components[i].volume / total)));
            if (i + 1 == nc) counts[i] = opt.samples > used ? std::max<std::size_t>(1, opt.samples - used) : 1;
            used += counts[i];
        }
    }

    std::vector<SampleRecord> recs;
    for (std::size_t i = 0; i < nc; ++i) {
        const auto pts = interior_samples(atlas.components[i].shape, counts[i], opt.margin, opt.window,
                                          opt.seed + 7919ull * i);
        for (const auto& p : pts) {
            SampleRecord r;
            r.u = p;
            r.component = i;
            recs.push_back(r);
        }
    }

    const double sphere_limit = kPi * m.radius() - opt.cut_locus_margin;
    kernels::for_each_index(recs.size(), opt.exec, [&](std::size_t k) {
        SampleRecord& r = recs[k];
        const ComponentEmbedding& c = atlas.components[r.component];
        const Vec2 y = c.sigma(r.u);
        double det = jacobian_det(c.sigma, r.u);
        Vec2 z = y;
        if (opt.corrupt_transport) {
            r.bookkeeping = std::abs(c.target->operator()(y) / c.source->operator()(y) - 1.0);
        } else {
            z = c.psi->map(y);
            const auto [a, b] = c.psi->difference_diagonal(y);
            det *= a * b;
            r.bookkeeping = transport_residual(*c.psi, *c.source, *c.target, y);
        }
        const Vec2 w = c.tau(z);
        det *= jacobian_det(c.tau, z);
        const Vec2 t = atlas.rho(w);
        det *= jacobian_det(atlas.rho, w);
        r.chart_radius = t.norm();
        if (m.kind() == ModelManifold::Kind::round_sphere && r.chart_radius > sphere_limit) {
            r.rejected = true;
            return;
        }
        r.m = exp_chart(m, t);
        det *= exp_chart_jacobian(m, t).det();
        r.det = det;
        r.residual = std::abs(det * m.chart_density(r.m) - 1.0);
    });

    // Deterministic reduction in sample order.
    std::vector<Vec2> mapped;
    double sum = 0.0;
    rep.min_det = std::numeric_limits<double>::infinity();
    for (const auto& r : recs) {
        rep.max_chart_radius = std::max(rep.max_chart_radius, r.chart_radius);
        if (r.rejected) {
            ++rep.rejected;
            continue;
        }
        ++rep.samples;
        const double res = std::isfinite(r.residual) ? r.residual : std::numeric_limits<double>::infinity();
        rep.max_residual = std::max(rep.max_residual, res);
        sum += res;
        rep.max_bookkeeping = std::max(rep.max_bookkeeping, r.bookkeeping);
        rep.min_det = std::min(rep.min_det, r.det);
        if (!(r.det > 0.0)) ++rep.nonpositive_det;
        mapped.push_back(r.m);
    }
    rep.mean_residual = rep.samples ? sum / static_cast<double>(rep.samples) : 0.0;
    rep.bookkeeping_ratio = rep.max_bookkeeping > 0.0 ? rep.max_residual / rep.max_bookkeeping : 0.0;
    rep.collisions = count_collisions(m, mapped, opt.collision_threshold);

    rep.total_volume = total_volume(m).value;
    if (atlas.case_tag == EmbeddingAtlas::Case::finite) {
        for (std::size_t i = 0; i < nc; ++i) {
            StripVolumeRow row;
            row.component = i;
            row.lower = atlas.strips.lower(i);
            row.upper = atlas.strips.upper(i);
            row.target = atlas.components[i].volume;
            row.table = atlas.components[i].target_volume;
            row.achieved = strip_volume(*atlas.omega, row.lower, row.upper);
            rep.achieved_volume += row.achieved;
            rep.strips.push_back(row);
        }
        rep.deficit = rep.total_volume.is_infinite() ? 0.0 : rep.total_volume.value() - rep.achieved_volume;
    }
    if (opt.keep_samples) rep.records = std::move(recs);
    rep.verify_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

namespace {

nlohmann::ordered_json extended_json(const Extended& e)
{
    if (e.is_positive_infinity()) return "inf";
    if (e.is_negative_infinity()) return "-inf";
    return e.value();
}

} // namespace

std::string report_json(const VerificationReport& r, bool with_timings)
{
    nlohmann::ordered_json j;
    j["scenario"] = r.scenario;
    j["manifold"] = r.manifold;
    j["case"] = r.case_tag;
    j["verdict"] = r.verdict;
    j["samples"] = r.samples;
    j["rejected_cut_locus"] = r.rejected;
    j["max_residual"] = r.max_residual;
    j["mean_residual"] = r.mean_residual;
    j["max_bookkeeping_residual"] = r.max_bookkeeping;
    j["bookkeeping_ratio"] = r.bookkeeping_ratio;
    j["min_det"] = r.min_det;
    j["nonpositive_det"] = r.nonpositive_det;
    j["collisions"] = r.collisions;
    auto strips = nlohmann::ordered_json::array();
    for (const auto& s : r.strips) {
        nlohmann::ordered_json row;
        row["component"] = s.component;
        row["lower"] = extended_json(s.lower);
        row["upper"] = extended_json(s.upper);
        row["target"] = s.target;
        row["table"] = s.table;
        row["achieved"] = s.achieved;
        strips.push_back(row);
    }
    j["strips"] = strips;
    j["total_volume"] = extended_json(r.total_volume);
    j["achieved_volume"] = r.achieved_volume;
    j["deficit"] = r.deficit;
    j["ontoness_gap"] = r.ontoness_gap;
    j["max_chart_radius"] = r.max_chart_radius;
    if (with_timings) {
        nlohmann::ordered_json t;
        t["build_seconds"] = r.build_seconds;
        t["verify_seconds"] = r.verify_seconds;
        j["timings"] = t;
    }
    return j.dump(2) + "\n";
}

std::string grid_csv(const VerificationReport& r)
{
    std::string out = "u1,u2,component,m1,m2,det,residual\n";
    char buf[256];
    for (const auto& s : r.records) {
        if (s.rejected) continue;
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu,%.17g,%.17g,%.17g,%.17g\n", s.u.x, s.u.y, s.component, s.m.x,
                      s.m.y, s.det, s.residual);
        out += buf;
    }
    return out;
}

std::string cutlocus_csv(const ModelManifold& m, int rows)
{
    const CutTimeProfile profile = cut_time_profile(m);
    std::string out = "theta,mu\n";
    char buf[96];
    for (int k = 0; k < rows; ++k) {
        const double t = 2.0 * kPi * k / rows;
        const double mu = profile.value(t);
        if (std::isinf(mu)) std::snprintf(buf, sizeof buf, "%.17g,inf\n", t);
        else std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", t, mu);
        out += buf;
    }
    return out;
}

} // namespace vpe
