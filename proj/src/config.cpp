#include "vpe/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace vpe {

namespace {

std::string format_config_error(int line, int column, const std::string& field, const std::string& reason)
{
    std::ostringstream os;
    if (line > 0) os << "line " << line << ", column " << column << ": ";
    os << field << ": " << reason;
    return os.str();
}

[[noreturn]] void fail(const YAML::Node& n, const std::string& field, const std::string& reason)
{
    const YAML::Mark m = n.Mark();
    throw ConfigError(m.line + 1, m.column + 1, field, reason);
}

void require_map(const YAML::Node& n, const std::string& field)
{
    if (!n.IsMap()) fail(n, field, "expected a mapping");
}

void check_keys(const YAML::Node& n, const std::string& field, const std::set<std::string>& allowed)
{
    require_map(n, field);
    for (const auto& kv : n) {
        const std::string key = kv.first.as<std::string>();
        if (!allowed.contains(key)) fail(kv.first, field.empty() ? key : field + "." + key, "unknown key");
    }
}

double number(const YAML::Node& n, const std::string& field)
{
    if (!n.IsScalar()) fail(n, field, "expected a number");
    const std::string s = n.Scalar();
    const double inf = std::numeric_limits<double>::infinity();
    if (s == "inf" || s == "+inf" || s == ".inf" || s == "+.inf") return inf;
    if (s == "-inf" || s == "-.inf") return -inf;
    double v = 0.0;
    const char* first = s.data() + (s.starts_with('+') ? 1 : 0);
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        fail(n, field, "'" + s + "' is not a decimal number or inf");
    return v;
}

double finite_positive(const YAML::Node& n, const std::string& field)
{
    const double v = number(n, field);
    if (!(v > 0.0) || !std::isfinite(v)) fail(n, field, "must be finite and > 0");
    return v;
}

std::uint64_t integer(const YAML::Node& n, const std::string& field, std::uint64_t lo, std::uint64_t hi)
{
    if (!n.IsScalar()) fail(n, field, "expected an integer");
    const std::string s = n.Scalar();
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail(n, field, "'" + s + "' is not a non-negative integer");
    if (v < lo || v > hi) fail(n, field, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
}

Vec2 pair(const YAML::Node& n, const std::string& field)
{
    if (!n.IsSequence() || n.size() != 2) fail(n, field, "expected a two-element list");
    return {number(n[0], field + "[0]"), number(n[1], field + "[1]")};
}

Vec2 finite_pair(const YAML::Node& n, const std::string& field)
{
    const Vec2 v = pair(n, field);
    if (!v.finite()) fail(n, field, "entries must be finite");
    return v;
}

std::string text(const YAML::Node& n, const std::string& field)
{
    if (!n.IsScalar()) fail(n, field, "expected a string");
    return n.Scalar();
}

template <class F>
auto guarded(const YAML::Node& n, const std::string& field, F&& make)
{
    try {
        return make();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        fail(n, field, e.what());
    }
}

Shape parse_shape(const YAML::Node& n, const std::string& field)
{
    if (!n.IsMap() || n.size() != 1) fail(n, field, "expected a single-key mapping: rectangle, disk, annulus or plane");
    const auto kv = *n.begin();
    const std::string kind = kv.first.as<std::string>();
    const YAML::Node body = kv.second;
    const std::string f = field + "." + kind;
    if (kind == "rectangle") {
        check_keys(body, f, {"x", "y"});
        if (!body["x"] || !body["y"]) fail(body, f, "requires x and y intervals");
        const Vec2 x = finite_pair(body["x"], f + ".x"), y = finite_pair(body["y"], f + ".y");
        if (!(x.x < x.y)) fail(body["x"], f + ".x", "needs lo < hi");
        if (!(y.x < y.y)) fail(body["y"], f + ".y", "needs lo < hi");
        return guarded(body, f, [&] { return Shape::rectangle(x.x, x.y, y.x, y.y); });
    }
    if (kind == "disk") {
        check_keys(body, f, {"center", "radius"});
        if (!body["radius"]) fail(body, f, "requires radius");
        const Vec2 c = body["center"] ? finite_pair(body["center"], f + ".center") : Vec2{};
        const double r = finite_positive(body["radius"], f + ".radius");
        return guarded(body, f, [&] { return Shape::disk(c, r); });
    }
    if (kind == "annulus") {
        check_keys(body, f, {"center", "r_in", "r_out"});
        if (!body["r_in"] || !body["r_out"]) fail(body, f, "requires r_in and r_out");
        const Vec2 c = body["center"] ? finite_pair(body["center"], f + ".center") : Vec2{};
        const double ri = finite_positive(body["r_in"], f + ".r_in");
        const double ro = finite_positive(body["r_out"], f + ".r_out");
        if (!(ri < ro)) fail(body, f, "needs r_in < r_out");
        return guarded(body, f, [&] { return Shape::annulus(c, ri, ro); });
    }
    if (kind == "plane") {
        if (body && !body.IsNull()) check_keys(body, f, {});
        return Shape::plane();
    }
    fail(kv.first, field, "unknown shape '" + kind + "'");
}

ModelManifold parse_manifold(const YAML::Node& n)
{
    require_map(n, "manifold");
    if (!n["kind"]) fail(n, "manifold", "requires kind");
    const std::string kind = text(n["kind"], "manifold.kind");
    if (kind == "flat_torus") {
        check_keys(n, "manifold", {"kind", "w1", "w2", "base"});
        const Vec2 w1 = n["w1"] ? finite_pair(n["w1"], "manifold.w1") : Vec2{1, 0};
        const Vec2 w2 = n["w2"] ? finite_pair(n["w2"], "manifold.w2") : Vec2{0, 1};
        const Vec2 base = n["base"] ? finite_pair(n["base"], "manifold.base") : Vec2{};
        if (std::abs(w1.x * w2.y - w1.y * w2.x) < 1e-12) fail(n, "manifold", "lattice basis is degenerate");
        return guarded(n, "manifold", [&] { return ModelManifold::flat_torus(w1, w2, base); });
    }
    if (kind == "round_sphere") {
        check_keys(n, "manifold", {"kind", "radius", "base"});
        const double r = n["radius"] ? finite_positive(n["radius"], "manifold.radius") : 1.0;
        const Vec2 base = n["base"] ? finite_pair(n["base"], "manifold.base") : Vec2{0.0, std::numbers::pi / 2};
        return guarded(n, "manifold", [&] { return ModelManifold::round_sphere(r, base); });
    }
    if (kind == "flat_cylinder") {
        check_keys(n, "manifold", {"kind", "circumference", "base"});
        const double c = n["circumference"] ? finite_positive(n["circumference"], "manifold.circumference") : 1.0;
        const Vec2 base = n["base"] ? finite_pair(n["base"], "manifold.base") : Vec2{};
        return guarded(n, "manifold", [&] { return ModelManifold::flat_cylinder(c, base); });
    }
    if (kind == "plane") {
        check_keys(n, "manifold", {"kind", "density", "base"});
        PlaneDensity d;
        if (n["density"]) {
            const YAML::Node dn = n["density"];
            check_keys(dn, "manifold.density", {"kind", "amplitude", "sigma"});
            const std::string dk = dn["kind"] ? text(dn["kind"], "manifold.density.kind") : "constant";
            if (dk == "constant") d.kind = PlaneDensity::Kind::constant;
            else if (dk == "gaussian") d.kind = PlaneDensity::Kind::gaussian;
            else fail(dn["kind"], "manifold.density.kind", "expected constant or gaussian");
            if (dn["amplitude"]) d.amplitude = finite_positive(dn["amplitude"], "manifold.density.amplitude");
            if (dn["sigma"]) d.sigma = finite_positive(dn["sigma"], "manifold.density.sigma");
        }
        const Vec2 base = n["base"] ? finite_pair(n["base"], "manifold.base") : Vec2{};
        return guarded(n, "manifold", [&] { return ModelManifold::plane_with_density(d, base); });
    }
    fail(n["kind"], "manifold.kind", "unknown manifold '" + kind + "'; expected flat_torus, round_sphere, "
                                                             "flat_cylinder or plane");
}

} // namespace

ConfigError::ConfigError(int line, int column, const std::string& field, const std::string& reason)
: Error("configuration", format_config_error(line, column, field, reason)), line_(line), column_(column), field_(field)
{
}

BuildConfig ScenarioConfig::build_config() const
{
    BuildConfig b;
    b.grid.grid = tolerances.grid;
    b.probe_radius = tolerances.probe_radius;
    return b;
}

VerifyOptions ScenarioConfig::verify_options() const
{
    VerifyOptions v;
    v.samples = tolerances.samples;
    v.seed = tolerances.seed;
    return v;
}

ScenarioConfig parse_config(const std::string& source, bool require_domain)
{
    YAML::Node root;
    try {
        root = YAML::Load(source);
    } catch (const YAML::Exception& e) {
        throw ConfigError(e.mark.line + 1, e.mark.column + 1, "yaml", e.msg);
    }
    if (!root.IsMap()) throw ConfigError(1, 1, "document", "expected a mapping at top level");
    check_keys(root, "", {"name", "domain", "manifold", "tolerances", "output"});

    ScenarioConfig c;
    if (root["name"]) c.name = text(root["name"], "name");

    if (root["domain"]) {
        const YAML::Node d = root["domain"];
        if (!d.IsSequence() || d.size() == 0) fail(d, "domain", "expected a non-empty list of shapes");
        for (std::size_t i = 0; i < d.size(); ++i) c.shapes.push_back(parse_shape(d[i], "domain[" + std::to_string(i) + "]"));
        guarded(d, "domain", [&] { return PlanarDomain(c.shapes); });
    } else if (require_domain) {
        throw ConfigError(1, 1, "domain", "missing required block");
    }

    if (!root["manifold"]) throw ConfigError(1, 1, "manifold", "missing required block");
    c.manifold = parse_manifold(root["manifold"]);

    if (root["tolerances"]) {
        const YAML::Node t = root["tolerances"];
        check_keys(t, "tolerances", {"gate", "grid", "probe_radius", "samples", "seed"});
        if (t["gate"]) {
            c.tolerances.gate = number(t["gate"], "tolerances.gate");
            if (!(c.tolerances.gate > 0.0)) fail(t["gate"], "tolerances.gate", "must be > 0 (inf disables the gate)");
        }
        if (t["grid"]) c.tolerances.grid = static_cast<int>(integer(t["grid"], "tolerances.grid", 8, 65536));
        if (t["probe_radius"]) c.tolerances.probe_radius = finite_positive(t["probe_radius"], "tolerances.probe_radius");
        if (t["samples"]) c.tolerances.samples = integer(t["samples"], "tolerances.samples", 1, 100000000);
        if (t["seed"]) c.tolerances.seed = integer(t["seed"], "tolerances.seed", 0, std::numeric_limits<std::uint64_t>::max());
    }

    if (root["output"]) {
        const YAML::Node o = root["output"];
        check_keys(o, "output", {"dir", "report", "grid", "cutlocus"});
        if (o["dir"]) c.output.dir = text(o["dir"], "output.dir");
        if (o["report"]) c.output.report = text(o["report"], "output.report");
        if (o["grid"]) c.output.grid = text(o["grid"], "output.grid");
        if (o["cutlocus"]) c.output.cutlocus = text(o["cutlocus"], "output.cutlocus");
    }
    return c;
}

ScenarioConfig load_config(const std::string& path, bool require_domain)
{
    std::ifstream in(path);
    if (!in) throw ConfigError(0, 0, "config", "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), require_domain);
}

} // namespace vpe
