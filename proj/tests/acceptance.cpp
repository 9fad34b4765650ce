// End-to-end acceptance checks; one PASS/FAIL line per criterion.
#include "cli.hpp"

#include "vpe/config.hpp"
#include "vpe/errors.hpp"
#include "vpe/pipeline.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace vpe;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

const fs::path kScenarios = VPE_SCENARIO_DIR;

struct Outcome
{
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

int failures = 0;

void criterion(int id, const std::string& name, double budget, const std::function<Outcome()>& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs >= budget) o.require(false, "runtime " + fmt(secs) + " s over budget " + fmt(budget) + " s");
    if (!o.pass) ++failures;
    std::printf("[%s] %d %s (%.2f s)%s%s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), secs,
                o.detail.empty() ? "" : ": ", o.detail.c_str());
    std::fflush(stdout);
}

struct Scenario
{
    ScenarioConfig config;
    EmbeddingAtlas atlas;
    VerificationReport report;
};

Scenario run_scenario(const std::string& file)
{
    ScenarioConfig c = load_config((kScenarios / file).string());
    EmbeddingAtlas atlas = build_embedding(c.domain(), *c.manifold, c.build_config());
    VerificationReport r = verify(atlas, c.verify_options());
    return {std::move(c), std::move(atlas), std::move(r)};
}

void common_checks(Outcome& o, const VerificationReport& r, std::size_t samples)
{
    o.require(r.samples == samples, "samples " + std::to_string(r.samples));
    o.require(r.max_residual < 1e-3, "max residual " + fmt(r.max_residual));
    o.require(r.nonpositive_det == 0, std::to_string(r.nonpositive_det) + " nonpositive det");
    o.require(r.collisions == 0, std::to_string(r.collisions) + " collisions");
}

std::string report_without_timings(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string s = ss.str();
    const auto at = s.find("\"timings\"");
    return at == std::string::npos ? s : s.substr(0, at);
}

} // namespace

int main()
{
    criterion(1, "necessity gate: 20 violating scenarios exit 2 without building", 1.0, [] {
        Outcome o;
        const fs::path dir = fs::temp_directory_path() / "vpe_acceptance_violations";
        fs::create_directories(dir);
        std::vector<std::string> yaml;
        // Unit torus against disks exceeding area 1 by 1e-6 .. 1.
        for (double excess : {1e-6, 1e-4, 1e-2, 0.5, 1.0}) {
            const double r = std::sqrt((1.0 + excess) / pi);
            char buf[256];
            std::snprintf(buf, sizeof buf, "domain: [disk: {radius: %.17g}]\nmanifold: {kind: flat_torus}\n", r);
            yaml.emplace_back(buf);
        }
        // Unit sphere against a rectangle exceeding 4 pi by 1e-6 .. 1.
        for (double excess : {1e-6, 1e-3, 1.0}) {
            char buf[256];
            std::snprintf(buf, sizeof buf,
                          "domain: [rectangle: {x: [0, %.17g], y: [0, 1]}]\nmanifold: {kind: round_sphere}\n",
                          4 * pi + excess);
            yaml.emplace_back(buf);
        }
        // Two components splitting the excess; skewed and scaled lattices.
        yaml.emplace_back("domain:\n  - rectangle: {x: [0, 0.6], y: [0, 1]}\n  - rectangle: {x: [2, 2.400001], y: [0, 1]}\n"
                          "manifold: {kind: flat_torus}\n");
        yaml.emplace_back("domain: [rectangle: {x: [0, 2.000001], y: [0, 1]}]\n"
                          "manifold: {kind: flat_torus, w1: [2, 0], w2: [0.7, 1]}\n");
        yaml.emplace_back("domain: [annulus: {r_in: 0.1, r_out: 0.6}]\nmanifold: {kind: flat_torus}\n");
        yaml.emplace_back("domain: [disk: {radius: 3}]\nmanifold: {kind: round_sphere, radius: 1.4}\n");
        // Gaussian plane of mass 2 pi sigma^2.
        yaml.emplace_back("domain: [rectangle: {x: [0, 7], y: [0, 1]}]\n"
                          "manifold: {kind: plane, density: {kind: gaussian, amplitude: 1, sigma: 1}}\n");
        yaml.emplace_back("domain: [rectangle: {x: [0, 1], y: [0, 1.0000001]}]\n"
                          "manifold: {kind: plane, density: {kind: gaussian, amplitude: 0.5, sigma: 0.3989422804014327}}\n");
        // Infinite area against finite volume.
        for (const char* m : {"{kind: flat_torus}", "{kind: round_sphere}", "{kind: flat_torus, w1: [5, 0], w2: [0, 5]}",
                              "{kind: round_sphere, radius: 10}",
                              "{kind: plane, density: {kind: gaussian, amplitude: 3, sigma: 2}}"})
            yaml.emplace_back(std::string("domain: [plane: {}]\nmanifold: ") + m + "\n");
        yaml.emplace_back("domain:\n  - disk: {center: [0, 0], radius: 0.4}\n  - disk: {center: [1, 0], radius: 0.4}\n"
                          "  - disk: {center: [2, 0], radius: 0.4}\nmanifold: {kind: flat_torus}\n");
        o.require(yaml.size() == 20, "scenario count " + std::to_string(yaml.size()));

        const std::size_t builds = build_invocations();
        for (std::size_t i = 0; i < yaml.size(); ++i) {
            const fs::path p = dir / ("v" + std::to_string(i) + ".yaml");
            std::ofstream(p) << yaml[i];
            std::ostringstream out, err;
            const int code = cli::run({"volume", "--config", p.string()}, out, err);
            o.require(code == 2, "scenario " + std::to_string(i) + " exit " + std::to_string(code) + " " + err.str());
            o.require(out.str().find("(violation)") != std::string::npos, "scenario " + std::to_string(i) + " verdict");
        }
        o.require(build_invocations() == builds, "build_embedding was invoked");
        return o;
    });

    criterion(2, "torus equality: residual, deficit, injectivity, det > 0 on 1e4 samples", 60.0, [] {
        Outcome o;
        const Scenario s = run_scenario("torus-equality.yaml");
        const auto& r = s.report;
        common_checks(o, r, 10000);
        o.require(r.verdict == "equality", "verdict " + r.verdict);
        o.require(r.deficit < 1e-2, "deficit " + fmt(r.deficit));
        o.detail = o.pass ? "max residual " + fmt(r.max_residual) + ", deficit " + fmt(r.deficit) : o.detail;
        return o;
    });

    criterion(3, "sphere strict: residual, strip volume 0.99*4pi within 1e-6, cut-locus margin", 60.0, [] {
        Outcome o;
        const Scenario s = run_scenario("sphere-disk.yaml");
        const auto& r = s.report;
        common_checks(o, r, 10000);
        const double target = 0.99 * 4 * pi;
        o.require(r.strips.size() == 1, "strip count");
        if (r.strips.size() == 1)
            o.require(std::abs(r.strips[0].achieved - target) <= 1e-6,
                      "strip volume off by " + fmt(r.strips[0].achieved - target));
        const double margin = pi - s.config.verify_options().cut_locus_margin;
        o.require(r.rejected == 0, std::to_string(r.rejected) + " samples inside the cut-locus margin");
        o.require(r.max_chart_radius < margin, "chart radius " + fmt(r.max_chart_radius));
        o.detail = o.pass ? "max residual " + fmt(r.max_residual) + ", max |x| " + fmt(r.max_chart_radius) : o.detail;
        return o;
    });

    criterion(4, "multi-component: strip volumes within 1e-6 by independent recheck, residual, injectivity", 90.0, [] {
        Outcome o;
        const Scenario s = run_scenario("multi-component.yaml");
        const auto& r = s.report;
        common_checks(o, r, 10000);
        const double areas[] = {0.3, 0.5};
        o.require(r.strips.size() == 2, "strip count");
        double worst = 0.0;
        for (std::size_t i = 0; i < r.strips.size() && i < 2; ++i) {
            worst = std::max(worst, std::abs(r.strips[i].achieved - areas[i]));
            o.require(std::abs(r.strips[i].target - areas[i]) < 1e-12, "component area");
        }
        o.require(worst <= 1e-6, "strip volume error " + fmt(worst));
        o.detail = o.pass ? "strip error " + fmt(worst) + ", max residual " + fmt(r.max_residual) : o.detail;
        return o;
    });

    criterion(5, "Case 2 cylinder: anchored transport, residual on 1e4 samples in [-3,3]^2", 60.0, [] {
        Outcome o;
        const Scenario s = run_scenario("cylinder-case2.yaml");
        const auto& r = s.report;
        o.require(s.atlas.case_tag == EmbeddingAtlas::Case::infinite, "not the infinite case");
        o.require(s.atlas.components.size() == 1 && s.atlas.components[0].psi &&
                      s.atlas.components[0].psi->mode == TriangularMap::Mode::anchored_lines,
                  "transport is not line-anchored");
        common_checks(o, r, 10000);
        double window = 0.0;
        for (const auto& rec : r.records) window = std::max({window, std::abs(rec.u.x), std::abs(rec.u.y)});
        o.require(window <= 3.0, "sample outside the window");
        o.detail = o.pass ? "max residual " + fmt(r.max_residual) : o.detail;
        return o;
    });

    criterion(6, "transport oracle: sqrt(x), separable cross-check, negative control", 10.0, [] {
        Outcome o;
        auto square = [](DensityField::Fn f) { return DensityField(std::move(f), Axis::interval(0, 1), Axis::interval(0, 1)); };
        const auto f = square([](const Vec2&) { return 1.0; });
        const auto g = square([](const Vec2& y) { return 2.0 * y.x; });
        const TriangularMap t = knothe_map(f, g);
        double e1 = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const double x = (i + 0.5) / 1000.0;
            e1 = std::max(e1, std::abs(t.t1(x) - std::sqrt(x)));
        }
        o.require(e1 < 1e-8, "sqrt error " + fmt(e1));
        // Separable target: the 2D map is the product of the 1D maps sqrt and cbrt.
        const auto h = square([](const Vec2& y) { return 2.0 * y.x * 3.0 * y.y * y.y; });
        const TriangularMap s = knothe_map(f, h);
        double e2 = 0.0;
        for (int i = 0; i < 32; ++i)
            for (int j = 0; j < 32; ++j) {
                const Vec2 x{(i + 0.5) / 32, (j + 0.5) / 32};
                const Vec2 y = s(x);
                e2 = std::max({e2, std::abs(y.x - std::sqrt(x.x)), std::abs(y.y - std::cbrt(x.y))});
            }
        o.require(e2 < 1e-8, "separable error " + fmt(e2));
        // Identity transport: |g(x) det I - f(x)| / f(x) = |2 x1 - 1|.
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const Vec2 x{(i + 0.5) / 1000.0, 0.5};
            worst = std::max(worst, std::abs(g(x) - f(x)) / f(x));
        }
        o.require(worst > 1e-1, "negative control residual " + fmt(worst));
        o.detail = o.pass ? "sqrt " + fmt(e1) + ", separable " + fmt(e2) + ", control " + fmt(worst) : o.detail;
        return o;
    });

    criterion(7, "exhaustion ledger: demo chain deficits within 2^-k + 3 half-widths, agreement 1e-12", 30.0, [] {
        Outcome o;
        ExhaustionOptions opt;
        opt.stages = 10;
        opt.agreement_tol = 1e-12;
        const ExhaustionChain c = exhaustion_glue(demo_disk_chain(), opt);
        o.require(c.ledger.size() == 10, "ledger length");
        for (const auto& e : c.ledger) {
            o.require(e.deficit <= std::ldexp(1.0, -e.k) + 3 * e.half_width, "stage " + std::to_string(e.k) + " deficit");
            o.require(e.max_disagreement <= 1e-12, "stage " + std::to_string(e.k) + " disagreement");
        }
        return o;
    });

    criterion(8, "straightening: 1e5 samples in the Voronoi cell, rays to 1e-12, ontoness at 1e3", 30.0, [] {
        Outcome o;
        const auto m = ModelManifold::flat_torus({1, 0}, {0, 1});
        const auto profile = cut_time_profile(m);
        const SmoothMap rho = straighten(profile, build_minorants(profile, LadderOptions{}.stages));
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> angle(0.0, 2 * pi), logr(-4.0, 6.0);
        std::size_t outside = 0;
        double ray = 0.0;
        for (int i = 0; i < 100000; ++i) {
            const Vec2 x = unit_direction(angle(rng)) * std::pow(10.0, logr(rng));
            const Vec2 y = rho(x);
            if (!(std::abs(y.x) < 0.5 && std::abs(y.y) < 0.5)) ++outside;
            const double c = std::abs(x.x * y.y - x.y * y.x) / (x.norm() * y.norm());
            ray = std::max(ray, x.dot(y) > 0 ? c : 1.0);
        }
        o.require(outside == 0, std::to_string(outside) + " samples outside the cell");
        o.require(ray <= 1e-12, "ray deviation " + fmt(ray));
        double gap = 0.0;
        for (int k = 0; k < 360; ++k) {
            const double t = 2 * pi * k / 360;
            gap = std::max(gap, profile.value(t) - rho(unit_direction(t) * 1e3).norm());
        }
        o.require(gap < 1e-3, "ontoness gap " + fmt(gap));
        o.detail = o.pass ? "ray " + fmt(ray) + ", ontoness gap " + fmt(gap) : o.detail;
        return o;
    });

    criterion(9, "determinism: repeated embed runs give byte-identical reports", 120.0, [] {
        Outcome o;
        const fs::path a = fs::temp_directory_path() / "vpe_acceptance_det_a";
        const fs::path b = fs::temp_directory_path() / "vpe_acceptance_det_b";
        const std::string cfg = (kScenarios / "sphere-disk.yaml").string();
        std::ostringstream out, err;
        const int threads = omp_get_max_threads();
        omp_set_num_threads(1);
        const int c1 = cli::run({"embed", "--config", cfg, "--out", a.string(), "--seed", "7"}, out, err);
        omp_set_num_threads(std::max(3, threads));
        const int c2 = cli::run({"embed", "--config", cfg, "--out", b.string(), "--seed", "7"}, out, err);
        omp_set_num_threads(threads);
        o.require(c1 == 0 && c2 == 0, "embed exit codes " + std::to_string(c1) + "/" + std::to_string(c2));
        const std::string ra = report_without_timings(a / "report.json"), rb = report_without_timings(b / "report.json");
        o.require(!ra.empty() && ra == rb, "reports differ");
        std::ifstream ga(a / "grid.csv"), gb(b / "grid.csv");
        std::stringstream sa, sb;
        sa << ga.rdbuf();
        sb << gb.rdbuf();
        o.require(sa.str() == sb.str(), "grids differ");
        o.detail = o.pass ? "1 vs " + std::to_string(std::max(3, threads)) + " threads" : o.detail;
        return o;
    });

    std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "PASSED", failures);
    return failures ? 1 : 0;
}
