#include "vpe/errors.hpp"
#include "vpe/pipeline.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

using namespace vpe;
using std::numbers::pi;

namespace {

const ModelManifold kTorus = ModelManifold::flat_torus({1, 0}, {0, 1});

// Disk of area 0.5 * 4 pi on the unit sphere: cheap to build.
PlanarDomain sphere_disk() { return PlanarDomain({Shape::disk({0, 0}, std::sqrt(2.0))}); }

} // namespace

TEST_CASE("volume condition verdicts")
{
    using V = ConditionResult::Verdict;
    CHECK(check_condition(PlanarDomain({Shape::rectangle(0, 1, 0, 1)}), kTorus).verdict == V::equality);
    const auto bad = check_condition(PlanarDomain({Shape::disk({0, 0}, 1)}), kTorus);
    CHECK(bad.verdict == V::violation);
    CHECK(bad.excess == doctest::Approx(pi - 1));
    const auto cyl = ModelManifold::flat_cylinder(1.0);
    CHECK(check_condition(PlanarDomain({Shape::rectangle(0, 1, 0, 1)}), cyl).verdict == V::strict);
    CHECK(check_condition(PlanarDomain({Shape::plane()}), cyl).verdict == V::equality);
    CHECK(check_condition(PlanarDomain({Shape::plane()}), kTorus).verdict == V::violation);
}

TEST_CASE("violations stop before any stage is built")
{
    const std::size_t before = build_invocations();
    try {
        build_embedding(PlanarDomain({Shape::disk({0, 0}, 1)}), kTorus);
        FAIL("expected a violation");
    } catch (const StageError& e) {
        CHECK(e.stage() == "condition");
        CHECK(e.kind() == "insufficient-volume");
    }
    CHECK(build_invocations() == before + 1);
}

TEST_CASE("sphere disk: residual, determinants, strips and determinism")
{
    const auto m = ModelManifold::round_sphere(1.0);
    const EmbeddingAtlas atlas = build_embedding(sphere_disk(), m);
    CHECK(atlas.rho_kind == "simple");
    VerifyOptions o;
    o.samples = 400;
    const VerificationReport par = verify(atlas, o);
    CHECK(par.max_residual < 1e-3);
    CHECK(par.nonpositive_det == 0);
    CHECK(par.collisions == 0);
    REQUIRE(par.strips.size() == 1);
    CHECK(par.strips[0].achieved == doctest::Approx(2 * pi).epsilon(1e-6));

    o.exec = kernels::Exec::serial;
    const VerificationReport ser = verify(atlas, o);
    CHECK(report_json(par, false) == report_json(ser, false));
    CHECK(grid_csv(par) == grid_csv(ser));

    o.corrupt_transport = true;
    o.exec = kernels::Exec::parallel;
    CHECK(verify(atlas, o).max_residual > 1e-1);
}

TEST_CASE("plane into the flat cylinder (infinite case)")
{
    const auto m = ModelManifold::flat_cylinder(1.0);
    const EmbeddingAtlas atlas = build_embedding(PlanarDomain({Shape::plane()}), m);
    CHECK(atlas.case_tag == EmbeddingAtlas::Case::infinite);
    VerifyOptions o;
    o.samples = 500;
    const VerificationReport r = verify(atlas, o);
    CHECK(r.max_residual < 1e-3);
    CHECK(r.nonpositive_det == 0);
    CHECK(r.collisions == 0);
    CHECK(r.strips.empty());
}

TEST_CASE("report JSON and CSV layout")
{
    const auto m = ModelManifold::round_sphere(1.0);
    const EmbeddingAtlas atlas = build_embedding(sphere_disk(), m);
    VerifyOptions o;
    o.samples = 50;
    VerificationReport r = verify(atlas, o);
    r.scenario = "unit";
    const auto j = nlohmann::json::parse(report_json(r));
    for (const char* k : {"scenario", "manifold", "case", "verdict", "samples", "rejected_cut_locus", "max_residual",
                          "mean_residual", "max_bookkeeping_residual", "bookkeeping_ratio", "min_det",
                          "nonpositive_det", "collisions", "strips", "total_volume", "achieved_volume", "deficit",
                          "ontoness_gap", "max_chart_radius", "timings"})
        CHECK_MESSAGE(j.contains(k), k);
    CHECK(j["strips"][0]["lower"] == "-inf");
    CHECK_FALSE(nlohmann::json::parse(report_json(r, false)).contains("timings"));

    const std::string csv = grid_csv(r);
    CHECK(csv.rfind("u1,u2,component,m1,m2,det,residual\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(r.samples) + 1);
}

TEST_CASE("cut locus CSV")
{
    const std::string torus = cutlocus_csv(kTorus);
    CHECK(std::count(torus.begin(), torus.end(), '\n') == 3601);
    CHECK(torus.rfind("theta,mu\n0,0.5\n", 0) == 0);
    const std::string plane = cutlocus_csv(ModelManifold::plane_with_density({}));
    std::istringstream in(plane);
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(line.substr(line.find(',') + 1) == "inf");
    }
    CHECK(rows == 3600);
}
