#include "cli.hpp"

#include "vpe/pipeline.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result
{
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = vpe::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / "vpe_cli_test" / name;
    fs::create_directories(p.parent_path());
    return p;
}

std::string write(const std::string& name, const std::string& text)
{
    const fs::path p = scratch(name);
    std::ofstream(p) << text;
    return p.string();
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("number formatting")
{
    using vpe::cli::format_number;
    CHECK(format_number(1.0) == "1.0");
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1e300) == "1e+300");
    CHECK(format_number(INFINITY) == "inf");
}

TEST_CASE("volume command: verdict lines and exit codes")
{
    const auto square = write("square.yaml", "domain: [rectangle: {x: [0, 1], y: [0, 1]}]\nmanifold: {kind: flat_torus}\n");
    auto r = run({"volume", "--config", square});
    CHECK(r.code == 0);
    CHECK(r.out.find("1.0 ≤ 1.0 (equality)") != std::string::npos);

    const auto disk = write("disk.yaml", "domain: [disk: {radius: 1}]\nmanifold: {kind: flat_torus}\n");
    r = run({"volume", "--config", disk});
    CHECK(r.code == 2);
    CHECK(r.out.find("(violation)") != std::string::npos);

    const auto cyl = write("cyl.yaml", "domain: [rectangle: {x: [0, 1], y: [0, 1]}]\nmanifold: {kind: flat_cylinder}\n");
    r = run({"volume", "--config", cyl});
    CHECK(r.code == 0);
    CHECK(r.out.find("1.0 ≤ inf (strict)") != std::string::npos);

    const auto bad = write("bad.yaml", "domain: [disk: {radius: 1}]\nmanifold: {kind: flat_torus, w3: [1, 0]}\n");
    r = run({"volume", "--config", bad});
    CHECK(r.code == 1);
    CHECK(r.err.find("line 2") != std::string::npos);
    CHECK(r.err.find("manifold.w3") != std::string::npos);

    CHECK(run({"volume"}).code == 1);
    CHECK(run({"nonsense"}).code == 1);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("embed gates violations before building")
{
    const auto disk = write("disk2.yaml", "domain: [disk: {radius: 1}]\nmanifold: {kind: flat_torus}\n");
    const std::size_t before = vpe::build_invocations();
    const auto r = run({"embed", "--config", disk, "--out", scratch("never").string()});
    CHECK(r.code == 2);
    CHECK(vpe::build_invocations() == before);
    CHECK_FALSE(fs::exists(scratch("never")));
}

TEST_CASE("embed writes a report and grid; the gate sets the exit code")
{
    const auto cfg = write("sphere.yaml", "name: s\ndomain: [disk: {radius: 1.4142135623730951}]\n"
                                          "manifold: {kind: round_sphere}\n");
    const fs::path out = scratch("sphere-out");
    fs::remove_all(out);
    auto r = run({"embed", "--config", cfg, "--out", out.string(), "--samples", "100", "--grid", "128"});
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(out / "report.json"));
    CHECK(j["scenario"] == "s");
    CHECK(j["samples"] == 100);
    CHECK(j["timings"]["build_seconds"].get<double>() > 0.0);
    const std::string grid = slurp(out / "grid.csv");
    CHECK(grid.rfind("u1,u2,component,m1,m2,det,residual\n", 0) == 0);

    r = run({"embed", "--config", cfg, "--out", out.string(), "--samples", "100", "--grid", "128", "--gate", "1e-12"});
    CHECK(r.code == 4);
    r = run({"verify", "--config", cfg, "--out", out.string(), "--samples", "100", "--grid", "128"});
    CHECK(r.code == 0);
}

TEST_CASE("stage failures exit 3 with the stage tag")
{
    const auto cfg = write("probe.yaml", "domain: [rectangle: {x: [0, 1], y: [0, 1]}]\nmanifold: {kind: flat_torus}\n"
                                         "tolerances: {probe_radius: 1}\n");
    const auto r = run({"embed", "--config", cfg, "--out", scratch("probe-out").string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("[straighten]") != std::string::npos);
}

TEST_CASE("cutlocus and export-grid")
{
    const auto cfg = write("sphere2.yaml", "manifold: {kind: round_sphere, radius: 2}\n");
    const fs::path out = scratch("cl");
    auto r = run({"cutlocus", "--config", cfg, "--out", out.string()});
    CHECK(r.code == 0);
    const std::string csv = slurp(out / "cutlocus.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3601);
    CHECK(r.out.find("min 6.283185307179586") != std::string::npos);

    const auto plane = write("plane.yaml", "domain: [plane: {}]\nmanifold: {kind: flat_cylinder}\n");
    const fs::path g = scratch("grid");
    fs::remove_all(g);
    r = run({"export-grid", "--config", plane, "--out", g.string(), "--samples", "200"});
    CHECK(r.code == 0);
    CHECK(fs::exists(g / "grid.csv"));
    CHECK_FALSE(fs::exists(g / "report.json"));
}
