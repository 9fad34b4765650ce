#include "cli.hpp"

#include "vpe/config.hpp"
#include "vpe/errors.hpp"
#include "vpe/pipeline.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

namespace vpe::cli {

namespace {

constexpr const char* kFooter = R"(Exit codes: 0 ok, 1 malformed config or usage, 2 volume condition violated,
3 pipeline stage error, 4 verification gate failed.

Files written under --out (default from the config's output block):
  report.json   verification report (see README for the schema)
  grid.csv      u1,u2,component,m1,m2,det,residual
                u = source point, component = domain shape index, m = chart
                coordinates on the target, det = Jacobian determinant of the
                composed map, residual = |det * target density - 1|
  cutlocus.csv  theta,mu   (3600 rows, mu may be "inf"))";

struct Options
{
    std::string config;
    std::optional<std::string> out;
    std::optional<std::size_t> samples;
    std::optional<std::uint64_t> seed;
    std::optional<double> gate;
    std::optional<int> grid;
};

void add_options(CLI::App* cmd, Options& o)
{
    cmd->add_option("--config", o.config, "scenario YAML file")->required();
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--samples", o.samples, "verification samples")->check(CLI::Range(std::size_t{1}, std::size_t{100000000}));
    cmd->add_option("--seed", o.seed, "sampling seed");
    cmd->add_option("--gate", o.gate, "max residual gate")->check(CLI::PositiveNumber);
    cmd->add_option("--grid", o.grid, "initial marginal table cells")->check(CLI::Range(8, 65536));
}

ScenarioConfig load(const Options& o, bool require_domain)
{
    ScenarioConfig c = load_config(o.config, require_domain);
    if (o.out) c.output.dir = *o.out;
    if (o.samples) c.tolerances.samples = *o.samples;
    if (o.seed) c.tolerances.seed = *o.seed;
    if (o.gate) c.tolerances.gate = *o.gate;
    if (o.grid) c.tolerances.grid = *o.grid;
    return c;
}

std::string format_extended(const Extended& e)
{
    if (e.is_positive_infinity()) return "inf";
    if (e.is_negative_infinity()) return "-inf";
    return format_number(e.value());
}

void write_file(const ScenarioConfig& c, const std::string& name, const std::string& body)
{
    const std::filesystem::path dir(c.output.dir);
    std::filesystem::create_directories(dir);
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw ConfigurationError("cannot write '" + (dir / name).string() + "'");
    f << body;
}

int print_condition(const ConditionResult& r, std::ostream& out)
{
    out << "|U|    = " << format_extended(r.domain_volume) << "\n";
    out << "Vol(M) = " << format_extended(r.manifold_volume) << "\n";
    const char* rel = r.ok() ? " ≤ " : " > ";
    out << format_extended(r.domain_volume) << rel << format_extended(r.manifold_volume) << " (" << r.verdict_name()
        << ")\n";
    return r.ok() ? ok : violation;
}

struct Run
{
    ScenarioConfig config;
    VerificationReport report;
};

enum class Command { volume, embed, verify, cutlocus, export_grid };

// Shared by embed / verify / export-grid: condition gate, build, verify.
std::optional<Run> build_and_verify(const ScenarioConfig& c, std::ostream& out, std::ostream& err, int& code)
{
    const ConditionResult cond = check_condition(c.domain(), *c.manifold);
    if (!cond.ok()) {
        print_condition(cond, out);
        err << "error: volume condition violated; nothing was built\n";
        code = violation;
        return std::nullopt;
    }
    std::string stage = "build";
    try {
        const auto t0 = std::chrono::steady_clock::now();
        const EmbeddingAtlas atlas = build_embedding(c.domain(), *c.manifold, c.build_config());
        const double build_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        stage = "verify";
        Run run{c, verify(atlas, c.verify_options())};
        run.report.scenario = c.name;
        run.report.build_seconds = build_seconds;
        return run;
    } catch (const StageError& e) {
        err << "stage error " << e.what() << " (" << e.kind() << ")\n";
    } catch (const Error& e) {
        err << "stage error [" << stage << "] " << e.what() << " (" << e.kind() << ")\n";
    }
    code = stage_failure;
    return std::nullopt;
}

void print_summary(const VerificationReport& r, std::ostream& out)
{
    out << "verdict        " << r.verdict << "\n";
    out << "samples        " << r.samples << " (rejected " << r.rejected << ")\n";
    out << "max_residual   " << format_number(r.max_residual) << "\n";
    out << "min_det        " << format_number(r.min_det) << " (nonpositive " << r.nonpositive_det << ")\n";
    out << "collisions     " << r.collisions << "\n";
    for (const auto& s : r.strips)
        out << "strip " << s.component << "        target " << format_number(s.target) << " achieved "
            << format_number(s.achieved) << "\n";
}

int execute(Command cmd, const Options& o, std::ostream& out, std::ostream& err)
{
    ScenarioConfig c;
    try {
        c = load(o, cmd != Command::cutlocus);
    } catch (const ConfigError& e) {
        err << o.config << ": " << e.what() << "\n";
        return malformed_config;
    }
    if (cmd == Command::volume) return print_condition(check_condition(c.domain(), *c.manifold), out);
    if (cmd == Command::cutlocus) {
        const CutTimeProfile p = cut_time_profile(*c.manifold);
        write_file(c, c.output.cutlocus, cutlocus_csv(*c.manifold));
        out << "min " << format_number(p.inf_value()) << "\nmax " << format_number(p.sup_value()) << "\n";
        return ok;
    }

    int code = ok;
    const auto run = build_and_verify(c, out, err, code);
    if (!run) return code;
    const VerificationReport& r = run->report;
    if (cmd == Command::export_grid) {
        write_file(c, c.output.grid, grid_csv(r));
        return ok;
    }
    write_file(c, c.output.report, report_json(r));
    if (cmd == Command::embed) write_file(c, c.output.grid, grid_csv(r));
    print_summary(r, out);

    std::vector<std::string> failed;
    if (!(r.max_residual < c.tolerances.gate)) failed.push_back("max_residual >= gate " + format_number(c.tolerances.gate));
    if (cmd == Command::verify) {
        if (r.collisions != 0) failed.push_back("collisions");
        if (r.nonpositive_det != 0) failed.push_back("nonpositive det");
        for (const auto& s : r.strips)
            if (std::abs(s.achieved - s.target) > 1e-6) failed.push_back("strip " + std::to_string(s.component) + " volume");
    }
    for (const auto& f : failed) err << "gate failed: " << f << "\n";
    return failed.empty() ? ok : gate_failure;
}

} // namespace

std::string format_number(double v)
{
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Volume-preserving embeddings of planar domains into model surfaces", "vpe"};
    app.footer(kFooter);
    app.require_subcommand(1);
    Options o;
    const std::pair<const char*, const char*> commands[] = {
        {"volume", "compare |U| with Vol(M) and report the verdict"},
        {"embed", "build the embedding, write report.json and grid.csv; exit 0 iff max residual < gate"},
        {"verify", "embed and additionally gate on collisions, determinants and strip volumes"},
        {"cutlocus", "write the cut-time profile mu(theta) to cutlocus.csv"},
        {"export-grid", "build the embedding and write only grid.csv"},
    };
    for (const auto& [name, help] : commands) add_options(app.add_subcommand(name, help), o);
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : malformed_config;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    const Command cmd = name == "volume"     ? Command::volume
                        : name == "embed"    ? Command::embed
                        : name == "verify"   ? Command::verify
                        : name == "cutlocus" ? Command::cutlocus
                                             : Command::export_grid;
    try {
        return execute(cmd, o, out, err);
    } catch (const Error& e) {
        err << "error: " << e.kind() << ": " << e.what() << "\n";
        return stage_failure;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return stage_failure;
    }
}

} // namespace vpe::cli
