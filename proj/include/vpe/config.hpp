#pragma once

#include "vpe/errors.hpp"
#include "vpe/manifold.hpp"
#include "vpe/pipeline.hpp"
#include "vpe/shapes.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vpe {

/// Malformed scenario file; the message carries "line:col: field: reason".
class ConfigError : public Error
{
public:
    ConfigError(int line, int column, const std::string& field, const std::string& reason);
    int line() const { return line_; }
    int column() const { return column_; }
    const std::string& field() const { return field_; }

private:
    int line_, column_;
    std::string field_;
};

struct Tolerances
{
    double gate = 1e-3;           ///< max residual accepted by embed/verify
    int grid = 256;               ///< initial marginal table cells
    double probe_radius = 1e3;    ///< ontoness probe radius
    std::size_t samples = 10000;  ///< verification samples
    std::uint64_t seed = 0;
};

struct OutputPaths
{
    std::string dir = "out";
    std::string report = "report.json";
    std::string grid = "grid.csv";
    std::string cutlocus = "cutlocus.csv";
};

struct ScenarioConfig
{
    std::string name;
    std::vector<Shape> shapes;           ///< may be empty for manifold-only configs
    std::optional<ModelManifold> manifold;
    Tolerances tolerances;
    OutputPaths output;

    PlanarDomain domain() const { return PlanarDomain(shapes); }
    BuildConfig build_config() const;
    VerifyOptions verify_options() const;
};

/// Parses a YAML scenario. Unknown keys, wrong types and values outside module
/// preconditions raise ConfigError. Numbers accept "inf" / "-inf".
/// `require_domain` = false allows configs with only a manifold block.
ScenarioConfig parse_config(const std::string& text, bool require_domain = true);
ScenarioConfig load_config(const std::string& path, bool require_domain = true);

} // namespace vpe
