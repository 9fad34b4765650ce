#pragma once

#include "vpe/kernels.hpp"
#include "vpe/manifold.hpp"
#include "vpe/shapes.hpp"
#include "vpe/straighten.hpp"
#include "vpe/strips.hpp"
#include "vpe/transport.hpp"

#include <optional>
#include <string>
#include <vector>

namespace vpe {

struct ConditionResult
{
    enum class Verdict { equality, strict, violation };
    Verdict verdict = Verdict::strict;
    Extended domain_volume;
    Extended manifold_volume;
    double excess = 0.0;  ///< |U| - Vol(M) when violated (inf if |U| = inf)

    bool ok() const { return verdict != Verdict::violation; }
    std::string verdict_name() const;
};

/// Vol(U) <= Vol(M) with exact infinity semantics; equality within 1e-9.
ConditionResult check_condition(const PlanarDomain& u, const ModelManifold& m, double equality_tol = 1e-9);

struct BuildConfig
{
    DensityOptions grid{};
    LadderOptions ladder{};
    double probe_radius = 1e3;        ///< ontoness probe radius (equality case)
    double ontoness_margin = 1e-3;    ///< required max gap mu - |rho(probe)|
    int probe_directions = 360;
    double density_scale = 4.0;       ///< compactification scale of pullback densities
};

struct ComponentEmbedding
{
    Shape shape;
    std::size_t strip = 0;
    SmoothMap sigma;                    ///< U_i -> R^2
    SmoothMap tau;                      ///< R^2 -> S_i
    std::optional<TriangularMap> psi;   ///< transport on the sigma-image plane
    SmoothMap pre_chart;                ///< rho o tau o psi o sigma (tangent plane)
    SmoothMap phi;                      ///< exp_chart o pre_chart
    std::optional<DensityField> source; ///< q_i = det D(sigma^{-1})
    std::optional<DensityField> target; ///< g_i = omega(tau) tau'
    double volume = 0.0;                ///< |U_i|
    double target_volume = 0.0;         ///< Vol(S_i, omega) from the marginal table
};

struct EmbeddingAtlas
{
    enum class Case { finite, infinite };

    explicit EmbeddingAtlas(ModelManifold m) : manifold(std::move(m)) {}

    ModelManifold manifold;
    Case case_tag = Case::finite;
    ConditionResult condition;
    std::optional<CutTimeProfile> profile;  ///< possibly capped
    std::string rho_kind;                   ///< identity | simple | ladder
    SmoothMap rho;
    std::optional<DensityField> omega;
    StripPartition strips;
    std::vector<ComponentEmbedding> components;
    BuildConfig config;
    double profile_cap = 0.0;   ///< 0 when uncapped
    double ontoness_gap = 0.0;  ///< max over probe directions of mu - |rho(probe)|
};

EmbeddingAtlas build_embedding(const PlanarDomain& u, const ModelManifold& m, BuildConfig cfg = {});
/// Number of build_embedding calls so far in this process.
std::size_t build_invocations();

struct VerifyOptions
{
    std::size_t samples = 10000;
    std::uint64_t seed = 0;
    double margin = 1e-3;
    double collision_threshold = 1e-9;
    double window = 3.0;  ///< sampling window [-w, w]^2 for the plane component
    double cut_locus_margin = 1e-3;
    kernels::Exec exec = kernels::Exec::parallel;
    bool keep_samples = true;
    /// Replace psi by the identity (negative control).
    bool corrupt_transport = false;
};

struct SampleRecord
{
    Vec2 u;
    std::size_t component = 0;
    Vec2 m;
    double det = 0.0;
    double residual = 0.0;
    double bookkeeping = 0.0;
    double chart_radius = 0.0;
    bool rejected = false;  ///< outside the cut-locus margin
};

struct StripVolumeRow
{
    std::size_t component = 0;
    Extended lower, upper;
    double target = 0.0;
    double table = 0.0;     ///< volume implied by the marginal table
    double achieved = 0.0;  ///< independent 2D quadrature
};

struct VerificationReport
{
    std::string scenario;
    std::string manifold;
    std::string case_tag;
    std::string verdict;
    std::size_t samples = 0;
    std::size_t rejected = 0;
    double max_residual = 0.0;
    double mean_residual = 0.0;
    double max_bookkeeping = 0.0;
    double bookkeeping_ratio = 0.0;  ///< max end-to-end / max bookkeeping
    double min_det = 0.0;
    std::size_t nonpositive_det = 0;
    std::size_t collisions = 0;
    std::vector<StripVolumeRow> strips;
    Extended total_volume;
    double achieved_volume = 0.0;
    double deficit = 0.0;            ///< total - achieved (finite targets)
    double ontoness_gap = 0.0;
    double max_chart_radius = 0.0;
    double build_seconds = 0.0;
    double verify_seconds = 0.0;
    std::vector<SampleRecord> records;
};

VerificationReport verify(const EmbeddingAtlas& atlas, VerifyOptions opt = {});

/// Deterministic JSON; timings go under "timings" and are omitted when `with_timings` is false.
std::string report_json(const VerificationReport& r, bool with_timings = true);
/// u1,u2,component,m1,m2,det,residual
std::string grid_csv(const VerificationReport& r);
/// theta,mu over `rows` equally spaced directions in [0, 2pi); infinite values as "inf".
std::string cutlocus_csv(const ModelManifold& m, int rows = 3600);

} // namespace vpe
