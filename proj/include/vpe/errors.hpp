#pragma once

#include <stdexcept>
#include <string>

namespace vpe {

/// Base of every error raised by the library. `kind()` is a stable short tag
/// used by the CLI for diagnostics.
class Error : public std::runtime_error
{
public:
    Error(std::string kind, const std::string& what)
    : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

#define VPE_DEFINE_ERROR(Name, tag)                                                  \
    class Name : public Error                                                        \
    {                                                                                \
    public:                                                                          \
        explicit Name(const std::string& what) : Error(tag, what) {}                 \
    }

VPE_DEFINE_ERROR(DomainViolation, "domain-violation");
VPE_DEFINE_ERROR(NumericalError, "numerical-evaluation");
VPE_DEFINE_ERROR(DegenerateMap, "degenerate-map");
VPE_DEFINE_ERROR(ConfigurationError, "configuration");
VPE_DEFINE_ERROR(ChartRangeError, "chart-range");
VPE_DEFINE_ERROR(StraighteningFault, "straightening-fault");
VPE_DEFINE_ERROR(InfeasibleLadder, "infeasible-ladder");
VPE_DEFINE_ERROR(RefusedProfile, "refused-profile");
VPE_DEFINE_ERROR(DeficitViolation, "deficit-violation");
VPE_DEFINE_ERROR(InconsistentChain, "inconsistent-chain");
VPE_DEFINE_ERROR(MassMismatch, "mass-mismatch");
VPE_DEFINE_ERROR(DensityResolution, "density-resolution");
VPE_DEFINE_ERROR(AnchoringInfeasible, "anchoring-infeasible");
VPE_DEFINE_ERROR(FiniteMassForAnchored, "finite-mass");
VPE_DEFINE_ERROR(InsufficientVolume, "insufficient-volume");
VPE_DEFINE_ERROR(ExhaustionMargin, "exhaustion-margin");

#undef VPE_DEFINE_ERROR

/// Wraps a module error with the pipeline stage it surfaced in.
class StageError : public Error
{
public:
    StageError(std::string stage, const Error& inner)
    : Error(inner.kind(), "[" + stage + "] " + inner.what()), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

} // namespace vpe
