#pragma once

#include "vpe/manifold.hpp"
#include "vpe/smooth_map.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace vpe {

/// S = { x : |x| < mu(x/|x|) }, open and starlike about the origin.
class StarlikeDomain
{
public:
    explicit StarlikeDomain(CutTimeProfile profile) : profile_(std::move(profile)) {}
    bool contains(const Vec2& x) const
    {
        const double r = x.norm();
        return r == 0.0 || r < profile_.value(polar_angle(x));
    }
    const CutTimeProfile& profile() const { return profile_; }

private:
    CutTimeProfile profile_;
};

struct LadderStage
{
    int index = 1;            ///< i (1-based)
    double eps = 0.0;         ///< eps_i
    double delta = 0.0;       ///< delta_i
    double start = 0.0;       ///< radius where the stage's radial blend starts
    double length = 1.0;      ///< radial length scale of the blend
    double width = 0.0;       ///< mollifier half-width (0: unsmoothed)
    double shift = 0.0;       ///< downward shift restoring strict minorancy
    std::int64_t nodes = 0;   ///< sample nodes on the circle
    double beta = 0.0;        ///< soft-minimum sharpness (0: not used)
};

struct LadderOptions
{
    int stages = 24;
    std::optional<double> eps1;       ///< default min(1, inf mu)/2
    double delta_ratio = 0.5;         ///< delta_i = ratio * eps_i
    std::optional<double> r0;         ///< default min(1/2, inf mu / 2)
    double stage_spacing = 1.0;       ///< radial distance between stage starts
};

/// Smooth strict minorants mu~_1 < mu~_2 < ... < mu of a continuous profile.
///
/// Stage i targets min{i, mu - eps_i + delta_i/2}. When mu is a minimum of
/// smooth lattice pieces, the target is replaced by a log-sum-exp soft minimum
/// of the same pieces within delta_i/8 below it. Otherwise it is smoothed by a
/// normalized circular convolution with a compact bump on a fixed node grid
/// (a Nadaraya-Watson average, C-infinity in theta and within Lipschitz *
/// width of the target). Either way the result is shifted down by delta_i / 4.
class MinorantLadder
{
public:
    MinorantLadder(CutTimeProfile profile, std::vector<LadderStage> stages, double r0, bool smooth);

    int size() const { return static_cast<int>(stages_.size()); }
    const LadderStage& stage(int i) const { return stages_[i - 1]; }
    const std::vector<LadderStage>& stages() const { return stages_; }
    const CutTimeProfile& profile() const { return profile_; }
    double r0() const { return r0_; }

    /// Unsmoothed stage target min{i, mu - eps_i + delta_i/2}.
    double target(int i, double theta) const;
    /// mu~_i(theta)
    double value(int i, double theta) const;
    /// d mu~_i / d theta
    double derivative(int i, double theta) const;
    /// Both at once.
    void evaluate(int i, double theta, double& value, double& derivative) const;
    /// Stages 1..count at one angle (shares the per-angle work).
    void evaluate_stages(int count, double theta, double* value, double* derivative) const;

private:
    CutTimeProfile profile_;
    std::vector<LadderStage> stages_;
    double r0_;
    bool smooth_;
};

MinorantLadder build_minorants(const CutTimeProfile& profile, int stages, LadderOptions opt = {});

/// Radial profile rho(x) = f(|x|, theta) x/|x| of a straightening.
class RayMap
{
public:
    virtual ~RayMap() = default;
    /// f, df/dr, df/dtheta at (r, theta)
    virtual void radius(double r, double theta, double& f, double& fr, double& ft) const = 0;
};

/// Builds the SmoothMap x -> f(|x|, theta) x/|x| with its analytic Jacobian.
SmoothMap ray_map_to_smooth(std::shared_ptr<const RayMap> ray, std::string tag, double identity_radius);

/// Ray-preserving diffeomorphism R^2 -> S from a minorant ladder. Identity
/// on |x| <= r0/2; along each ray the radius increases to mu~_K(theta).
SmoothMap straighten(const CutTimeProfile& profile, const MinorantLadder& ladder);

enum class Saturation { exponential, hyperbolic_tangent };

/// Fast path for regular profiles: f = mu (1 - exp(-r/mu)) or mu tanh(r/mu).
/// Piecewise profiles are refused. Profiles whose reciprocal is |smooth|
/// (flat cylinder) need the odd tanh saturation to stay smooth on the axis.
SmoothMap simple_ray_map(const CutTimeProfile& profile, Saturation saturation = Saturation::exponential);

/// Flat-at-zero smoothstep: 0 for u <= 0, 1 for u >= 1.
double flat_step(double u);
double flat_step_derivative(double u);

} // namespace vpe
