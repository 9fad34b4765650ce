#pragma once

#include "vpe/density.hpp"
#include "vpe/geometry.hpp"
#include "vpe/smooth_map.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace vpe {

/// Smooth positive density of the plane catalog entry.
struct PlaneDensity
{
    enum class Kind { constant, gaussian };
    Kind kind = Kind::constant;
    double amplitude = 1.0;
    double sigma = 1.0;

    double operator()(const Vec2& x) const
    {
        if (kind == Kind::constant) return amplitude;
        return amplitude * std::exp(-x.dot(x) / (2.0 * sigma * sigma));
    }
};

/// How regular the cut-time profile is as a function on the circle.
enum class ProfileRegularity {
    infinite,         ///< mu ≡ inf
    constant,         ///< finite constant
    even_reciprocal,  ///< 1/mu = |s(theta)| with s smooth (flat cylinder)
    piecewise         ///< continuous, piecewise smooth (lattice Voronoi cells)
};

/// mu as the minimum of smooth pieces: |w|^2 / (2 <v, w>) for each lattice
/// vector w with <v, w> > 0, and an optional constant cap.
struct LatticePieces
{
    std::vector<Vec2> vectors;
    double cap = std::numeric_limits<double>::infinity();
};

/// mu(theta): cut time of the geodesic leaving the base point in direction theta.
class CutTimeProfile
{
public:
    CutTimeProfile(std::function<double(double)> mu, ProfileRegularity regularity, std::string label,
                   std::optional<LatticePieces> pieces = std::nullopt);

    /// Cut time as an extended real.
    Extended operator()(double theta) const;
    /// Same value with +inf as IEEE infinity, for arithmetic.
    double value(double theta) const { return mu_(theta); }

    ProfileRegularity regularity() const { return regularity_; }
    const std::string& label() const { return label_; }
    /// Extremes over 3600 sampled directions (+inf allowed for sup).
    double inf_value() const { return inf_; }
    double sup_value() const { return sup_; }
    /// Sampled Lipschitz modulus on the finite part; +inf for unbounded profiles.
    double lipschitz_estimate() const { return lipschitz_; }
    /// Profile truncated at `cap`: theta -> min(mu(theta), cap).
    CutTimeProfile capped(double cap) const;
    /// Smooth pieces whose minimum is mu, when known.
    const std::optional<LatticePieces>& pieces() const { return pieces_; }

private:
    std::function<double(double)> mu_;
    ProfileRegularity regularity_;
    std::string label_;
    std::optional<LatticePieces> pieces_;
    double inf_ = 0.0, sup_ = 0.0, lipschitz_ = 0.0;
};

/// Catalog target manifold (N, g, Ω) with a base point.
class ModelManifold
{
public:
    enum class Kind { flat_torus, round_sphere, flat_cylinder, plane_with_density };

    static ModelManifold flat_torus(Vec2 w1, Vec2 w2, Vec2 base = {});
    /// Base point given as (longitude, latitude); defaults to the north pole.
    static ModelManifold round_sphere(double radius, Vec2 base = {0.0, std::numbers::pi / 2});
    static ModelManifold flat_cylinder(double circumference, Vec2 base = {});
    static ModelManifold plane_with_density(PlaneDensity density, Vec2 base = {});

    Kind kind() const { return kind_; }
    std::string kind_name() const;
    Vec2 base_point() const { return base_; }
    double radius() const { return radius_; }
    double circumference() const { return circumference_; }
    Vec2 w1() const { return w1_; }
    Vec2 w2() const { return w2_; }
    const PlaneDensity& plane_density() const { return density_; }

    /// Lattice vectors whose half-planes bound the Voronoi cell (torus, cylinder).
    const std::vector<Vec2>& relevant_vectors() const { return relevant_; }

    /// Density of Ω pulled back by exp_p at tangent vector z.
    double exp_density(const Vec2& z) const;
    /// Density of Ω in the manifold chart coordinates returned by exp_chart.
    double chart_density(const Vec2& y) const;
    /// Chart difference a - b with periodic coordinates unwrapped to the nearest image.
    Vec2 chart_difference(const Vec2& a, const Vec2& b) const;
    /// Intrinsic distance between two chart points.
    double chart_distance(const Vec2& a, const Vec2& b) const;

private:
    ModelManifold() = default;

    Kind kind_ = Kind::plane_with_density;
    Vec2 base_;
    Vec2 w1_, w2_;
    double radius_ = 1.0;
    double circumference_ = 1.0;
    PlaneDensity density_;
    std::vector<Vec2> relevant_;
};

/// Brute-force lattice search: every nonzero lattice vector with norm at most
/// `radius`. Throws ConfigurationError for a degenerate basis.
std::vector<Vec2> lattice_vectors_within(Vec2 w1, Vec2 w2, double radius);

/// min over the given vectors w with <v, w> > 0 of |w|^2 / (2 <v, w>); +inf if none.
double lattice_cut_time(const std::vector<Vec2>& vectors, double theta);

CutTimeProfile cut_time_profile(const ModelManifold& m);
Extended cut_time(const ModelManifold& m, double theta);

/// exp_p(x) in the manifold chart: torus fundamental cell, sphere (lon, lat),
/// cylinder (x1 mod c, x2), plane identity (plus base point).
Vec2 exp_chart(const ModelManifold& m, const Vec2& x);
/// Analytic Jacobian of exp_chart (identity for the flat and plane charts).
Mat2 exp_chart_jacobian(const ModelManifold& m, const Vec2& x);
SmoothMap exp_chart_map(const ModelManifold& m);

struct PullbackOptions
{
    DensityOptions grid{};
    double scale = 1.0;  ///< compactification scale of both axes
};

/// Density of (exp_p ∘ rho)^* Ω on the plane.
DensityField pullback_density(const ModelManifold& m, const SmoothMap& rho, DensityField::MassKind mass_kind,
                              PullbackOptions opt = {});

struct VolumeResult
{
    Extended value;
    bool converged = true;
    double lo = 0.0, hi = 0.0;  ///< bracket when quadrature did not converge
};

struct VolumeOptions
{
    double divergence_bound = 1e12;
    double rel_tol = 1e-9;
    int max_refinements = 8;
};

VolumeResult total_volume(const ModelManifold& m, VolumeOptions opt = {});

} // namespace vpe
