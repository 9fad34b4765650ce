#pragma once

#include "vpe/geometry.hpp"
#include "vpe/kernels.hpp"
#include "vpe/smooth_map.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace vpe {

/// One connected component of U.
struct Shape
{
    enum class Kind { rectangle, disk, annulus, plane };
    Kind kind = Kind::rectangle;
    double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;  // rectangle
    Vec2 center;                                           // disk, annulus
    double radius = 1.0;                                   // disk
    double r_in = 0.5, r_out = 1.0;                        // annulus

    static Shape rectangle(double x_lo, double x_hi, double y_lo, double y_hi);
    static Shape disk(Vec2 center, double radius);
    static Shape annulus(Vec2 center, double r_in, double r_out);
    /// The whole plane (infinite area).
    static Shape plane();

    std::string name() const;
    Extended area() const;
    bool contains(const Vec2& x) const;
    /// Distance from an interior point to the boundary (+inf for the plane).
    double boundary_distance(const Vec2& x) const;
    /// Axis-aligned bounding box [lo, hi] (plane: the given window).
    void bounds(Vec2& lo, Vec2& hi, double window = 3.0) const;
};

/// U as a finite union of closure-disjoint catalog shapes.
class PlanarDomain
{
public:
    explicit PlanarDomain(std::vector<Shape> components);
    const std::vector<Shape>& components() const { return components_; }
    std::size_t size() const { return components_.size(); }
    const Shape& operator[](std::size_t i) const { return components_[i]; }

private:
    std::vector<Shape> components_;
};

/// |U|: sum of closed-form component areas.
Extended lebesgue_volume(const PlanarDomain& d);

/// Orientation-preserving diffeomorphism of the shape onto R^2 (annulus: onto R^2 minus 0).
SmoothMap shape_to_plane(const Shape& s);
/// Closed-form inverse of shape_to_plane.
Vec2 plane_to_shape(const Shape& s, const Vec2& y);
SmoothMap plane_to_shape_map(const Shape& s);
/// det D(shape_to_plane^{-1})(y): density of the pushed-forward Lebesgue measure.
double plane_to_shape_density(const Shape& s, const Vec2& y);

/// Halton points inside the shape at least `margin` away from its boundary.
/// The plane is sampled on the window [-window, window]^2.
std::vector<Vec2> interior_samples(const Shape& s, std::size_t n, double margin, double window = 3.0,
                                   std::uint64_t offset = 0);

// ---------------------------------------------------------------------------
// Exhaustion gluing

/// One stage (V_k, sigma_k) of an exhaustion chain.
struct ExhaustionStage
{
    std::function<bool(const Vec2&)> contains;        ///< V_k
    double extent = 1.0;                              ///< V_k lies in [-extent, extent]^2
    SmoothMap sigma;                                  ///< sigma_k on V_k
    std::function<bool(const Vec2&)> image_contains;  ///< y in sigma_k(V_k)
};

/// Stage-wise provider: returns stage k (1-based).
using ExhaustionProvider = std::function<ExhaustionStage(int k)>;

struct LedgerEntry
{
    int k = 0;
    double ball_radius = 0.0;  ///< B_k has radius k
    double deficit = 0.0;      ///< Monte Carlo estimate of |B_k \ sigma_k(V_k)|
    double half_width = 0.0;   ///< 95% confidence half-width
    double bound = 0.0;        ///< 2^{-k}
    double max_disagreement = 0.0;
};

struct ExhaustionOptions
{
    int stages = 10;
    std::uint64_t samples = 1000000;
    std::uint64_t seed = 12345;
    int probes = 1000;
    double agreement_tol = 1e-12;
    kernels::Exec exec = kernels::Exec::parallel;
};

struct ExhaustionChain
{
    std::vector<ExhaustionStage> stages;
    std::vector<LedgerEntry> ledger;
    SmoothMap glued;  ///< sigma on the union of V_k, defined by restriction
};

/// Monte Carlo estimate of |B_R \ image| with deterministic per-chunk seeds;
/// serial and parallel execution give identical results.
LedgerEntry estimate_deficit(const std::function<bool(const Vec2&)>& image_contains, double radius,
                             std::uint64_t samples, std::uint64_t seed, kernels::Exec exec);

ExhaustionChain exhaustion_glue(const ExhaustionProvider& provider, ExhaustionOptions opt = {});

/// Demo chain: V_k = disks of radius k/(k+1) in the unit disk, each sigma_k
/// agreeing with sigma_{k-1} on V_{k-1} and missing exactly 2^{-k}/2 of B_k.
ExhaustionProvider demo_disk_chain();
/// Exact deficit |B_k \ sigma_k(V_k)| of the demo chain.
double demo_disk_chain_deficit(int k);
/// V_k = B_k, sigma_k = identity.
ExhaustionProvider identity_ball_chain();

} // namespace vpe
