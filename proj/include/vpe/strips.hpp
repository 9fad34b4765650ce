#pragma once

#include "vpe/density.hpp"
#include "vpe/smooth_map.hpp"

#include <vector>

namespace vpe {

/// Strips S_i = {a_{i-1} < x1 < a_i}, a_0 = -inf.
struct StripPartition
{
    std::vector<Extended> bounds;  ///< a_0, ..., a_m
    std::vector<double> volumes;   ///< v_i

    std::size_t size() const { return volumes.size(); }
    Extended lower(std::size_t i) const { return bounds[i]; }
    Extended upper(std::size_t i) const { return bounds[i + 1]; }
};

struct StripOptions
{
    double volume_tolerance = 1e-6;  ///< allowed excess of sum(v) over the mass
    double bound_tolerance = 1e-9;   ///< root-finding tolerance in x1
};

StripPartition strip_bounds(const DensityField& omega, const std::vector<double>& volumes, StripOptions opt = {});

/// Orientation-preserving diffeomorphism R^2 -> {a < x1 < b}; x2 unchanged.
SmoothMap strip_map(Extended a, Extended b);

/// ∫_{a < x1 < b} omega by nested adaptive Gauss quadrature in polar
/// coordinates (`panels` starting panels per half-plane and per ray);
/// independent of the marginal table.
double strip_volume(const DensityField& omega, Extended a, Extended b, int panels = 8);

} // namespace vpe
