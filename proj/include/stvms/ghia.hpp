#pragma once

#include <array>

#include "stvms/postprocess.hpp"

namespace stvms {
namespace ghia {

// u_x along the vertical centerline x = 0.5 of the unit cavity at Re = 1000
// (Ghia, Ghia & Shin, J. Comput. Phys. 48 (1982), Table I, 129x129 grid).
inline constexpr int kCount = 17;
inline constexpr std::array<double, kCount> kY = {
    0.0000, 0.0547, 0.0625, 0.0703, 0.1016, 0.1719, 0.2813, 0.4531, 0.5000,
    0.6172, 0.7344, 0.8516, 0.9531, 0.9609, 0.9688, 0.9766, 1.0000};
inline constexpr std::array<double, kCount> kU_Re1000 = {
    0.00000, -0.18109, -0.20196, -0.22220, -0.29730, -0.38289,
    -0.27805, -0.10648, -0.06080, 0.05702,  0.18719,  0.33304,
    0.46604,  0.51117,  0.57492,  0.65928,  1.00000};

}  // namespace ghia

// FE sample of one field component at a spatial point (element search plus
// inverse isoparametric mapping). Throws when the point lies outside the mesh.
double sample_slice(const TemporalSlice& slice, std::span<const double> point,
                    int component);

// Max absolute deviation of u_x(0.5, y) from the Ghia Re=1000 profile over
// the 17 ordinates.
double ghia_re1000_max_deviation(const TemporalSlice& slice);

}  // namespace stvms
