#pragma once

#include "pflow/config.hpp"
#include "pflow/field.hpp"

#include <cstdint>
#include <vector>

namespace pflow {

/// Every constructor projects onto the target, so sphere data starts on N.
FieldMap constant_map(const GridSpec& grid, const TargetSpec& target, const std::vector<double>& q);

/// q + amplitude * sin(2 pi mode x_axis / L_axis) * direction.
FieldMap fourier_map(const GridSpec& grid, const TargetSpec& target, const std::vector<double>& q, int axis, int mode,
                     double amplitude, const std::vector<double>& direction);

/// q + sum over 0 < |k|_inf <= modes of Gaussian vector coefficients times amplitude / |k|, so
/// every mode carries a comparable gradient. Deterministic for a given seed.
FieldMap random_smooth_map(const GridSpec& grid, const TargetSpec& target, const std::vector<double>& q,
                           std::uint64_t seed, int modes, double amplitude);

/// Co-rotational degree-one map T^2 -> S^2 around `center`:
/// (sin theta * dx / r, cos theta) with theta = 2 atan(scale / r) faded to 0 by r = L_min / 3.
FieldMap equivariant_degree1_map(const GridSpec& grid, const std::vector<double>& center, double scale);

FieldMap make_initial(const RunConfig& cfg);

}  // namespace pflow
