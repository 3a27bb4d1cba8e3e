#pragma once

#include "dect/ect.hpp"

namespace dect::detail {

/// Divide grid values per the config's normalization mode and record the
/// mode. Throws on a zero Frobenius norm (UnitL2) or a vertex count of zero
/// (PerVertexCount).
void apply_normalization(EctGrid& grid);

/// Throw if any simplex references a vertex outside the coordinate matrix.
void check_simplex_indices(const GeometricComplex& complex);

/// Throw unless the complex (when nonempty) and direction set share an
/// ambient dimension.
void check_dims(const GeometricComplex& complex, const DirectionSet& dirs);

}  // namespace dect::detail
