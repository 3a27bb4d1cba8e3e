#pragma once

#include <cstdint>

#include "dect/complex.hpp"

namespace dect {

/// Ordered set of view directions, one per row. When `constrained` is true
/// the rows must be unit vectors (within 1e-9); unconstrained sets model
/// directions as free points of the ambient space.
struct DirectionSet {
    Matrix directions;
    bool constrained = true;

    DirectionSet(Matrix dirs, bool constrained_flag);

    int count() const { return static_cast<int>(directions.rows()); }
    int dim() const { return static_cast<int>(directions.cols()); }

    /// Copy with every row rescaled to unit norm.
    DirectionSet renormalized() const;
};

/// Unit directions: for dim == 2, `count` equally spaced angles starting at
/// angle 0; otherwise normalized Gaussian samples drawn from the seed.
DirectionSet uniform_directions(int dim, int count, std::uint64_t seed = 0);

}  // namespace dect
