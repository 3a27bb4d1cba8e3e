#pragma once

#include "dect/ect.hpp"

namespace dect {

/// Gradients of a scalar loss through the smooth transform, accumulated
/// over all grid cells. Shapes match the originating complex and direction
/// set.
struct EctGradients {
    Matrix d_vertices;    // num_vertices x ambient_dim
    Matrix d_directions;  // num_directions x ambient_dim
};

/// Reverse-mode pass through ect_smooth. `upstream` holds dL/dcell seeds
/// with the grid's shape. Gradient flows to each simplex's argmax vertex
/// only (lowest-index tie rule, matching heights()); normalization factors
/// from the config are propagated, including the quotient rule for UnitL2.
/// For constrained direction sets the direction gradients are projected
/// onto the tangent space of the sphere.
EctGradients ect_smooth_backward(const GeometricComplex& complex,
                                 const DirectionSet& dirs,
                                 const EctConfig& config,
                                 const Matrix& upstream);

/// Independent check: central differences of <upstream, ect_smooth> with
/// respect to every vertex and direction coordinate. O(parameters) forward
/// passes; epsilon must lie in [1e-8, 1e-2]. Constrained direction sets get
/// the same tangent projection as the analytic pass.
EctGradients finite_difference_oracle(const GeometricComplex& complex,
                                      const DirectionSet& dirs,
                                      const EctConfig& config,
                                      const Matrix& upstream,
                                      double epsilon);

}  // namespace dect
