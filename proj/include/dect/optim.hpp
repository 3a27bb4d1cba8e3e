#pragma once

#include <utility>
#include <vector>

#include "dect/grad.hpp"

namespace dect {

/// Adam state for one parameter matrix.
struct AdamState {
    Matrix m;  // first moment
    Matrix v;  // second moment
    long t = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_params(const Matrix& params, double lr = 1e-3);
};

/// One bias-corrected Adam update, in place. Throws std::invalid_argument
/// on shape mismatch or a non-finite gradient.
void adam_step(Matrix& params, const Matrix& grads, AdamState& state);

struct MseResult {
    double loss;
    Matrix upstream;  // 2 (a - b) / cell_count, the gradient seed wrt a
};

/// Mean squared error over grid cells. Grids must share their
/// discretization (heights) and normalization mode.
MseResult mse_loss(const EctGrid& a, const EctGrid& b);

struct FitOptions {
    int steps = 1000;
    double lr = 1e-3;
    double tolerance = 1e-4;   // converged when loss drops below this
    bool cosine_decay = false; // optional schedule; constant lr by default
    bool joint = false;        // also update the frozen parameter group
};

/// Optimization log. `steps_run` equals the number of loss evaluations,
/// which is also the length of the trace; a run with a zero step budget
/// records the initial loss only.
struct FitReport {
    std::vector<double> loss_trace;
    Matrix final_directions;
    Matrix final_coordinates;
    int steps_run = 0;
    bool converged = false;
    /// Largest |norm - 1| seen over all logged direction iterates of a
    /// constrained run.
    double max_unit_norm_deviation = 0.0;
};

/// Gradient-descend the directions so the smooth transform of `complex`
/// matches `target` under MSE. Coordinates stay frozen unless
/// options.joint. Constrained sets are renormalized after every step.
FitReport learn_directions(const GeometricComplex& complex, const EctGrid& target,
                           const DirectionSet& init, const EctConfig& config,
                           const FitOptions& options);

/// Gradient-descend the coordinates of a bare point cloud so its smooth
/// transform matches `target`. Requires a point cloud (no simplices) and a
/// normalization mode other than None, so clouds of different cardinality
/// are comparable. Directions stay frozen unless options.joint.
FitReport optimize_pointcloud(const GeometricComplex& source, const EctGrid& target,
                              const DirectionSet& dirs, const EctConfig& config,
                              const FitOptions& options);

}  // namespace dect
