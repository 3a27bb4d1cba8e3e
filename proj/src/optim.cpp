#include "dect/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dect {

AdamState AdamState::for_params(const Matrix& params, double lr_value) {
    AdamState state;
    state.m = Matrix::Zero(params.rows(), params.cols());
    state.v = Matrix::Zero(params.rows(), params.cols());
    state.lr = lr_value;
    return state;
}

void adam_step(Matrix& params, const Matrix& grads, AdamState& state) {
    if (params.rows() != grads.rows() || params.cols() != grads.cols())
        throw std::invalid_argument("parameter and gradient shapes differ");
    if (state.m.rows() != params.rows() || state.m.cols() != params.cols())
        throw std::invalid_argument("optimizer state does not match the parameter shape");
    if (!grads.allFinite()) throw std::invalid_argument("non-finite gradient");

    state.t += 1;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseProduct(grads);
    const double m_corr = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double v_corr = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    params.array() -=
        state.lr * (state.m.array() / m_corr) / ((state.v.array() / v_corr).sqrt() + state.eps);
}

MseResult mse_loss(const EctGrid& a, const EctGrid& b) {
    if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols())
        throw std::invalid_argument("grid shapes differ");
    if (a.heights.size() != b.heights.size() ||
        (a.heights.array() != b.heights.array()).any())
        throw std::invalid_argument("grid height discretizations differ");
    if (a.config.normalization != b.config.normalization)
        throw std::invalid_argument("grid normalization modes differ");

    const double count = static_cast<double>(a.values.size());
    const Matrix diff = a.values - b.values;
    return {diff.squaredNorm() / count, (2.0 / count) * diff};
}

namespace {

FitReport fit(const GeometricComplex& start, const EctGrid& target, const DirectionSet& init,
              const EctConfig& config, const FitOptions& options, bool update_directions,
              bool update_coordinates) {
    if (options.steps < 0) throw std::invalid_argument("step budget must be nonnegative");

    GeometricComplex current = start;
    DirectionSet dirs = init;
    AdamState dir_state = AdamState::for_params(dirs.directions, options.lr);
    AdamState coord_state = AdamState::for_params(current.vertices(), options.lr);

    FitReport report;
    for (int iter = 0;; ++iter) {
        const EctGrid grid = ect_smooth(current, dirs, config);
        const MseResult mse = mse_loss(grid, target);
        report.loss_trace.push_back(mse.loss);
        if (dirs.constrained) {
            for (int d = 0; d < dirs.count(); ++d)
                report.max_unit_norm_deviation = std::max(
                    report.max_unit_norm_deviation, std::abs(dirs.directions.row(d).norm() - 1.0));
        }
        if (mse.loss < options.tolerance) {
            report.converged = true;
            break;
        }
        if (iter >= options.steps) break;

        const EctGradients grads = ect_smooth_backward(current, dirs, config, mse.upstream);
        const double lr =
            options.cosine_decay
                ? options.lr * 0.5 *
                      (1.0 + std::cos(std::numbers::pi * iter / std::max(options.steps, 1)))
                : options.lr;

        if (update_directions) {
            dir_state.lr = lr;
            adam_step(dirs.directions, grads.d_directions, dir_state);
            if (dirs.constrained) {
                for (int d = 0; d < dirs.count(); ++d) {
                    const double n = dirs.directions.row(d).norm();
                    if (n > 0.0) dirs.directions.row(d) /= n;
                }
            }
        }
        if (update_coordinates) {
            coord_state.lr = lr;
            Matrix coords = current.vertices();
            adam_step(coords, grads.d_vertices, coord_state);
            current = current.with_vertices(std::move(coords));
        }
    }

    report.steps_run = static_cast<int>(report.loss_trace.size());
    report.final_directions = dirs.directions;
    report.final_coordinates = current.vertices();
    return report;
}

}  // namespace

FitReport learn_directions(const GeometricComplex& complex, const EctGrid& target,
                           const DirectionSet& init, const EctConfig& config,
                           const FitOptions& options) {
    return fit(complex, target, init, config, options, /*update_directions=*/true,
               /*update_coordinates=*/options.joint);
}

FitReport optimize_pointcloud(const GeometricComplex& source, const EctGrid& target,
                              const DirectionSet& dirs, const EctConfig& config,
                              const FitOptions& options) {
    if (!source.is_point_cloud())
        throw std::invalid_argument(
            "point-cloud optimization needs a bare point cloud (no edges or triangles)");
    if (config.normalization == EctNormalization::None)
        throw std::invalid_argument(
            "point-cloud optimization needs a normalization mode, so grids from clouds of "
            "different cardinality are comparable");
    return fit(source, target, dirs, config, options, /*update_directions=*/options.joint,
               /*update_coordinates=*/true);
}

}  // namespace dect
