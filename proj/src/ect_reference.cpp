#include <stdexcept>

#include "dect/ect.hpp"
#include "grid_util.hpp"

namespace dect::reference {

// These walk the definitions directly: for every grid point, loop over every
// simplex, recompute its height as the max inner product of its vertices and
// test it against the threshold. No filtration reuse, no event scatter, no
// threads; deliberately the dumbest correct implementation.

namespace {

double simplex_height(const Matrix& coords, const Eigen::RowVectorXd& xi,
                      const int* vertex_indices, int count) {
    double best = xi.dot(coords.row(vertex_indices[0]));
    for (int k = 1; k < count; ++k)
        best = std::max(best, xi.dot(coords.row(vertex_indices[k])));
    return best;
}

EctGrid evaluate(const GeometricComplex& complex, const DirectionSet& dirs,
                 const EctConfig& config, bool smooth) {
    detail::check_dims(complex, dirs);
    detail::check_simplex_indices(complex);

    EctGrid grid;
    grid.config = config;
    grid.heights = config.height_grid();
    grid.values.setZero(dirs.count(), config.num_heights);
    grid.num_source_vertices = complex.num_vertices();

    const Matrix& coords = complex.vertices();
    for (int d = 0; d < dirs.count(); ++d) {
        const Eigen::RowVectorXd xi = dirs.directions.row(d);
        for (int i = 0; i < config.num_heights; ++i) {
            const double h = grid.heights[i];
            double total = 0.0;
            for (int v = 0; v < complex.num_vertices(); ++v) {
                const double hs = xi.dot(coords.row(v));
                total += smooth ? logistic(config.lambda * (h - hs)) : (hs <= h ? 1.0 : 0.0);
            }
            for (const auto& e : complex.edges()) {
                const double hs = simplex_height(coords, xi, e.data(), 2);
                total -= smooth ? logistic(config.lambda * (h - hs)) : (hs <= h ? 1.0 : 0.0);
            }
            for (const auto& t : complex.triangles()) {
                const double hs = simplex_height(coords, xi, t.data(), 3);
                total += smooth ? logistic(config.lambda * (h - hs)) : (hs <= h ? 1.0 : 0.0);
            }
            grid.values(d, i) = total;
        }
    }
    detail::apply_normalization(grid);
    return grid;
}

}  // namespace

EctGrid ect_hard(const GeometricComplex& complex, const DirectionSet& dirs,
                 const EctConfig& config) {
    config.check();
    if (config.mode != EctMode::Hard)
        throw std::invalid_argument("ect_hard called with a smooth-mode config");
    return evaluate(complex, dirs, config, /*smooth=*/false);
}

EctGrid ect_smooth(const GeometricComplex& complex, const DirectionSet& dirs,
                   const EctConfig& config) {
    config.check();
    if (config.mode != EctMode::Smooth)
        throw std::invalid_argument("ect_smooth called with a hard-mode config");
    return evaluate(complex, dirs, config, /*smooth=*/true);
}

}  // namespace dect::reference
