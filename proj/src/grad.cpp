#include "dect/grad.hpp"

#include <stdexcept>
#include <vector>

#include "grid_util.hpp"

namespace dect {

namespace {

void check_upstream_shape(const DirectionSet& dirs, const EctConfig& config,
                          const Matrix& upstream) {
    if (upstream.rows() != dirs.count() || upstream.cols() != config.num_heights)
        throw std::invalid_argument("upstream shape does not match the grid shape");
}

// Fold the normalization into the upstream seeds so the per-simplex pass can
// work with raw (unnormalized) grid values. UnitL2 needs the quotient rule:
// with R the raw grid, rho = |R|_F and G = R/rho,
//   dL/dR = (U - <U, G> G) / rho.
Matrix effective_upstream(const GeometricComplex& complex, const DirectionSet& dirs,
                          const EctConfig& config, const Matrix& upstream) {
    switch (config.normalization) {
        case EctNormalization::None: return upstream;
        case EctNormalization::PerVertexCount: {
            if (complex.num_vertices() == 0)
                throw std::invalid_argument(
                    "per-vertex normalization needs a nonempty source complex");
            return upstream / static_cast<double>(complex.num_vertices());
        }
        case EctNormalization::UnitL2: {
            EctConfig raw_config = config;
            raw_config.normalization = EctNormalization::None;
            const EctGrid raw = ect_smooth(complex, dirs, raw_config);
            const double rho = raw.values.norm();
            if (rho == 0.0)
                throw std::invalid_argument("cannot unit-l2 normalize a zero grid");
            const Matrix unit = raw.values / rho;
            const double overlap = (upstream.array() * unit.array()).sum();
            return (upstream - overlap * unit) / rho;
        }
    }
    throw std::invalid_argument("unknown normalization mode");
}

void project_to_tangent(const DirectionSet& dirs, Matrix& d_directions) {
    for (int d = 0; d < dirs.count(); ++d) {
        const auto xi = dirs.directions.row(d);
        d_directions.row(d) -= d_directions.row(d).dot(xi) * xi;
    }
}

}  // namespace

EctGradients ect_smooth_backward(const GeometricComplex& complex, const DirectionSet& dirs,
                                 const EctConfig& config, const Matrix& upstream) {
    config.check();
    if (config.mode != EctMode::Smooth)
        throw std::invalid_argument("ect_smooth_backward needs a smooth-mode config");
    check_upstream_shape(dirs, config, upstream);

    const int num_dirs = dirs.count();
    const int num_vertices = complex.num_vertices();
    const int dim = dirs.dim();
    const double lambda = config.lambda;
    const Vector grid_heights = config.height_grid();
    const int num_heights = config.num_heights;

    const Matrix u_eff = effective_upstream(complex, dirs, config, upstream);
    const FiltrationValues f = heights(complex, dirs);
    const Matrix& coords = complex.vertices();
    const Matrix& xi = dirs.directions;

    EctGradients out;
    out.d_vertices = Matrix::Zero(num_vertices, dim);
    out.d_directions = Matrix::Zero(num_dirs, dim);

    // Per-direction coordinate-gradient slabs, merged in direction order
    // afterwards: results do not depend on the thread count.
    std::vector<Matrix> slabs(static_cast<std::size_t>(num_dirs));

#pragma omp parallel for schedule(static)
    for (int d = 0; d < num_dirs; ++d) {
        Matrix& slab = slabs[static_cast<std::size_t>(d)];
        slab = Matrix::Zero(num_vertices, dim);
        Eigen::RowVectorXd dir_grad = Eigen::RowVectorXd::Zero(dim);

        auto contribute = [&](double simplex_height, int argmax_vertex, double sign) {
            double acc = 0.0;
            for (int i = 0; i < num_heights; ++i) {
                const double s = logistic(lambda * (grid_heights[i] - simplex_height));
                acc += u_eff(d, i) * s * (1.0 - s);
            }
            const double g = -sign * lambda * acc;  // dL/dh(sigma)
            slab.row(argmax_vertex) += g * xi.row(d);
            dir_grad += g * coords.row(argmax_vertex);
        };

        for (int v = 0; v < num_vertices; ++v) contribute(f.vertex_heights(d, v), v, +1.0);
        for (int e = 0; e < complex.num_edges(); ++e)
            contribute(f.edge_heights(d, e), f.edge_argmax(d, e), -1.0);
        for (int t = 0; t < complex.num_triangles(); ++t)
            contribute(f.triangle_heights(d, t), f.triangle_argmax(d, t), +1.0);

        out.d_directions.row(d) = dir_grad;
    }
    for (int d = 0; d < num_dirs; ++d) out.d_vertices += slabs[static_cast<std::size_t>(d)];

    if (dirs.constrained) project_to_tangent(dirs, out.d_directions);
    return out;
}

EctGradients finite_difference_oracle(const GeometricComplex& complex,
                                      const DirectionSet& dirs, const EctConfig& config,
                                      const Matrix& upstream, double epsilon) {
    if (!(epsilon >= 1e-8 && epsilon <= 1e-2))
        throw std::invalid_argument("epsilon must lie in [1e-8, 1e-2]");
    config.check();
    if (config.mode != EctMode::Smooth)
        throw std::invalid_argument("finite_difference_oracle needs a smooth-mode config");
    check_upstream_shape(dirs, config, upstream);

    // Perturbed direction sets drop the unit-norm constraint flag: the
    // forward value does not depend on it and perturbations leave the sphere.
    auto objective = [&](const Matrix& coords, const Matrix& directions) {
        const GeometricComplex perturbed = complex.with_vertices(coords);
        const DirectionSet dir_set(directions, false);
        const EctGrid grid = ect_smooth(perturbed, dir_set, config);
        return (upstream.array() * grid.values.array()).sum();
    };

    Matrix coords = complex.vertices();
    Matrix directions = dirs.directions;
    EctGradients out;
    out.d_vertices = Matrix::Zero(coords.rows(), coords.cols());
    out.d_directions = Matrix::Zero(directions.rows(), directions.cols());

    for (Eigen::Index v = 0; v < coords.rows(); ++v) {
        for (Eigen::Index c = 0; c < coords.cols(); ++c) {
            const double saved = coords(v, c);
            coords(v, c) = saved + epsilon;
            const double plus = objective(coords, directions);
            coords(v, c) = saved - epsilon;
            const double minus = objective(coords, directions);
            coords(v, c) = saved;
            out.d_vertices(v, c) = (plus - minus) / (2.0 * epsilon);
        }
    }
    for (Eigen::Index d = 0; d < directions.rows(); ++d) {
        for (Eigen::Index c = 0; c < directions.cols(); ++c) {
            const double saved = directions(d, c);
            directions(d, c) = saved + epsilon;
            const double plus = objective(coords, directions);
            directions(d, c) = saved - epsilon;
            const double minus = objective(coords, directions);
            directions(d, c) = saved;
            out.d_directions(d, c) = (plus - minus) / (2.0 * epsilon);
        }
    }

    if (dirs.constrained) project_to_tangent(dirs, out.d_directions);
    return out;
}

}  // namespace dect
