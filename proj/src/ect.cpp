#include "dect/ect.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "grid_util.hpp"

namespace dect {

void EctConfig::check() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (num_heights < 2) throw std::invalid_argument("num_heights must be at least 2");
    if (!(h_min < h_max)) throw std::invalid_argument("height interval is empty");
}

Vector EctConfig::height_grid() const {
    Vector h(num_heights);
    const double step = (h_max - h_min) / (num_heights - 1);
    for (int i = 0; i < num_heights; ++i) h[i] = h_min + i * step;
    h[num_heights - 1] = h_max;  // inclusive endpoint, exactly
    return h;
}

EctNormalization normalization_from_string(const std::string& name) {
    if (name == "none") return EctNormalization::None;
    if (name == "vertex") return EctNormalization::PerVertexCount;
    if (name == "l2") return EctNormalization::UnitL2;
    throw std::invalid_argument("unknown normalization '" + name + "' (none|vertex|l2)");
}

std::string to_string(EctNormalization mode) {
    switch (mode) {
        case EctNormalization::None: return "none";
        case EctNormalization::PerVertexCount: return "vertex";
        case EctNormalization::UnitL2: return "l2";
    }
    throw std::invalid_argument("unknown normalization mode");
}

namespace detail {

void apply_normalization(EctGrid& grid) {
    switch (grid.config.normalization) {
        case EctNormalization::None: return;
        case EctNormalization::PerVertexCount:
            if (grid.num_source_vertices <= 0)
                throw std::invalid_argument(
                    "per-vertex normalization needs a nonempty source complex");
            grid.values /= static_cast<double>(grid.num_source_vertices);
            return;
        case EctNormalization::UnitL2: {
            const double rho = grid.values.norm();
            if (rho == 0.0)
                throw std::invalid_argument("cannot unit-l2 normalize a zero grid");
            grid.values /= rho;
            return;
        }
    }
}

void check_simplex_indices(const GeometricComplex& complex) {
    const int n = complex.num_vertices();
    for (const auto& e : complex.edges())
        if (e[0] < 0 || e[1] >= n)
            throw std::out_of_range("edge vertex index out of range");
    for (const auto& t : complex.triangles())
        if (t[0] < 0 || t[2] >= n)
            throw std::out_of_range("triangle vertex index out of range");
}

void check_dims(const GeometricComplex& complex, const DirectionSet& dirs) {
    if (complex.num_vertices() > 0 && complex.ambient_dim() != dirs.dim())
        throw std::invalid_argument("complex and directions have different ambient dimensions");
}

}  // namespace detail

FiltrationValues heights(const GeometricComplex& complex, const DirectionSet& dirs) {
    detail::check_dims(complex, dirs);
    detail::check_simplex_indices(complex);

    const int num_dirs = dirs.count();
    const int num_vertices = complex.num_vertices();
    const int num_edges = complex.num_edges();
    const int num_triangles = complex.num_triangles();
    const Matrix& coords = complex.vertices();
    const Matrix& xi = dirs.directions;

    FiltrationValues f;
    f.vertex_heights.resize(num_dirs, num_vertices);
    f.edge_heights.resize(num_dirs, num_edges);
    f.triangle_heights.resize(num_dirs, num_triangles);
    f.edge_argmax.resize(num_dirs, num_edges);
    f.triangle_argmax.resize(num_dirs, num_triangles);

#pragma omp parallel for schedule(static)
    for (int d = 0; d < num_dirs; ++d) {
        for (int v = 0; v < num_vertices; ++v)
            f.vertex_heights(d, v) = xi.row(d).dot(coords.row(v));
        // Simplex indices are stored ascending, so scanning with a strict
        // comparison breaks height ties toward the lowest vertex index.
        for (int e = 0; e < num_edges; ++e) {
            const auto& edge = complex.edges()[e];
            double best = f.vertex_heights(d, edge[0]);
            int arg = edge[0];
            if (f.vertex_heights(d, edge[1]) > best) {
                best = f.vertex_heights(d, edge[1]);
                arg = edge[1];
            }
            f.edge_heights(d, e) = best;
            f.edge_argmax(d, e) = arg;
        }
        for (int t = 0; t < num_triangles; ++t) {
            const auto& tri = complex.triangles()[t];
            double best = f.vertex_heights(d, tri[0]);
            int arg = tri[0];
            for (int k = 1; k < 3; ++k) {
                const double h = f.vertex_heights(d, tri[k]);
                if (h > best) {
                    best = h;
                    arg = tri[k];
                }
            }
            f.triangle_heights(d, t) = best;
            f.triangle_argmax(d, t) = arg;
        }
    }
    return f;
}

namespace {

EctGrid make_grid(const GeometricComplex& complex, const DirectionSet& dirs,
                  const EctConfig& config) {
    EctGrid grid;
    grid.config = config;
    grid.heights = config.height_grid();
    grid.values.setZero(dirs.count(), config.num_heights);
    grid.num_source_vertices = complex.num_vertices();
    return grid;
}

// Each simplex switches on at the first grid point at or above its height;
// scatter the signed switch-on events, then prefix-sum along the row.
void scatter_events(const double* simplex_heights, int count, double sign,
                    const Vector& grid_heights, std::vector<double>& delta) {
    const double* begin = grid_heights.data();
    const double* end = begin + grid_heights.size();
    for (int s = 0; s < count; ++s) {
        const auto idx = std::lower_bound(begin, end, simplex_heights[s]) - begin;
        if (idx < grid_heights.size()) delta[static_cast<std::size_t>(idx)] += sign;
    }
}

}  // namespace

EctGrid ect_hard(const GeometricComplex& complex, const DirectionSet& dirs,
                 const EctConfig& config) {
    config.check();
    if (config.mode != EctMode::Hard)
        throw std::invalid_argument("ect_hard called with a smooth-mode config");

    const FiltrationValues f = heights(complex, dirs);
    EctGrid grid = make_grid(complex, dirs, config);
    const int num_dirs = dirs.count();
    const int num_heights = config.num_heights;

#pragma omp parallel for schedule(static)
    for (int d = 0; d < num_dirs; ++d) {
        std::vector<double> delta(static_cast<std::size_t>(num_heights), 0.0);
        if (complex.num_vertices() > 0)
            scatter_events(&f.vertex_heights(d, 0), complex.num_vertices(), +1.0,
                           grid.heights, delta);
        if (complex.num_edges() > 0)
            scatter_events(&f.edge_heights(d, 0), complex.num_edges(), -1.0, grid.heights,
                           delta);
        if (complex.num_triangles() > 0)
            scatter_events(&f.triangle_heights(d, 0), complex.num_triangles(), +1.0,
                           grid.heights, delta);
        double running = 0.0;
        for (int i = 0; i < num_heights; ++i) {
            running += delta[static_cast<std::size_t>(i)];
            grid.values(d, i) = running;
        }
    }
    detail::apply_normalization(grid);
    return grid;
}

EctGrid ect_smooth(const GeometricComplex& complex, const DirectionSet& dirs,
                   const EctConfig& config) {
    config.check();
    if (config.mode != EctMode::Smooth)
        throw std::invalid_argument("ect_smooth called with a hard-mode config");

    const FiltrationValues f = heights(complex, dirs);
    EctGrid grid = make_grid(complex, dirs, config);
    const int num_dirs = dirs.count();
    const int num_heights = config.num_heights;
    const double lambda = config.lambda;

    // One thread per direction with a fixed accumulation order (vertices,
    // edges, triangles, each in storage order), so results do not depend on
    // the thread count.
#pragma omp parallel for schedule(static)
    for (int d = 0; d < num_dirs; ++d) {
        std::vector<double> acc(static_cast<std::size_t>(num_heights), 0.0);
        for (int v = 0; v < complex.num_vertices(); ++v) {
            const double hs = f.vertex_heights(d, v);
            for (int i = 0; i < num_heights; ++i)
                acc[static_cast<std::size_t>(i)] += logistic(lambda * (grid.heights[i] - hs));
        }
        for (int e = 0; e < complex.num_edges(); ++e) {
            const double hs = f.edge_heights(d, e);
            for (int i = 0; i < num_heights; ++i)
                acc[static_cast<std::size_t>(i)] -= logistic(lambda * (grid.heights[i] - hs));
        }
        for (int t = 0; t < complex.num_triangles(); ++t) {
            const double hs = f.triangle_heights(d, t);
            for (int i = 0; i < num_heights; ++i)
                acc[static_cast<std::size_t>(i)] += logistic(lambda * (grid.heights[i] - hs));
        }
        for (int i = 0; i < num_heights; ++i)
            grid.values(d, i) = acc[static_cast<std::size_t>(i)];
    }
    detail::apply_normalization(grid);
    return grid;
}

EctGrid normalize_ect(const EctGrid& grid, EctNormalization mode) {
    if (grid.values.size() == 0) throw std::invalid_argument("cannot normalize an empty grid");
    EctGrid out = grid;
    if (mode == EctNormalization::None) return out;
    out.config.normalization = mode;
    detail::apply_normalization(out);
    return out;
}

}  // namespace dect
