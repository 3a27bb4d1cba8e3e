#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "dect/complex.hpp"
#include "dect/directions.hpp"

namespace dect {

/// Logistic sigmoid, the indicator relaxation.
inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Row-major matrices for the per-direction kernels: one direction's values
/// sit contiguously in its row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixInt = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-direction filtration values. Vertex heights are inner products
/// <x_v, xi_d>; a simplex's height is the maximum over its spanning
/// vertices, which makes sublevel sets nested subcomplexes. The argmax
/// matrices record which vertex attains each simplex maximum (ties broken
/// by lowest vertex index); this is the subgradient choice reused by the
/// backward pass.
struct FiltrationValues {
    RowMatrix vertex_heights;     // num_directions x num_vertices
    RowMatrix edge_heights;       // num_directions x num_edges
    RowMatrix triangle_heights;   // num_directions x num_triangles
    RowMatrixInt edge_argmax;     // vertex index attaining the edge max
    RowMatrixInt triangle_argmax;
};

enum class EctNormalization { None, PerVertexCount, UnitL2 };
enum class EctMode { Hard, Smooth };

EctNormalization normalization_from_string(const std::string& name);
std::string to_string(EctNormalization mode);

/// Discretization and relaxation parameters for one transform evaluation.
/// `lambda` is the sigmoid tightness: larger values pull the smooth
/// transform toward the hard one. The height grid is `num_heights` equally
/// spaced samples of [h_min, h_max] including both endpoints.
struct EctConfig {
    double lambda = 10.0;
    int num_heights = 16;
    double h_min = -1.0;
    double h_max = 1.0;
    EctNormalization normalization = EctNormalization::None;
    EctMode mode = EctMode::Smooth;

    /// Throws std::invalid_argument on lambda <= 0, num_heights < 2 or an
    /// empty interval.
    void check() const;

    Vector height_grid() const;
};

/// Discretized transform: one row per direction (an Euler characteristic
/// curve), one column per height sample. `num_source_vertices` records the
/// vertex count of the originating complex so per-vertex normalization can
/// be applied after the fact.
struct EctGrid {
    Matrix values;  // num_directions x num_heights
    EctConfig config;
    Vector heights;
    int num_source_vertices = 0;
};

/// Heights of all simplices for all directions (the filtration the
/// transform is computed along). Throws on ambient dimension mismatch or
/// out-of-range simplex indices.
FiltrationValues heights(const GeometricComplex& complex, const DirectionSet& dirs);

/// Exact transform: cell (d, i) is the alternating count of simplices with
/// height <= h_i in direction d (closed sublevel convention). With
/// normalization None every value is an integer, and the last column equals
/// the Euler characteristic whenever all heights fall inside the grid.
EctGrid ect_hard(const GeometricComplex& complex, const DirectionSet& dirs,
                 const EctConfig& config);

/// Relaxed transform: each indicator is replaced by the logistic sigmoid
/// S(lambda (h_i - h(sigma))), keeping the alternating dimension signs.
/// Normalization from the config is applied after summation.
EctGrid ect_smooth(const GeometricComplex& complex, const DirectionSet& dirs,
                   const EctConfig& config);

/// Rescale a grid: PerVertexCount divides by the source vertex count,
/// UnitL2 by the Frobenius norm of the values (error on a zero grid),
/// None is the identity.
EctGrid normalize_ect(const EctGrid& grid, EctNormalization mode);

namespace reference {

/// Serial implementations straight from the definitions (per grid point,
/// loop over every simplex and recompute its height). Kept as the oracle
/// for the parallel kernels and as the baseline of the benchmark target.
EctGrid ect_hard(const GeometricComplex& complex, const DirectionSet& dirs,
                 const EctConfig& config);
EctGrid ect_smooth(const GeometricComplex& complex, const DirectionSet& dirs,
                   const EctConfig& config);

}  // namespace reference

}  // namespace dect
