#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dect {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Simplex index tuples. Stored with ascending vertex indices, so unordered
/// equality is plain tuple equality.
using EdgeIndices = std::array<int, 2>;
using TriangleIndices = std::array<int, 3>;

/// Embedded simplicial complex of dimension at most 2: vertex coordinates
/// plus edge and triangle index lists. A bare point cloud has no simplices
/// and a geometric graph has no triangles.
///
/// The ambient dimension is the column count of the coordinate matrix and is
/// uniform by construction. Degenerate simplices (repeated vertex index) are
/// rejected when constructing; duplicate simplices, out-of-range indices and
/// missing faces are *not* rejected here; validate() reports them so that a
/// loader can opt into the checks without anything being silently repaired.
///
/// Instances are immutable after construction and safe to share across
/// threads.
class GeometricComplex {
public:
    GeometricComplex() = default;

    /// Vertices are rows of `vertices` (one coordinate vector per row).
    /// Throws std::invalid_argument on degenerate simplices.
    explicit GeometricComplex(Matrix vertices,
                              std::vector<EdgeIndices> edges = {},
                              std::vector<TriangleIndices> triangles = {});

    const Matrix& vertices() const { return vertices_; }
    const std::vector<EdgeIndices>& edges() const { return edges_; }
    const std::vector<TriangleIndices>& triangles() const { return triangles_; }

    int num_vertices() const { return static_cast<int>(vertices_.rows()); }
    int num_edges() const { return static_cast<int>(edges_.size()); }
    int num_triangles() const { return static_cast<int>(triangles_.size()); }
    int ambient_dim() const { return static_cast<int>(vertices_.cols()); }

    bool is_point_cloud() const { return edges_.empty() && triangles_.empty(); }
    bool is_graph() const { return triangles_.empty(); }
    bool empty() const { return vertices_.rows() == 0; }

    /// Same simplices, new coordinates (shape must match).
    GeometricComplex with_vertices(Matrix vertices) const;

private:
    Matrix vertices_;
    std::vector<EdgeIndices> edges_;
    std::vector<TriangleIndices> triangles_;
};

enum class ViolationKind { BadIndex, MissingFace, Duplicate };

struct Violation {
    ViolationKind kind;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// Report-style invariant check: bad indices, duplicate simplices (compared
/// as unordered tuples) and face-closure violations. Empty report iff the
/// complex is a valid simplicial complex.
ValidationReport validate(const GeometricComplex& complex);

/// Center the vertex centroid at the origin, then scale by the reciprocal
/// of the largest vertex norm so every coordinate vector has norm <= 1.
/// Coincident point sets are centered but not scaled. Idempotent.
/// Throws std::invalid_argument on an empty vertex set.
GeometricComplex normalize(const GeometricComplex& complex);

/// Alternating simplex count |V| - |E| + |T|. Assumes a valid complex.
long long euler_characteristic(const GeometricComplex& complex);

enum class ShapeKind {
    Circle,
    TwoCircles,
    SquareCycle,
    FilledTriangle,
    Octahedron,
    UniformBlob,
};

ShapeKind shape_kind_from_string(const std::string& name);
std::string to_string(ShapeKind kind);

/// Synthetic shape request. `num_points` controls the sampled kinds (circle,
/// two-circles, square-cycle, uniform-blob); filled-triangle and octahedron
/// have canonical vertex counts and ignore it. Noise is isotropic Gaussian
/// added before normalization.
struct ShapeSpec {
    ShapeKind kind = ShapeKind::Circle;
    int num_points = 64;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

/// Deterministic for a fixed spec; the result is normalized and satisfies
/// all complex invariants.
GeometricComplex generate(const ShapeSpec& spec);

}  // namespace dect
