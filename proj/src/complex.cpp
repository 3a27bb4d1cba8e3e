#include "dect/complex.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dect/rng.hpp"

namespace dect {

namespace {

EdgeIndices canonical(EdgeIndices e) {
    if (e[0] > e[1]) std::swap(e[0], e[1]);
    return e;
}

TriangleIndices canonical(TriangleIndices t) {
    std::sort(t.begin(), t.end());
    return t;
}

std::string simplex_string(std::initializer_list<int> indices) {
    std::ostringstream os;
    os << "{";
    bool first = true;
    for (int i : indices) {
        if (!first) os << ", ";
        os << i;
        first = false;
    }
    os << "}";
    return os.str();
}

}  // namespace

GeometricComplex::GeometricComplex(Matrix vertices, std::vector<EdgeIndices> edges,
                                   std::vector<TriangleIndices> triangles)
    : vertices_(std::move(vertices)), edges_(std::move(edges)), triangles_(std::move(triangles)) {
    if (vertices_.rows() > 0 && vertices_.cols() < 1)
        throw std::invalid_argument("vertices need an ambient dimension of at least 1");
    for (auto& e : edges_) {
        if (e[0] == e[1])
            throw std::invalid_argument("degenerate edge " + simplex_string({e[0], e[1]}));
        e = canonical(e);
    }
    for (auto& t : triangles_) {
        if (t[0] == t[1] || t[0] == t[2] || t[1] == t[2])
            throw std::invalid_argument("degenerate triangle " +
                                        simplex_string({t[0], t[1], t[2]}));
        t = canonical(t);
    }
}

GeometricComplex GeometricComplex::with_vertices(Matrix vertices) const {
    if (vertices.rows() != vertices_.rows() || vertices.cols() != vertices_.cols())
        throw std::invalid_argument("replacement coordinates have a different shape");
    GeometricComplex out;
    out.vertices_ = std::move(vertices);
    out.edges_ = edges_;
    out.triangles_ = triangles_;
    return out;
}

ValidationReport validate(const GeometricComplex& complex) {
    ValidationReport report;
    const int n = complex.num_vertices();
    auto in_range = [n](int i) { return i >= 0 && i < n; };

    for (const auto& e : complex.edges()) {
        if (!in_range(e[0]) || !in_range(e[1]))
            report.violations.push_back(
                {ViolationKind::BadIndex,
                 "edge " + simplex_string({e[0], e[1]}) + ": vertex index out of range"});
    }
    for (const auto& t : complex.triangles()) {
        if (!in_range(t[0]) || !in_range(t[1]) || !in_range(t[2]))
            report.violations.push_back(
                {ViolationKind::BadIndex,
                 "triangle " + simplex_string({t[0], t[1], t[2]}) + ": vertex index out of range"});
    }

    std::set<EdgeIndices> edge_set;
    for (const auto& e : complex.edges()) {
        if (!edge_set.insert(e).second)
            report.violations.push_back(
                {ViolationKind::Duplicate, "duplicate edge " + simplex_string({e[0], e[1]})});
    }
    std::set<TriangleIndices> triangle_set;
    for (const auto& t : complex.triangles()) {
        if (!triangle_set.insert(t).second)
            report.violations.push_back(
                {ViolationKind::Duplicate,
                 "duplicate triangle " + simplex_string({t[0], t[1], t[2]})});
    }

    // Face closure: every boundary edge of a stored triangle must itself be
    // stored. Simplices are canonicalized, so set lookup suffices.
    for (const auto& t : complex.triangles()) {
        const EdgeIndices faces[3] = {{t[0], t[1]}, {t[1], t[2]}, {t[0], t[2]}};
        for (const auto& f : faces) {
            if (edge_set.find(f) == edge_set.end())
                report.violations.push_back(
                    {ViolationKind::MissingFace,
                     "missing face " + simplex_string({f[0], f[1]}) + " of triangle " +
                         simplex_string({t[0], t[1], t[2]})});
        }
    }
    return report;
}

GeometricComplex normalize(const GeometricComplex& complex) {
    if (complex.empty()) throw std::invalid_argument("empty vertex set");
    Matrix coords = complex.vertices();
    const Eigen::RowVectorXd centroid = coords.colwise().mean();
    coords.rowwise() -= centroid;

    const double max_norm = coords.rowwise().norm().maxCoeff();
    // Coincident points collapse to the origin; nothing to scale then.
    if (max_norm > 0.0) {
        coords /= max_norm;
        // Rounding guard so the max norm <= 1 invariant holds exactly.
        for (int pass = 0; pass < 3; ++pass) {
            const double m = coords.rowwise().norm().maxCoeff();
            if (m <= 1.0) break;
            coords /= m;
        }
    }
    return complex.with_vertices(std::move(coords));
}

long long euler_characteristic(const GeometricComplex& complex) {
    return static_cast<long long>(complex.num_vertices()) - complex.num_edges() +
           complex.num_triangles();
}

ShapeKind shape_kind_from_string(const std::string& name) {
    if (name == "circle") return ShapeKind::Circle;
    if (name == "two-circles") return ShapeKind::TwoCircles;
    if (name == "square-cycle") return ShapeKind::SquareCycle;
    if (name == "filled-triangle") return ShapeKind::FilledTriangle;
    if (name == "octahedron") return ShapeKind::Octahedron;
    if (name == "uniform-blob") return ShapeKind::UniformBlob;
    throw std::invalid_argument("unknown shape kind '" + name + "'");
}

std::string to_string(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::Circle: return "circle";
        case ShapeKind::TwoCircles: return "two-circles";
        case ShapeKind::SquareCycle: return "square-cycle";
        case ShapeKind::FilledTriangle: return "filled-triangle";
        case ShapeKind::Octahedron: return "octahedron";
        case ShapeKind::UniformBlob: return "uniform-blob";
    }
    throw std::invalid_argument("unknown shape kind");
}

namespace {

constexpr double kPi = std::numbers::pi;

Matrix circle_points(int count, double cx, double cy, double radius) {
    Matrix pts(count, 2);
    for (int i = 0; i < count; ++i) {
        const double a = 2.0 * kPi * i / count;
        pts(i, 0) = cx + radius * std::cos(a);
        pts(i, 1) = cy + radius * std::sin(a);
    }
    return pts;
}

GeometricComplex make_circle(const ShapeSpec& spec) {
    return GeometricComplex(circle_points(spec.num_points, 0.0, 0.0, 1.0));
}

GeometricComplex make_two_circles(const ShapeSpec& spec) {
    const int first = (spec.num_points + 1) / 2;
    const int second = spec.num_points - first;
    Matrix pts(spec.num_points, 2);
    pts.topRows(first) = circle_points(first, -0.5, 0.0, 0.5);
    if (second > 0) pts.bottomRows(second) = circle_points(second, 0.5, 0.0, 0.5);
    return GeometricComplex(pts);
}

// Cycle along the diamond with corners on the coordinate axes; num_points
// divisible by 4 hits the corners exactly.
GeometricComplex make_square_cycle(const ShapeSpec& spec) {
    const int m = spec.num_points;
    if (m < 4) throw std::invalid_argument("square-cycle needs at least 4 points");
    const Eigen::Vector2d corners[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    Matrix pts(m, 2);
    for (int i = 0; i < m; ++i) {
        const double pos = 4.0 * i / m;  // arc-length position, one unit per side
        const int side = static_cast<int>(pos) % 4;
        const double frac = pos - static_cast<int>(pos);
        pts.row(i) = (1.0 - frac) * corners[side] + frac * corners[(side + 1) % 4];
    }
    std::vector<EdgeIndices> edges;
    edges.reserve(m);
    for (int i = 0; i < m; ++i) edges.push_back({i, (i + 1) % m});
    return GeometricComplex(pts, std::move(edges));
}

GeometricComplex make_filled_triangle() {
    Matrix pts(3, 2);
    const double angles[3] = {kPi / 2, kPi / 2 + 2 * kPi / 3, kPi / 2 + 4 * kPi / 3};
    for (int i = 0; i < 3; ++i) {
        pts(i, 0) = std::cos(angles[i]);
        pts(i, 1) = std::sin(angles[i]);
    }
    return GeometricComplex(pts, {{0, 1}, {1, 2}, {0, 2}}, {{0, 1, 2}});
}

GeometricComplex make_octahedron() {
    Matrix pts(6, 3);
    pts << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1;
    // Faces pair one vertex of each +/- axis; antipodal pairs (0,1), (2,3),
    // (4,5) never share a simplex.
    std::vector<TriangleIndices> tris;
    for (int x : {0, 1})
        for (int y : {2, 3})
            for (int z : {4, 5}) tris.push_back({x, y, z});
    std::set<EdgeIndices> edge_set;
    for (const auto& t : tris) {
        edge_set.insert({std::min(t[0], t[1]), std::max(t[0], t[1])});
        edge_set.insert({std::min(t[1], t[2]), std::max(t[1], t[2])});
        edge_set.insert({std::min(t[0], t[2]), std::max(t[0], t[2])});
    }
    std::vector<EdgeIndices> edges(edge_set.begin(), edge_set.end());
    return GeometricComplex(pts, std::move(edges), std::move(tris));
}

GeometricComplex make_uniform_blob(const ShapeSpec& spec, Rng& rng) {
    Matrix pts(spec.num_points, 2);
    for (int i = 0; i < spec.num_points; ++i) {
        pts(i, 0) = rng.uniform(-1.0, 1.0);
        pts(i, 1) = rng.uniform(-1.0, 1.0);
    }
    return GeometricComplex(pts);
}

}  // namespace

GeometricComplex generate(const ShapeSpec& spec) {
    if (spec.num_points < 1) throw std::invalid_argument("num_points must be positive");
    if (spec.noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be nonnegative");

    Rng rng = Rng::substream(spec.seed, "shape");
    GeometricComplex complex;
    switch (spec.kind) {
        case ShapeKind::Circle: complex = make_circle(spec); break;
        case ShapeKind::TwoCircles: complex = make_two_circles(spec); break;
        case ShapeKind::SquareCycle: complex = make_square_cycle(spec); break;
        case ShapeKind::FilledTriangle: complex = make_filled_triangle(); break;
        case ShapeKind::Octahedron: complex = make_octahedron(); break;
        case ShapeKind::UniformBlob: complex = make_uniform_blob(spec, rng); break;
    }

    if (spec.noise_sigma > 0.0) {
        Matrix coords = complex.vertices();
        for (Eigen::Index r = 0; r < coords.rows(); ++r)
            for (Eigen::Index c = 0; c < coords.cols(); ++c)
                coords(r, c) += rng.gaussian(0.0, spec.noise_sigma);
        complex = complex.with_vertices(std::move(coords));
    }
    return normalize(complex);
}

}  // namespace dect
