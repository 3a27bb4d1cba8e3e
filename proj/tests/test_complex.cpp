#include <doctest.h>

#include <set>

#include "dect/complex.hpp"
#include "test_support.hpp"

using namespace dect;

namespace {

Matrix points2d(std::initializer_list<std::pair<double, double>> pts) {
    Matrix m(static_cast<Eigen::Index>(pts.size()), 2);
    Eigen::Index r = 0;
    for (const auto& [x, y] : pts) {
        m(r, 0) = x;
        m(r, 1) = y;
        ++r;
    }
    return m;
}

}  // namespace

TEST_CASE("construction rejects degenerate simplices") {
    Matrix pts = points2d({{0, 0}, {1, 0}, {0, 1}});
    CHECK_THROWS_AS(GeometricComplex(pts, {{1, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(GeometricComplex(pts, {}, {{0, 1, 1}}), std::invalid_argument);
}

TEST_CASE("validate reports a missing face") {
    Matrix pts = points2d({{0, 0}, {1, 0}, {0, 1}});
    GeometricComplex complex(pts, {{0, 1}, {1, 2}}, {{0, 1, 2}});
    const auto report = validate(complex);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].kind == ViolationKind::MissingFace);
    CHECK(report.violations[0].detail.find("missing face {0, 2}") != std::string::npos);
}

TEST_CASE("validate accepts the empty complex and bare clouds") {
    CHECK(validate(GeometricComplex{}).ok());
    Matrix pts(5, 3);
    pts.setRandom();
    CHECK(validate(GeometricComplex(pts)).ok());
}

TEST_CASE("validate reports duplicates and bad indices") {
    Matrix pts = points2d({{0, 0}, {1, 0}, {0, 1}});
    // {1, 0} duplicates {0, 1} as an unordered pair.
    GeometricComplex dup(pts, {{0, 1}, {1, 0}});
    const auto dup_report = validate(dup);
    REQUIRE(dup_report.violations.size() == 1);
    CHECK(dup_report.violations[0].kind == ViolationKind::Duplicate);

    GeometricComplex bad(pts, {{0, 9}});
    const auto bad_report = validate(bad);
    REQUIRE(bad_report.violations.size() == 1);
    CHECK(bad_report.violations[0].kind == ViolationKind::BadIndex);
}

TEST_CASE("normalize centers and rescales") {
    GeometricComplex two(points2d({{2, 0}, {4, 0}}));
    const auto out = normalize(two);
    CHECK(out.vertices()(0, 0) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(out.vertices()(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(out.vertices().col(1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("normalize sends a single vertex to the origin") {
    GeometricComplex one(points2d({{7, 3}}));
    const auto out = normalize(one);
    CHECK(out.vertices().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("normalize is idempotent") {
    GeometricComplex c(points2d({{1, 0}, {-1, 0}, {0, 0.25}}));
    const auto once = normalize(c);
    const auto twice = normalize(once);
    CHECK((once.vertices() - twice.vertices()).cwiseAbs().maxCoeff() < 1e-12);

    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        const auto complex = testsupport::random_complex(seed, 25, 30, 10);
        const auto again = normalize(complex);
        CHECK((complex.vertices() - again.vertices()).cwiseAbs().maxCoeff() < 1e-12);
        // Invariants of the normalized form.
        CHECK(complex.vertices().colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
        CHECK(complex.vertices().rowwise().norm().maxCoeff() <= 1.0);
    }
}

TEST_CASE("normalize rejects an empty complex") {
    CHECK_THROWS_AS(normalize(GeometricComplex{}), std::invalid_argument);
}

TEST_CASE("noiseless circle lands on the unit circle") {
    const auto circle = generate({ShapeKind::Circle, 64, 0.0, 0});
    REQUIRE(circle.num_vertices() == 64);
    CHECK(circle.is_point_cloud());
    for (int v = 0; v < 64; ++v)
        CHECK(circle.vertices().row(v).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("square cycle generator") {
    const auto square = generate({ShapeKind::SquareCycle, 4, 0.0, 0});
    CHECK(square.num_vertices() == 4);
    CHECK(square.num_edges() == 4);
    CHECK(square.num_triangles() == 0);
    CHECK(euler_characteristic(square) == 0);
    CHECK(validate(square).ok());

    // A subdivided cycle is still a cycle.
    const auto fine = generate({ShapeKind::SquareCycle, 14, 0.0, 0});
    CHECK(fine.num_vertices() == 14);
    CHECK(fine.num_edges() == 14);
    CHECK(euler_characteristic(fine) == 0);
    CHECK(validate(fine).ok());

    CHECK_THROWS_AS(generate({ShapeKind::SquareCycle, 2, 0.0, 0}), std::invalid_argument);
}

TEST_CASE("filled triangle and octahedron generators") {
    const auto tri = generate({ShapeKind::FilledTriangle, 3, 0.0, 0});
    CHECK(tri.num_vertices() == 3);
    CHECK(tri.num_edges() == 3);
    CHECK(tri.num_triangles() == 1);
    CHECK(euler_characteristic(tri) == 1);
    CHECK(validate(tri).ok());

    const auto oct = generate({ShapeKind::Octahedron, 6, 0.0, 0});
    CHECK(oct.num_vertices() == 6);
    CHECK(oct.num_edges() == 12);
    CHECK(oct.num_triangles() == 8);
    CHECK(oct.ambient_dim() == 3);
    CHECK(euler_characteristic(oct) == 2);
    CHECK(validate(oct).ok());
}

TEST_CASE("two circles and blob generators are valid clouds") {
    const auto two = generate({ShapeKind::TwoCircles, 33, 0.05, 9});
    CHECK(two.num_vertices() == 33);
    CHECK(two.is_point_cloud());
    CHECK(validate(two).ok());

    const auto blob = generate({ShapeKind::UniformBlob, 20, 0.0, 9});
    CHECK(blob.num_vertices() == 20);
    CHECK(validate(blob).ok());
}

TEST_CASE("generators are reproducible bit for bit") {
    const ShapeSpec spec{ShapeKind::TwoCircles, 40, 0.1, 123};
    const auto a = generate(spec);
    const auto b = generate(spec);
    CHECK((a.vertices().array() == b.vertices().array()).all());
    CHECK(a.edges() == b.edges());
    CHECK(a.triangles() == b.triangles());

    ShapeSpec other = spec;
    other.seed = 124;
    CHECK((generate(other).vertices().array() != a.vertices().array()).any());
}

TEST_CASE("generator argument checks") {
    CHECK_THROWS_AS(generate({ShapeKind::Circle, 0, 0.0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(generate({ShapeKind::Circle, 10, -0.5, 0}), std::invalid_argument);
    CHECK_THROWS_AS(shape_kind_from_string("dodecahedron"), std::invalid_argument);
}

TEST_CASE("euler characteristic is invariant under relabeling") {
    for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
        const auto complex = testsupport::random_complex(seed);
        const auto perm = testsupport::random_permutation(complex.num_vertices(), seed + 100);
        const auto shuffled = testsupport::permute_complex(complex, perm, seed + 200);
        CHECK(euler_characteristic(shuffled) == euler_characteristic(complex));
        CHECK(validate(shuffled).ok());
    }
}

TEST_CASE("euler characteristic adds over disjoint unions") {
    const auto a = testsupport::random_complex(21);
    const auto b = testsupport::random_complex(22);
    const auto both = testsupport::disjoint_union(a, b);
    CHECK(euler_characteristic(both) == euler_characteristic(a) + euler_characteristic(b));
}
