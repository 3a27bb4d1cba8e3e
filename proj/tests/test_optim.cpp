#include <doctest.h>

#include <cmath>

#include "dect/optim.hpp"
#include "test_support.hpp"

using namespace dect;

namespace {

EctConfig smooth_config(double lambda, int num_heights,
                        EctNormalization norm = EctNormalization::None) {
    EctConfig cfg;
    cfg.mode = EctMode::Smooth;
    cfg.lambda = lambda;
    cfg.num_heights = num_heights;
    cfg.normalization = norm;
    return cfg;
}

}  // namespace

TEST_CASE("adam leaves parameters alone under zero gradients") {
    Matrix params = Matrix::Constant(2, 3, 1.5);
    const Matrix before = params;
    AdamState state = AdamState::for_params(params);
    adam_step(params, Matrix::Zero(2, 3), state);
    CHECK((params.array() == before.array()).all());
    CHECK(state.t == 1);
}

TEST_CASE("first adam step has the bias-corrected magnitude") {
    Matrix params = Matrix::Zero(1, 1);
    AdamState state = AdamState::for_params(params, 0.001);
    adam_step(params, Matrix::Constant(1, 1, 1.0), state);
    // Bias correction makes both moment estimates exactly 1 at t = 1, so the
    // step is lr / (1 + eps).
    const double expected = -0.001 / (1.0 + 1e-8);
    CHECK(params(0, 0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(params(0, 0) == doctest::Approx(-0.001).epsilon(1e-6));
}

TEST_CASE("adam is deterministic") {
    Matrix a = Matrix::Constant(2, 2, 0.3);
    Matrix b = a;
    AdamState sa = AdamState::for_params(a, 0.01);
    AdamState sb = AdamState::for_params(b, 0.01);
    Matrix grad(2, 2);
    grad << 1.0, -2.0, 0.5, 3.0;
    for (int i = 0; i < 5; ++i) {
        adam_step(a, grad, sa);
        adam_step(b, grad, sb);
    }
    CHECK((a.array() == b.array()).all());
}

TEST_CASE("adam rejects non-finite gradients and bad shapes") {
    Matrix params = Matrix::Zero(2, 2);
    AdamState state = AdamState::for_params(params);
    Matrix nan_grad = Matrix::Zero(2, 2);
    nan_grad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(adam_step(params, nan_grad, state), std::invalid_argument);
    CHECK_THROWS_AS(adam_step(params, Matrix::Zero(2, 3), state), std::invalid_argument);
}

TEST_CASE("mse loss and upstream") {
    const auto cloud = generate({ShapeKind::Circle, 8, 0.0, 0});
    const auto dirs = uniform_directions(2, 3);
    const auto cfg = smooth_config(5.0, 6);
    const auto a = ect_smooth(cloud, dirs, cfg);

    SUBCASE("identical grids") {
        const auto [loss, upstream] = mse_loss(a, a);
        CHECK(loss == 0.0);
        CHECK(upstream.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("hand-sized example") {
        EctGrid x = a, y = a;
        x.values = Matrix::Constant(1, 1, 3.0);
        y.values = Matrix::Constant(1, 1, 1.0);
        x.heights = y.heights = Vector::Constant(1, 0.0);
        const auto [loss, upstream] = mse_loss(x, y);
        CHECK(loss == 4.0);
        CHECK(upstream(0, 0) == 4.0);
        const auto [loss_swapped, upstream_swapped] = mse_loss(y, x);
        CHECK(loss_swapped == 4.0);
        CHECK(upstream_swapped(0, 0) == -4.0);
    }
    SUBCASE("mismatches are rejected") {
        const auto other = ect_smooth(cloud, uniform_directions(2, 4), cfg);
        CHECK_THROWS_AS(mse_loss(a, other), std::invalid_argument);
        auto narrower = cfg;
        narrower.h_min = -0.5;
        const auto shifted = ect_smooth(cloud, dirs, narrower);
        CHECK_THROWS_AS(mse_loss(a, shifted), std::invalid_argument);
        auto normalized = cfg;
        normalized.normalization = EctNormalization::PerVertexCount;
        const auto scaled = ect_smooth(cloud, dirs, normalized);
        CHECK_THROWS_AS(mse_loss(a, scaled), std::invalid_argument);
    }
}

TEST_CASE("learning directions from the optimum stops immediately") {
    const auto cloud = generate({ShapeKind::Circle, 32, 0.05, 3});
    const auto dirs = uniform_directions(2, 6);
    auto cfg = smooth_config(10.0, 16, EctNormalization::PerVertexCount);
    const auto target = ect_smooth(cloud, dirs, cfg);

    FitOptions options;
    options.steps = 50;
    const auto report = learn_directions(cloud, target, dirs, cfg, options);
    CHECK(report.converged);
    CHECK(report.steps_run == 1);
    CHECK(report.loss_trace.size() == 1);
    CHECK(report.loss_trace[0] < 1e-12);
    CHECK((report.final_directions - dirs.directions).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("direction learning reduces the loss") {
    const auto cloud = generate({ShapeKind::Circle, 48, 0.05, 7});
    const int num_dirs = 4;
    auto cfg = smooth_config(10.0, 16, EctNormalization::PerVertexCount);
    const auto target = ect_smooth(cloud, uniform_directions(2, num_dirs), cfg);

    Rng rng(17);
    Matrix init(num_dirs, 2);
    for (int d = 0; d < num_dirs; ++d) {
        init(d, 0) = std::cos(0.4) + 0.01 * rng.gaussian();
        init(d, 1) = std::sin(0.4) + 0.01 * rng.gaussian();
    }
    FitOptions options;
    options.steps = 600;
    options.lr = 0.01;
    options.tolerance = 1e-6;
    const auto report =
        learn_directions(cloud, target, DirectionSet(init, false), cfg, options);
    CHECK(report.loss_trace.back() < report.loss_trace.front() * 0.1);
    CHECK(report.steps_run == static_cast<int>(report.loss_trace.size()));
}

TEST_CASE("constrained direction learning keeps unit norms") {
    const auto cloud = generate({ShapeKind::TwoCircles, 40, 0.05, 9});
    auto cfg = smooth_config(10.0, 12, EctNormalization::PerVertexCount);
    const auto target = ect_smooth(cloud, uniform_directions(2, 5), cfg);

    Rng rng(3);
    Matrix init(5, 2);
    for (int d = 0; d < 5; ++d) {
        const double a = rng.uniform(0.0, 6.28);
        init(d, 0) = std::cos(a);
        init(d, 1) = std::sin(a);
    }
    FitOptions options;
    options.steps = 40;
    options.lr = 0.01;
    options.tolerance = 0.0;
    const auto report =
        learn_directions(cloud, target, DirectionSet(init, true), cfg, options);
    CHECK(report.max_unit_norm_deviation < 1e-9);
    for (int d = 0; d < 5; ++d)
        CHECK(report.final_directions.row(d).norm() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("loss trend is monotone under a moving average") {
    // The direction-learning demo: noisy circle, clustered random init.
    const auto circle = generate({ShapeKind::Circle, 64, 0.05, 41});
    auto cfg = smooth_config(10.0, 16, EctNormalization::PerVertexCount);
    const auto target = ect_smooth(circle, uniform_directions(2, 8), cfg);
    Rng rng(140);
    Matrix init(8, 2);
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (int d = 0; d < 8; ++d) {
        init(d, 0) = std::cos(angle) + 0.01 * rng.gaussian();
        init(d, 1) = std::sin(angle) + 0.01 * rng.gaussian();
    }
    FitOptions options;
    options.steps = 1000;
    options.lr = 0.001;
    options.tolerance = 0.0;
    const auto report = learn_directions(circle, target, DirectionSet(init, false), cfg, options);

    const int window = 100;
    const auto& trace = report.loss_trace;
    REQUIRE(static_cast<int>(trace.size()) > window);
    auto moving_average = [&](std::size_t start) {
        double sum = 0.0;
        for (int k = 0; k < window; ++k) sum += trace[start + static_cast<std::size_t>(k)];
        return sum / window;
    };
    double previous = moving_average(0);
    for (std::size_t start = 1; start + window <= trace.size(); ++start) {
        const double current = moving_average(start);
        CHECK(current <= previous + 1e-12);
        previous = current;
    }
}

TEST_CASE("identical configurations give identical traces") {
    const auto cloud = generate({ShapeKind::Circle, 24, 0.05, 11});
    auto cfg = smooth_config(10.0, 10, EctNormalization::PerVertexCount);
    const auto target = ect_smooth(cloud, uniform_directions(2, 3), cfg);
    const auto init = DirectionSet(uniform_directions(2, 3, 5).directions, false);
    FitOptions options;
    options.steps = 25;
    const auto a = learn_directions(cloud, target, init, cfg, options);
    const auto b = learn_directions(cloud, target, init, cfg, options);
    REQUIRE(a.loss_trace.size() == b.loss_trace.size());
    for (std::size_t i = 0; i < a.loss_trace.size(); ++i)
        CHECK(a.loss_trace[i] == b.loss_trace[i]);
}

TEST_CASE("point-cloud optimization preconditions") {
    const auto square = generate({ShapeKind::SquareCycle, 4, 0.0, 0});
    const auto cloud = generate({ShapeKind::UniformBlob, 16, 0.0, 1});
    const auto dirs = uniform_directions(2, 4);
    auto cfg = smooth_config(10.0, 8, EctNormalization::PerVertexCount);
    const auto target = ect_smooth(cloud, dirs, cfg);
    FitOptions options;
    options.steps = 1;

    CHECK_THROWS_AS(optimize_pointcloud(square, target, dirs, cfg, options),
                    std::invalid_argument);
    auto raw_cfg = cfg;
    raw_cfg.normalization = EctNormalization::None;
    const auto raw_target = ect_smooth(cloud, dirs, raw_cfg);
    CHECK_THROWS_AS(optimize_pointcloud(cloud, raw_target, dirs, raw_cfg, options),
                    std::invalid_argument);
}

TEST_CASE("optimizing a cloud onto its own transform is a no-op") {
    const auto cloud = generate({ShapeKind::TwoCircles, 24, 0.0, 13});
    const auto dirs = uniform_directions(2, 6);
    auto cfg = smooth_config(15.0, 12, EctNormalization::PerVertexCount);
    const auto target = ect_smooth(cloud, dirs, cfg);
    FitOptions options;
    options.steps = 10;
    const auto report = optimize_pointcloud(cloud, target, dirs, cfg, options);
    CHECK(report.converged);
    CHECK(report.loss_trace[0] < 1e-10);
    CHECK((report.final_coordinates - cloud.vertices()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a zero step budget reports the initial loss only") {
    const auto cloud = generate({ShapeKind::UniformBlob, 16, 0.0, 2});
    const auto target_cloud = generate({ShapeKind::Circle, 32, 0.0, 2});
    const auto dirs = uniform_directions(2, 4);
    auto cfg = smooth_config(10.0, 8, EctNormalization::PerVertexCount);
    const auto target = ect_smooth(target_cloud, dirs, cfg);
    FitOptions options;
    options.steps = 0;
    const auto report = optimize_pointcloud(cloud, target, dirs, cfg, options);
    CHECK(report.loss_trace.size() == 1);
    CHECK_FALSE(report.converged);
    CHECK((report.final_coordinates - cloud.vertices()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("point-cloud optimization reduces the loss") {
    const auto source = generate({ShapeKind::UniformBlob, 24, 0.0, 4});
    const auto target_cloud = generate({ShapeKind::Circle, 48, 0.0, 4});
    const auto dirs = uniform_directions(2, 8);
    auto cfg = smooth_config(20.0, 16, EctNormalization::PerVertexCount);
    const auto target = ect_smooth(target_cloud, dirs, cfg);
    FitOptions options;
    options.steps = 200;
    options.lr = 0.01;
    options.tolerance = 0.0;
    const auto report = optimize_pointcloud(source, target, dirs, cfg, options);
    CHECK(report.loss_trace.back() < report.loss_trace.front() * 0.2);
}

TEST_CASE("joint optimization updates both parameter groups") {
    const auto source = generate({ShapeKind::UniformBlob, 12, 0.0, 6});
    const auto target_cloud = generate({ShapeKind::Circle, 24, 0.0, 6});
    const auto dirs = uniform_directions(2, 4);
    auto cfg = smooth_config(10.0, 8, EctNormalization::PerVertexCount);
    const auto target = ect_smooth(target_cloud, dirs, cfg);
    FitOptions options;
    options.steps = 5;
    options.tolerance = 0.0;
    options.joint = true;
    const auto report = optimize_pointcloud(source, target, dirs, cfg, options);
    CHECK((report.final_coordinates - source.vertices()).cwiseAbs().maxCoeff() > 0.0);
    CHECK((report.final_directions - dirs.directions).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("cosine decay shrinks the late steps") {
    const auto source = generate({ShapeKind::UniformBlob, 12, 0.0, 6});
    const auto target_cloud = generate({ShapeKind::Circle, 24, 0.0, 6});
    const auto dirs = uniform_directions(2, 4);
    auto cfg = smooth_config(10.0, 8, EctNormalization::PerVertexCount);
    const auto target = ect_smooth(target_cloud, dirs, cfg);
    FitOptions options;
    options.steps = 50;
    options.tolerance = 0.0;
    options.cosine_decay = true;
    const auto decayed = optimize_pointcloud(source, target, dirs, cfg, options);
    options.cosine_decay = false;
    const auto constant = optimize_pointcloud(source, target, dirs, cfg, options);
    // Different schedules, different trajectories.
    CHECK((decayed.final_coordinates - constant.final_coordinates).cwiseAbs().maxCoeff() >
          0.0);
}

TEST_CASE("duplicating a cloud leaves the per-vertex hard transform unchanged") {
    const auto cloud = generate({ShapeKind::TwoCircles, 20, 0.05, 15});
    Matrix doubled(cloud.num_vertices() * 2, 2);
    doubled.topRows(cloud.num_vertices()) = cloud.vertices();
    doubled.bottomRows(cloud.num_vertices()) = cloud.vertices();
    const GeometricComplex twice(doubled);

    const auto dirs = uniform_directions(2, 6);
    EctConfig cfg;
    cfg.mode = EctMode::Hard;
    cfg.num_heights = 16;
    cfg.normalization = EctNormalization::PerVertexCount;
    const auto a = ect_hard(cloud, dirs, cfg);
    const auto b = ect_hard(twice, dirs, cfg);
    CHECK((a.values.array() == b.values.array()).all());
    const auto [loss, upstream] = mse_loss(a, b);
    CHECK(loss == 0.0);
}
