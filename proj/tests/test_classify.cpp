#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dect/classify.hpp"
#include "test_support.hpp"

using namespace dect;

namespace {

EctConfig classifier_config(int num_heights = 16, double lambda = 10.0) {
    EctConfig cfg;
    cfg.mode = EctMode::Smooth;
    cfg.lambda = lambda;
    cfg.num_heights = num_heights;
    return cfg;
}

// Small model with explicit dimensions for gradient checks.
ClassifierModel tiny_model(std::uint64_t seed) {
    const EctConfig cfg = classifier_config(8, 4.0);
    DirectionSet dirs = uniform_directions(2, 2, seed);
    dirs.constrained = false;
    Rng rng = Rng::substream(seed, "init");
    return ClassifierModel{std::move(dirs), cfg, MlpParams::init({8, 6, 4}, rng),
                           Pooling::Mean, MlpParams::init({4, 5, 2}, rng)};
}

}  // namespace

TEST_CASE("permuting the direction list leaves logits unchanged") {
    auto model = make_classifier(2, 2, 6, classifier_config(), 1);
    const auto cloud = generate({ShapeKind::TwoCircles, 40, 0.05, 2});
    const Vector base = forward(model, cloud);

    // Rotate the rows of the direction matrix by two slots.
    Matrix rotated = model.directions.directions;
    const int n = model.directions.count();
    for (int d = 0; d < n; ++d)
        rotated.row((d + 2) % n) = model.directions.directions.row(d);
    model.directions.directions = rotated;
    const Vector permuted = forward(model, cloud);
    CHECK((base - permuted).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("a zero-weight head yields zero logits") {
    auto model = make_classifier(2, 3, 4, classifier_config(), 5);
    for (auto& w : model.head.weights) w.setZero();
    for (auto& b : model.head.biases) b.setZero();
    const auto cloud = generate({ShapeKind::Circle, 24, 0.0, 3});
    CHECK(forward(model, cloud).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reordering vertices does not change logits") {
    auto model = make_classifier(2, 2, 5, classifier_config(), 7);
    const auto cloud = generate({ShapeKind::TwoCircles, 30, 0.05, 8});
    const auto perm = testsupport::random_permutation(cloud.num_vertices(), 4);
    const auto shuffled = testsupport::permute_complex(cloud, perm);
    const Vector a = forward(model, cloud);
    const Vector b = forward(model, shuffled);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("batched forward matches per-sample forward on mixed inputs") {
    auto model = make_classifier(2, 2, 4, classifier_config(), 9);
    // A cloud, a graph, and a mesh in one batch, with different sizes.
    const auto cloud = generate({ShapeKind::UniformBlob, 17, 0.0, 1});
    const auto graph = generate({ShapeKind::SquareCycle, 8, 0.0, 2});
    const auto mesh = generate({ShapeKind::FilledTriangle, 3, 0.0, 3});
    const std::vector<const GeometricComplex*> batch = {&cloud, &graph, &mesh};
    const Matrix logits = forward_batch(model, batch);
    REQUIRE(logits.rows() == 3);
    for (int r = 0; r < 3; ++r)
        CHECK((logits.row(r).transpose() - forward(model, *batch[static_cast<std::size_t>(r)]))
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
}

TEST_CASE("end-to-end direction gradients match finite differences") {
    const auto model = tiny_model(3);
    const auto cloud = generate({ShapeKind::TwoCircles, 20, 0.05, 5});
    const int label = 1;

    auto loss_of = [&](const Matrix& dirs) {
        ClassifierModel probe = model;
        probe.directions.directions = dirs;
        const Vector logits = forward(probe, cloud);
        const double max_logit = logits.maxCoeff();
        const double z = (logits.array() - max_logit).exp().sum();
        return -(logits[label] - max_logit - std::log(z));
    };

    const auto [loss, analytic] = sample_loss_direction_gradient(model, cloud, label);
    CHECK(loss == doctest::Approx(loss_of(model.directions.directions)).epsilon(1e-12));

    const double eps = 1e-5;
    Matrix numeric(model.directions.count(), model.directions.dim());
    Matrix dirs = model.directions.directions;
    for (int d = 0; d < numeric.rows(); ++d) {
        for (int c = 0; c < numeric.cols(); ++c) {
            const double saved = dirs(d, c);
            dirs(d, c) = saved + eps;
            const double plus = loss_of(dirs);
            dirs(d, c) = saved - eps;
            const double minus = loss_of(dirs);
            dirs(d, c) = saved;
            numeric(d, c) = (plus - minus) / (2.0 * eps);
        }
    }
    CHECK(testsupport::gradient_rel_error(analytic, numeric) <= 1e-3);
}

TEST_CASE("training separates circles from pairs of circles") {
    const Dataset dataset = make_two_class_dataset(100, 21, 48, 80, 0.05);
    const auto [train_set, test_set] = stratified_split(dataset, 0.8, 21);

    auto model = make_classifier(2, 2, 16, classifier_config(), 21);
    TrainRun run;
    run.seed = 21;
    run.epochs = 30;
    run.batch_size = 16;
    run.lr = 1e-3;
    run.learn_directions = true;
    train(model, train_set, run);

    REQUIRE(!run.metrics.empty());
    CHECK(run.metrics.size() <= 30);
    CHECK(run.metrics.back().val_accuracy >= 0.95);
    CHECK(evaluate(model, test_set) >= 0.9);
}

TEST_CASE("zero learning rate leaves the model unchanged") {
    const Dataset dataset = make_two_class_dataset(10, 31, 24, 32, 0.05);
    auto model = make_classifier(2, 2, 4, classifier_config(8), 31);
    const Matrix dirs_before = model.directions.directions;
    const Matrix head_before = model.head.weights.front();

    TrainRun run;
    run.seed = 31;
    run.epochs = 2;
    run.lr = 0.0;
    train(model, dataset, run);
    CHECK((model.directions.directions.array() == dirs_before.array()).all());
    CHECK((model.head.weights.front().array() == head_before.array()).all());
    // Chance-level accuracy on the balanced set.
    CHECK(evaluate(model, dataset) == doctest::Approx(0.5).epsilon(0.35));
}

TEST_CASE("training is deterministic under a fixed seed") {
    const Dataset dataset = make_two_class_dataset(12, 41, 24, 32, 0.05);
    auto run_once = [&](std::uint64_t seed) {
        auto model = make_classifier(2, 2, 4, classifier_config(8), seed);
        TrainRun run;
        run.seed = seed;
        run.epochs = 3;
        run.batch_size = 4;
        train(model, dataset, run);
        return std::pair{model.directions.directions, run.metrics.back().train_loss};
    };
    const auto [dirs_a, loss_a] = run_once(5);
    const auto [dirs_b, loss_b] = run_once(5);
    CHECK((dirs_a.array() == dirs_b.array()).all());
    CHECK(loss_a == loss_b);
}

TEST_CASE("train argument validation") {
    auto model = make_classifier(2, 2, 4, classifier_config(8), 1);
    TrainRun run;
    Dataset empty;
    CHECK_THROWS_AS(train(model, empty, run), std::invalid_argument);
    Dataset one_class = {{generate({ShapeKind::Circle, 8, 0.0, 0}), 0},
                         {generate({ShapeKind::Circle, 8, 0.0, 1}), 0}};
    CHECK_THROWS_AS(train(model, one_class, run), std::invalid_argument);
    Dataset bad_label = {{generate({ShapeKind::Circle, 8, 0.0, 0}), 0},
                         {generate({ShapeKind::Circle, 8, 0.0, 1}), 7}};
    CHECK_THROWS_AS(train(model, bad_label, run), std::invalid_argument);
}

TEST_CASE("evaluation accuracy and tie handling") {
    auto model = make_classifier(2, 2, 4, classifier_config(8), 3);
    // Constant logits: argmax ties resolve to class 0.
    for (auto& w : model.head.weights) w.setZero();
    for (auto& b : model.head.biases) b.setZero();
    Dataset balanced;
    for (int i = 0; i < 6; ++i) {
        balanced.push_back({generate({ShapeKind::Circle, 12, 0.0, static_cast<std::uint64_t>(i)}), 0});
        balanced.push_back(
            {generate({ShapeKind::TwoCircles, 12, 0.0, static_cast<std::uint64_t>(i)}), 1});
    }
    CHECK(evaluate(model, balanced) == 0.5);
    CHECK_THROWS_AS(evaluate(model, Dataset{}), std::invalid_argument);
    Dataset foreign = {{generate({ShapeKind::Circle, 8, 0.0, 0}), 5}};
    CHECK_THROWS_AS(evaluate(model, foreign), std::invalid_argument);
}

TEST_CASE("checkpoint round trip preserves predictions exactly") {
    auto model = make_classifier(2, 2, 6, classifier_config(), 13);
    const Dataset dataset = make_two_class_dataset(6, 51, 24, 32, 0.05);
    TrainRun run;
    run.seed = 13;
    run.epochs = 2;
    train(model, dataset, run);

    const auto path = std::filesystem::temp_directory_path() / "dect_test_model.ckpt";
    save_model(model, path);
    const ClassifierModel loaded = load_model(path);
    std::remove(path.string().c_str());

    CHECK((loaded.directions.directions.array() == model.directions.directions.array()).all());
    CHECK(loaded.directions.constrained == model.directions.constrained);
    CHECK(loaded.pool == model.pool);
    for (const auto& sample : dataset) {
        const Vector a = forward(model, sample.complex);
        const Vector b = forward(loaded, sample.complex);
        CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("checkpoint loading rejects foreign and truncated files") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto bad = dir / "dect_not_a_model.ckpt";
    {
        std::ofstream os(bad, std::ios::binary);
        os << "definitely not a checkpoint";
    }
    CHECK_THROWS_AS(load_model(bad), std::runtime_error);
    std::remove(bad.string().c_str());

    auto model = make_classifier(2, 2, 3, classifier_config(8), 2);
    const auto full = dir / "dect_full_model.ckpt";
    save_model(model, full);
    const auto truncated = dir / "dect_cut_model.ckpt";
    {
        std::ifstream is(full, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(is)),
                          std::istreambuf_iterator<char>());
        std::ofstream os(truncated, std::ios::binary);
        os << bytes.substr(0, bytes.size() / 2);
    }
    CHECK_THROWS_AS(load_model(truncated), std::runtime_error);
    std::remove(full.string().c_str());
    std::remove(truncated.string().c_str());
}

TEST_CASE("stratified split keeps class balance") {
    const Dataset dataset = make_two_class_dataset(25, 61, 24, 32, 0.05);
    const auto [a, b] = stratified_split(dataset, 0.8, 61);
    CHECK(a.size() == 40);
    CHECK(b.size() == 10);
    int a_ones = 0;
    for (const auto& s : a) a_ones += s.label;
    CHECK(a_ones == 20);
}
