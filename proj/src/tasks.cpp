#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "dect/io.hpp"
#include "dect/rng.hpp"

namespace dect {

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

struct RunLog {
    std::vector<std::pair<std::string, std::string>> extras;
    std::vector<std::pair<std::string, double>> timings;

    void note(const std::string& key, const std::string& value) { extras.push_back({key, value}); }
    void note(const std::string& key, double value) { extras.push_back({key, fmt(value)}); }
};

class PhaseTimer {
public:
    PhaseTimer(RunLog& log, std::string name)
        : log_(log), name_(std::move(name)), start_(Clock::now()) {}
    ~PhaseTimer() { log_.timings.push_back({name_, ms_between(start_, Clock::now())}); }

private:
    RunLog& log_;
    std::string name_;
    Clock::time_point start_;
};

void write(const ExperimentConfig& config, const std::string& name, const std::string& text) {
    atomic_write_text(std::filesystem::path(config.out) / name, text);
}

void write_manifest(const ExperimentConfig& config, const RunLog& log) {
    std::ostringstream os;
    os << "# run manifest; this file is itself a loadable config\n";
    os << serialize_config(config);
    for (const auto& [key, value] : log.extras) os << "# " << key << " = " << value << "\n";
    for (const auto& [name, ms] : log.timings)
        os << "# timing." << name << "_ms = " << fmt(ms) << "\n";
    write(config, "manifest.txt", os.str());
}

GeometricComplex obtain_complex(const ExperimentConfig& config) {
    if (!config.input.empty())
        return load_complex(config.input, complex_format_from_string(config.format),
                            config.normalize_coords);
    ShapeSpec spec;
    spec.kind = shape_kind_from_string(config.shape);
    spec.num_points = config.points;
    spec.noise_sigma = config.noise;
    spec.seed = config.seed;
    return generate(spec);
}

EctMode mode_from_string(const std::string& name) {
    if (name == "hard") return EctMode::Hard;
    if (name == "smooth") return EctMode::Smooth;
    throw std::invalid_argument("unknown mode '" + name + "' (hard|smooth)");
}

EctConfig ect_config_from(const ExperimentConfig& config, EctMode default_mode) {
    EctConfig cfg;
    cfg.lambda = config.lambda;
    cfg.num_heights = config.heights;
    cfg.h_min = config.h_min;
    cfg.h_max = config.h_max;
    cfg.normalization = normalization_from_string(config.normalize);
    cfg.mode = config.mode.empty() ? default_mode : mode_from_string(config.mode);
    cfg.check();
    return cfg;
}

DirectionSet make_direction_set(const ExperimentConfig& config, int dim) {
    DirectionSet dirs = uniform_directions(dim, config.directions, config.seed);
    dirs.constrained = config.constrained;
    return dirs;
}

// All copies of one random unit direction, each nudged by a little noise.
DirectionSet clustered_init_directions(int dim, int count, std::uint64_t seed,
                                       bool constrained) {
    Rng rng = Rng::substream(seed, "init-directions");
    Eigen::RowVectorXd base(dim);
    double norm = 0.0;
    do {
        for (int c = 0; c < dim; ++c) base[c] = rng.gaussian();
        norm = base.norm();
    } while (norm < 1e-12);
    base /= norm;

    Matrix dirs(count, dim);
    for (int d = 0; d < count; ++d)
        for (int c = 0; c < dim; ++c) dirs(d, c) = base[c] + 0.01 * rng.gaussian();
    if (constrained)
        for (int d = 0; d < count; ++d) dirs.row(d) /= dirs.row(d).norm();
    return DirectionSet(std::move(dirs), constrained);
}

double pearson(const Matrix& a, const Matrix& b) {
    const double mean_a = a.mean();
    const double mean_b = b.mean();
    const Matrix da = a.array() - mean_a;
    const Matrix db = b.array() - mean_b;
    const double denom = da.norm() * db.norm();
    if (denom == 0.0) return 0.0;
    return (da.array() * db.array()).sum() / denom;
}

int task_compute(const ExperimentConfig& config, RunLog& log) {
    const GeometricComplex complex = [&] {
        PhaseTimer t(log, "load");
        return obtain_complex(config);
    }();
    const EctConfig cfg = ect_config_from(config, EctMode::Hard);
    const DirectionSet dirs = make_direction_set(config, complex.ambient_dim());

    const EctGrid grid = [&] {
        PhaseTimer t(log, "transform");
        return cfg.mode == EctMode::Hard ? ect_hard(complex, dirs, cfg)
                                         : ect_smooth(complex, dirs, cfg);
    }();

    write_ect(grid, std::filesystem::path(config.out) / "ect.csv", GridFormat::Csv);
    write_ect(grid, std::filesystem::path(config.out) / "ect.pgm", GridFormat::Pgm);
    write_matrix_csv(dirs.directions, std::filesystem::path(config.out) / "directions.csv");

    log.note("vertices", static_cast<double>(complex.num_vertices()));
    log.note("edges", static_cast<double>(complex.num_edges()));
    log.note("triangles", static_cast<double>(complex.num_triangles()));
    log.note("sanity.euler_characteristic",
             static_cast<double>(euler_characteristic(complex)));
    std::cout << "euler characteristic: " << euler_characteristic(complex) << "\n";
    std::cout << "grid: " << grid.values.rows() << " x " << grid.values.cols() << " -> "
              << (std::filesystem::path(config.out) / "ect.csv").string() << "\n";
    return 0;
}

int task_learn_directions(const ExperimentConfig& config, RunLog& log) {
    const GeometricComplex complex = obtain_complex(config);
    const EctConfig cfg = ect_config_from(config, EctMode::Smooth);

    const DirectionSet target_dirs = make_direction_set(config, complex.ambient_dim());
    const EctGrid target = ect_smooth(complex, target_dirs, cfg);

    const DirectionSet init = clustered_init_directions(
        complex.ambient_dim(), config.directions, config.seed, config.constrained);

    FitOptions options;
    options.steps = config.steps;
    options.lr = config.lr;
    options.tolerance = config.tolerance;

    const FitReport report = [&] {
        PhaseTimer t(log, "fit");
        return learn_directions(complex, target, init, cfg, options);
    }();

    write_ect(target, std::filesystem::path(config.out) / "target_ect.csv", GridFormat::Csv);
    write_matrix_csv(init.directions, std::filesystem::path(config.out) / "initial_directions.csv");
    write_matrix_csv(report.final_directions,
                     std::filesystem::path(config.out) / "learned_directions.csv");
    write_loss_trace_csv(report.loss_trace, std::filesystem::path(config.out) / "loss_trace.csv");
    {
        DirectionSet learned(report.final_directions, false);
        learned.constrained = false;
        const EctGrid final_grid = ect_smooth(complex, learned, cfg);
        write_ect(final_grid, std::filesystem::path(config.out) / "final_ect.csv",
                  GridFormat::Csv);
    }

    log.note("final_loss", report.loss_trace.back());
    log.note("steps_run", static_cast<double>(report.steps_run));
    log.note("converged", report.converged ? "true" : "false");
    std::cout << "final loss: " << report.loss_trace.back() << " after " << report.steps_run
              << " evaluations (converged: " << (report.converged ? "yes" : "no") << ")\n";
    return 0;
}

int task_optimize_pointcloud(const ExperimentConfig& config, RunLog& log) {
    ShapeSpec target_spec;
    target_spec.kind = shape_kind_from_string(config.target_shape);
    target_spec.num_points = config.target_points;
    target_spec.noise_sigma = config.noise;
    target_spec.seed = config.seed;
    const GeometricComplex target_complex = generate(target_spec);

    const GeometricComplex source = obtain_complex(config);
    const EctConfig cfg = ect_config_from(config, EctMode::Smooth);
    const DirectionSet dirs = make_direction_set(config, target_complex.ambient_dim());
    const EctGrid target = ect_smooth(target_complex, dirs, cfg);

    FitOptions options;
    options.steps = config.steps;
    options.lr = config.lr;
    options.tolerance = config.tolerance;

    const FitReport report = [&] {
        PhaseTimer t(log, "fit");
        return optimize_pointcloud(source, target, dirs, cfg, options);
    }();

    write_matrix_csv(source.vertices(), std::filesystem::path(config.out) / "initial_points.csv");
    write_matrix_csv(report.final_coordinates,
                     std::filesystem::path(config.out) / "final_points.csv");
    write_loss_trace_csv(report.loss_trace, std::filesystem::path(config.out) / "loss_trace.csv");
    write_ect(target, std::filesystem::path(config.out) / "target_ect.csv", GridFormat::Csv);

    // Hard-transform agreement between the fitted cloud and the target.
    EctConfig hard_cfg = cfg;
    hard_cfg.mode = EctMode::Hard;
    const GeometricComplex fitted = source.with_vertices(report.final_coordinates);
    const EctGrid fitted_hard = ect_hard(fitted, dirs, hard_cfg);
    const EctGrid target_hard = ect_hard(target_complex, dirs, hard_cfg);
    const double r = pearson(fitted_hard.values, target_hard.values);
    write_ect(fitted_hard, std::filesystem::path(config.out) / "final_ect.csv", GridFormat::Csv);

    log.note("final_loss", report.loss_trace.back());
    log.note("steps_run", static_cast<double>(report.steps_run));
    log.note("hard_ect_pearson_r", r);
    std::cout << "final loss: " << report.loss_trace.back()
              << ", hard-transform pearson r: " << r << "\n";
    return 0;
}

int task_classify(const ExperimentConfig& config, RunLog& log) {
    const Dataset dataset = [&] {
        PhaseTimer t(log, "dataset");
        return make_two_class_dataset(config.per_class, config.seed, 48, 80, config.noise);
    }();
    const auto [train_set, test_set] = stratified_split(dataset, 0.8, config.seed);

    const EctConfig cfg = ect_config_from(config, EctMode::Smooth);
    ClassifierModel model = make_classifier(2, 2, config.directions, cfg, config.seed,
                                            config.constrained);

    TrainRun run;
    run.seed = config.seed;
    run.epochs = config.epochs;
    run.batch_size = config.batch_size;
    run.lr = config.lr;
    run.learn_directions = config.learn_directions;
    {
        PhaseTimer t(log, "train");
        train(model, train_set, run);
    }
    const double test_accuracy = evaluate(model, test_set);

    std::ostringstream metrics;
    metrics << "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
    for (std::size_t e = 0; e < run.metrics.size(); ++e) {
        const auto& m = run.metrics[e];
        metrics << e << "," << fmt(m.train_loss) << "," << fmt(m.train_accuracy) << ","
                << fmt(m.val_loss) << "," << fmt(m.val_accuracy) << "\n";
    }
    write(config, "metrics.csv", metrics.str());
    {
        const auto tmp = std::filesystem::path(config.out) / "model.ckpt.tmp";
        save_model(model, tmp);
        std::filesystem::rename(tmp, std::filesystem::path(config.out) / "model.ckpt");
    }
    write_matrix_csv(model.directions.directions,
                     std::filesystem::path(config.out) / "learned_directions.csv");

    log.note("test_accuracy", test_accuracy);
    log.note("epochs_run", static_cast<double>(run.metrics.size()));
    std::cout << "test accuracy: " << test_accuracy << " after " << run.metrics.size()
              << " epochs\n";
    return 0;
}

int task_benchmark(const ExperimentConfig& config, RunLog& log) {
    std::vector<int> sizes;
    {
        std::istringstream is(config.bench_sizes);
        std::string token;
        while (std::getline(is, token, ',')) {
            try {
                sizes.push_back(std::stoi(token));
            } catch (const std::exception&) {
                throw std::invalid_argument("bench_sizes entry '" + token +
                                            "' is not an integer");
            }
        }
        if (sizes.empty()) throw std::invalid_argument("bench_sizes is empty");
    }

    EctConfig cfg = ect_config_from(config, EctMode::Smooth);
    const std::vector<BenchRow> rows = [&] {
        PhaseTimer t(log, "benchmark");
        return benchmark_forward(sizes, config.directions, cfg, config.seed);
    }();

    std::ostringstream os;
    os << "points,directions,serial_ms,parallel_ms,speedup\n";
    for (const auto& row : rows)
        os << row.points << "," << row.directions << "," << fmt(row.serial_ms) << ","
           << fmt(row.parallel_ms) << "," << fmt(row.serial_ms / row.parallel_ms) << "\n";
    write(config, "forward_times.csv", os.str());

    const double slope = loglog_slope(rows);
    log.note("loglog_slope", slope);
    std::cout << "points  directions  serial_ms  parallel_ms\n";
    for (const auto& row : rows)
        std::cout << row.points << "  " << row.directions << "  " << row.serial_ms << "  "
                  << row.parallel_ms << "\n";
    std::cout << "log-log slope (parallel): " << slope << "\n";
    return 0;
}

}  // namespace

std::vector<BenchRow> benchmark_forward(const std::vector<int>& sizes, int directions,
                                        const EctConfig& config, std::uint64_t seed) {
    EctConfig cfg = config;
    cfg.mode = EctMode::Smooth;
    cfg.normalization = EctNormalization::None;
    cfg.check();

    std::vector<BenchRow> rows;
    double sink = 0.0;
    for (int size : sizes) {
        ShapeSpec spec;
        spec.kind = ShapeKind::UniformBlob;
        spec.num_points = size;
        spec.seed = seed;
        const GeometricComplex cloud = generate(spec);
        const DirectionSet dirs = uniform_directions(cloud.ambient_dim(), directions, seed);

        auto timed = [&](auto&& fn) {
            // One warmup call, then enough repetitions for a stable reading.
            sink += fn().values.sum();
            const auto probe_start = Clock::now();
            sink += fn().values.sum();
            const double probe_ms = ms_between(probe_start, Clock::now());
            const int reps = std::max(3, static_cast<int>(100.0 / std::max(probe_ms, 1e-3)));
            const auto start = Clock::now();
            for (int r = 0; r < reps; ++r) sink += fn().values.sum();
            return ms_between(start, Clock::now()) / reps;
        };

        BenchRow row;
        row.points = size;
        row.directions = directions;
        row.serial_ms = timed([&] { return reference::ect_smooth(cloud, dirs, cfg); });
        row.parallel_ms = timed([&] { return ect_smooth(cloud, dirs, cfg); });
        rows.push_back(row);
    }
    if (sink == 42.0) std::cerr << "";  // keep the computations observable
    return rows;
}

double loglog_slope(const std::vector<BenchRow>& rows) {
    if (rows.size() < 2) throw std::invalid_argument("need at least two benchmark rows");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(rows.size());
    for (const auto& row : rows) {
        const double x = std::log(static_cast<double>(row.points));
        const double y = std::log(row.parallel_ms);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

int run(const ExperimentConfig& config) {
    try {
        if (config.task.empty()) throw std::invalid_argument("no task given");
        std::filesystem::create_directories(config.out);

        RunLog log;
        const auto total_start = Clock::now();
        int code = 0;
        if (config.task == "compute") code = task_compute(config, log);
        else if (config.task == "learn-directions") code = task_learn_directions(config, log);
        else if (config.task == "optimize-pointcloud")
            code = task_optimize_pointcloud(config, log);
        else if (config.task == "classify") code = task_classify(config, log);
        else if (config.task == "benchmark") code = task_benchmark(config, log);
        else throw std::invalid_argument("unknown task '" + config.task + "'");

        log.timings.push_back({"total", ms_between(total_start, Clock::now())});
        write_manifest(config, log);
        return code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace dect
