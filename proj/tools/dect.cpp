#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "dect/io.hpp"

namespace {

// Flag values land in an override map and are applied on top of the config
// file, so explicit flags always win.
void add_override(CLI::App* sub, std::map<std::string, std::string>& overrides,
                  const std::string& flag, const std::string& key, const std::string& desc) {
    sub->add_option(
        flag,
        [&overrides, key](const CLI::results_t& res) {
            overrides[key] = res[0];
            return true;
        },
        desc);
}

void add_common(CLI::App* sub, std::string& config_path,
                std::map<std::string, std::string>& overrides) {
    sub->add_option("--config", config_path, "flat key-value config file");
    add_override(sub, overrides, "--directions", "directions", "number of directions");
    add_override(sub, overrides, "--heights", "heights", "number of height samples");
    add_override(sub, overrides, "--lambda", "lambda", "sigmoid tightness");
    add_override(sub, overrides, "--seed", "seed", "root random seed");
    add_override(sub, overrides, "--normalize", "normalize",
                 "grid normalization: none|vertex|l2");
    add_override(sub, overrides, "--constrained", "constrained",
                 "keep directions on the unit sphere: true|false");
    add_override(sub, overrides, "--out", "out", "output directory");
    add_override(sub, overrides, "--mode", "mode", "transform mode: hard|smooth");
}

void add_input(CLI::App* sub, std::map<std::string, std::string>& overrides) {
    add_override(sub, overrides, "--input", "input", "input complex file");
    add_override(sub, overrides, "--format", "format",
                 "input format: off|edgelist|csv-points");
    add_override(sub, overrides, "--normalize-coords", "normalize_coords",
                 "center and rescale loaded coordinates: true|false");
    add_override(sub, overrides, "--shape", "shape", "generated shape kind");
    add_override(sub, overrides, "--points", "points", "generated point count");
    add_override(sub, overrides, "--noise", "noise", "generator noise sigma");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact and differentiable Euler characteristic transforms"};
    app.require_subcommand(1);

    std::string config_path;
    std::map<std::string, std::string> overrides;

    CLI::App* compute = app.add_subcommand("compute", "transform one complex to a grid");
    add_common(compute, config_path, overrides);
    add_input(compute, overrides);

    CLI::App* learn = app.add_subcommand("learn-directions",
                                         "fit directions to a target transform");
    add_common(learn, config_path, overrides);
    add_input(learn, overrides);
    add_override(learn, overrides, "--steps", "steps", "optimization step budget");
    add_override(learn, overrides, "--lr", "lr", "learning rate");
    add_override(learn, overrides, "--tolerance", "tolerance", "convergence tolerance");

    CLI::App* optimize = app.add_subcommand("optimize-pointcloud",
                                            "fit point coordinates to a target transform");
    add_common(optimize, config_path, overrides);
    add_input(optimize, overrides);
    add_override(optimize, overrides, "--target-shape", "target_shape", "target shape kind");
    add_override(optimize, overrides, "--target-points", "target_points",
                 "target shape point count");
    add_override(optimize, overrides, "--steps", "steps", "optimization step budget");
    add_override(optimize, overrides, "--lr", "lr", "learning rate");
    add_override(optimize, overrides, "--tolerance", "tolerance", "convergence tolerance");

    CLI::App* classify = app.add_subcommand("classify",
                                            "train the classifier on a synthetic set");
    add_common(classify, config_path, overrides);
    add_override(classify, overrides, "--noise", "noise", "dataset noise sigma");
    add_override(classify, overrides, "--per-class", "per_class", "samples per class");
    add_override(classify, overrides, "--epochs", "epochs", "epoch cap");
    add_override(classify, overrides, "--batch-size", "batch_size", "minibatch size");
    add_override(classify, overrides, "--lr", "lr", "learning rate");
    add_override(classify, overrides, "--learn-directions", "learn_directions",
                 "train the direction parameters: true|false");

    CLI::App* benchmark = app.add_subcommand("benchmark",
                                             "time the forward pass, serial vs parallel");
    add_common(benchmark, config_path, overrides);
    add_override(benchmark, overrides, "--bench-sizes", "bench_sizes",
                 "comma-separated point counts");

    CLI11_PARSE(app, argc, argv);

    try {
        dect::ExperimentConfig config;
        if (!config_path.empty()) config = dect::parse_config_file(config_path);
        config.task = app.get_subcommands().front()->get_name();
        for (const auto& [key, value] : overrides)
            dect::apply_config_entry(config, key, value);
        return dect::run(config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
