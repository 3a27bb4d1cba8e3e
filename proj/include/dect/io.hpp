#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dect/classify.hpp"
#include "dect/ect.hpp"

namespace dect {

enum class ComplexFormat { Off, EdgeList, CsvPoints };
enum class GridFormat { Csv, Pgm };

ComplexFormat complex_format_from_string(const std::string& name);
std::string to_string(ComplexFormat format);

/// Parse a complex from disk. OFF files carry vertices and triangular
/// faces; the face edges are synthesized (deduplicated) so the result is
/// face-closed. The edgelist format is a `n d` header, n coordinate lines,
/// then `i j` edge lines. csv-points is one comma-separated point per line.
/// The loaded complex must pass validate(); errors carry the offending line
/// number. Coordinates are normalized unless `normalize_coords` is false.
GeometricComplex load_complex(const std::filesystem::path& path, ComplexFormat format,
                              bool normalize_coords = true);

/// Inverse of load_complex for complexes the format can represent exactly
/// (csv-points: bare clouds; edgelist: graphs; off: meshes whose edge set
/// is exactly the face closure).
void save_complex(const GeometricComplex& complex, const std::filesystem::path& path,
                  ComplexFormat format);

/// csv: a header row with the height samples, then one full-precision row
/// per direction. pgm: 8-bit min-max scaled view of the same grid with the
/// scaling constants in a `<path>.scale.txt` sidecar.
void write_ect(const EctGrid& grid, const std::filesystem::path& path, GridFormat format);

/// Reads a grid written by write_ect in csv format (values and heights;
/// config metadata is not round-tripped).
EctGrid read_ect_csv(const std::filesystem::path& path);

/// All-or-nothing text write (temp file + rename).
void atomic_write_text(const std::filesystem::path& path, const std::string& content);

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_loss_trace_csv(const std::vector<double>& trace, const std::filesystem::path& path);

/// Flat key-value experiment description; every field can come from a
/// config file (`key = value`, `#` comments) or a CLI override.
struct ExperimentConfig {
    std::string task;  // compute | learn-directions | optimize-pointcloud | classify | benchmark

    // input complex: a file, or a generated shape when no path is given
    std::string input;
    std::string format = "csv-points";
    bool normalize_coords = true;
    std::string shape = "circle";
    int points = 64;
    double noise = 0.0;

    // target shape for optimize-pointcloud
    std::string target_shape = "two-circles";
    int target_points = 256;

    // transform parameters
    int directions = 16;
    int heights = 16;
    double lambda = 10.0;
    double h_min = -1.0;
    double h_max = 1.0;
    std::string normalize = "none";  // none | vertex | l2
    bool constrained = true;
    std::string mode;  // hard | smooth; empty = task default

    // optimization
    int steps = 1000;
    double lr = 1e-3;
    double tolerance = 1e-4;

    // classification
    int per_class = 100;
    int epochs = 100;
    int batch_size = 16;
    bool learn_directions = true;

    // benchmark
    std::string bench_sizes = "1000,10000,100000";

    std::uint64_t seed = 0;
    std::string out = "dect-out";
};

/// Throws with the offending line on malformed or unknown keys.
ExperimentConfig parse_config_file(const std::filesystem::path& path);
void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value);
std::string serialize_config(const ExperimentConfig& config);

/// Dispatch a task: writes the task's artifacts plus a manifest into
/// config.out and returns a process exit code (0 on success). The manifest
/// echoes the full resolved config and is itself a loadable config file.
int run(const ExperimentConfig& config);

struct BenchRow {
    int points = 0;
    int directions = 0;
    double serial_ms = 0.0;
    double parallel_ms = 0.0;
};

/// Time the smooth-transform forward pass (serial reference vs parallel
/// kernel) on generated clouds of the given sizes.
std::vector<BenchRow> benchmark_forward(const std::vector<int>& sizes, int directions,
                                        const EctConfig& config, std::uint64_t seed);

/// Least-squares slope of log(time) against log(points).
double loglog_slope(const std::vector<BenchRow>& rows);

}  // namespace dect
