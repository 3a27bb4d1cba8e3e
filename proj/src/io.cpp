#include "dect/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dect {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

[[noreturn]] void parse_fail(const std::filesystem::path& path, int line_no,
                             const std::string& what) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

struct LineReader {
    std::ifstream stream;
    int line_no = 0;

    explicit LineReader(const std::filesystem::path& path) : stream(path) {
        if (!stream) throw std::runtime_error("cannot open '" + path.string() + "'");
    }

    // Next non-blank, non-comment line; false at EOF.
    bool next(std::string& line) {
        while (std::getline(stream, line)) {
            ++line_no;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            return true;
        }
        return false;
    }
};

std::vector<double> parse_reals(const std::string& line, char sep) {
    std::vector<double> out;
    std::string token;
    std::istringstream is(line);
    while (std::getline(is, token, sep)) {
        if (token.find_first_not_of(" \t\r") == std::string::npos)
            throw std::runtime_error("empty field");
        std::size_t consumed = 0;
        double v = 0.0;
        try {
            v = std::stod(token, &consumed);
        } catch (const std::exception&) {
            throw std::runtime_error("'" + token + "' is not a number");
        }
        while (consumed < token.size() &&
               (token[consumed] == ' ' || token[consumed] == '\t' || token[consumed] == '\r'))
            ++consumed;
        if (consumed != token.size()) throw std::runtime_error("trailing junk in field");
        out.push_back(v);
    }
    return out;
}

void require_valid(const GeometricComplex& complex, const std::filesystem::path& path) {
    const ValidationReport report = validate(complex);
    if (!report.ok())
        throw std::runtime_error("'" + path.string() +
                                 "': " + report.violations.front().detail);
}

GeometricComplex load_off(const std::filesystem::path& path) {
    LineReader reader(path);
    std::string line;
    if (!reader.next(line)) parse_fail(path, reader.line_no, "empty file");
    long long nv = 0, nf = 0, ne = 0;
    bool have_counts = false;
    {
        std::istringstream is(line);
        std::string tag;
        is >> tag;
        if (tag != "OFF") parse_fail(path, reader.line_no, "expected OFF header");
        // Some writers put the counts on the header line.
        if (is >> nv >> nf >> ne) have_counts = true;
    }
    if (!have_counts) {
        if (!reader.next(line)) parse_fail(path, reader.line_no, "missing count line");
        std::istringstream is(line);
        if (!(is >> nv >> nf >> ne) || nv < 0 || nf < 0)
            parse_fail(path, reader.line_no, "malformed count line");
    }
    if (nv < 0 || nf < 0) parse_fail(path, reader.line_no, "malformed count line");

    Matrix coords;
    for (long long v = 0; v < nv; ++v) {
        if (!reader.next(line)) parse_fail(path, reader.line_no, "unexpected end of vertices");
        std::vector<double> row;
        try {
            std::istringstream is(line);
            double x = 0;
            while (is >> x) row.push_back(x);
            if (!is.eof()) throw std::runtime_error("bad token");
        } catch (const std::exception&) {
            parse_fail(path, reader.line_no, "malformed vertex line");
        }
        if (row.empty()) parse_fail(path, reader.line_no, "malformed vertex line");
        if (v == 0) coords.resize(nv, static_cast<Eigen::Index>(row.size()));
        if (static_cast<Eigen::Index>(row.size()) != coords.cols())
            parse_fail(path, reader.line_no, "inconsistent vertex dimension");
        for (std::size_t c = 0; c < row.size(); ++c)
            coords(v, static_cast<Eigen::Index>(c)) = row[c];
    }

    std::vector<TriangleIndices> triangles;
    std::set<EdgeIndices> edge_set;
    for (long long f = 0; f < nf; ++f) {
        if (!reader.next(line)) parse_fail(path, reader.line_no, "unexpected end of faces");
        std::istringstream is(line);
        long long k = 0;
        if (!(is >> k)) parse_fail(path, reader.line_no, "malformed face line");
        if (k != 3) parse_fail(path, reader.line_no, "only triangular faces are supported");
        long long a = 0, b = 0, c = 0;
        if (!(is >> a >> b >> c)) parse_fail(path, reader.line_no, "malformed face line");
        for (long long idx : {a, b, c})
            if (idx < 0 || idx >= nv)
                parse_fail(path, reader.line_no,
                           "vertex index " + std::to_string(idx) + " out of range");
        triangles.push_back({static_cast<int>(a), static_cast<int>(b), static_cast<int>(c)});
        // Synthesize the boundary edges so the mesh is face-closed.
        const int ia = static_cast<int>(a), ib = static_cast<int>(b), ic = static_cast<int>(c);
        edge_set.insert({std::min(ia, ib), std::max(ia, ib)});
        edge_set.insert({std::min(ib, ic), std::max(ib, ic)});
        edge_set.insert({std::min(ia, ic), std::max(ia, ic)});
    }
    std::vector<EdgeIndices> edges(edge_set.begin(), edge_set.end());
    return GeometricComplex(std::move(coords), std::move(edges), std::move(triangles));
}

GeometricComplex load_edgelist(const std::filesystem::path& path) {
    LineReader reader(path);
    std::string line;
    if (!reader.next(line)) parse_fail(path, reader.line_no, "empty file");
    long long n = 0, d = 0;
    {
        std::istringstream is(line);
        if (!(is >> n >> d) || n < 0 || d < 1)
            parse_fail(path, reader.line_no, "malformed header (expected 'n d')");
    }
    Matrix coords(n, d);
    for (long long v = 0; v < n; ++v) {
        if (!reader.next(line)) parse_fail(path, reader.line_no, "unexpected end of vertices");
        std::istringstream is(line);
        for (long long c = 0; c < d; ++c) {
            double x = 0;
            if (!(is >> x)) parse_fail(path, reader.line_no, "malformed coordinate line");
            coords(v, c) = x;
        }
        std::string rest;
        if (is >> rest) parse_fail(path, reader.line_no, "too many coordinates");
    }
    std::vector<EdgeIndices> edges;
    while (reader.next(line)) {
        std::istringstream is(line);
        long long i = 0, j = 0;
        if (!(is >> i >> j)) parse_fail(path, reader.line_no, "malformed edge line");
        std::string rest;
        if (is >> rest) parse_fail(path, reader.line_no, "malformed edge line");
        for (long long idx : {i, j})
            if (idx < 0 || idx >= n)
                parse_fail(path, reader.line_no,
                           "vertex index " + std::to_string(idx) + " out of range");
        if (i == j) parse_fail(path, reader.line_no, "degenerate edge");
        edges.push_back({static_cast<int>(i), static_cast<int>(j)});
    }
    return GeometricComplex(std::move(coords), std::move(edges));
}

GeometricComplex load_csv_points(const std::filesystem::path& path) {
    LineReader reader(path);
    std::string line;
    std::vector<std::vector<double>> rows;
    while (reader.next(line)) {
        try {
            rows.push_back(parse_reals(line, ','));
        } catch (const std::exception& e) {
            parse_fail(path, reader.line_no, std::string("malformed point line: ") + e.what());
        }
        if (rows.back().empty()) parse_fail(path, reader.line_no, "empty point line");
        if (rows.back().size() != rows.front().size())
            parse_fail(path, reader.line_no, "inconsistent point dimension");
    }
    if (rows.empty()) parse_fail(path, reader.line_no, "file contains no points");
    Matrix coords(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            coords(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return GeometricComplex(std::move(coords));
}

}  // namespace

ComplexFormat complex_format_from_string(const std::string& name) {
    if (name == "off") return ComplexFormat::Off;
    if (name == "edgelist") return ComplexFormat::EdgeList;
    if (name == "csv-points") return ComplexFormat::CsvPoints;
    throw std::invalid_argument("unknown complex format '" + name +
                                "' (off|edgelist|csv-points)");
}

std::string to_string(ComplexFormat format) {
    switch (format) {
        case ComplexFormat::Off: return "off";
        case ComplexFormat::EdgeList: return "edgelist";
        case ComplexFormat::CsvPoints: return "csv-points";
    }
    throw std::invalid_argument("unknown complex format");
}

GeometricComplex load_complex(const std::filesystem::path& path, ComplexFormat format,
                              bool normalize_coords) {
    GeometricComplex complex;
    switch (format) {
        case ComplexFormat::Off: complex = load_off(path); break;
        case ComplexFormat::EdgeList: complex = load_edgelist(path); break;
        case ComplexFormat::CsvPoints: complex = load_csv_points(path); break;
    }
    require_valid(complex, path);
    return normalize_coords ? normalize(complex) : complex;
}

void save_complex(const GeometricComplex& complex, const std::filesystem::path& path,
                  ComplexFormat format) {
    std::ostringstream os;
    const Matrix& coords = complex.vertices();
    switch (format) {
        case ComplexFormat::CsvPoints: {
            if (!complex.is_point_cloud())
                throw std::invalid_argument("csv-points cannot represent simplices");
            for (Eigen::Index r = 0; r < coords.rows(); ++r) {
                for (Eigen::Index c = 0; c < coords.cols(); ++c) {
                    if (c) os << ",";
                    os << fmt(coords(r, c));
                }
                os << "\n";
            }
            break;
        }
        case ComplexFormat::EdgeList: {
            if (!complex.is_graph())
                throw std::invalid_argument("edgelist cannot represent triangles");
            os << coords.rows() << " " << coords.cols() << "\n";
            for (Eigen::Index r = 0; r < coords.rows(); ++r) {
                for (Eigen::Index c = 0; c < coords.cols(); ++c) {
                    if (c) os << " ";
                    os << fmt(coords(r, c));
                }
                os << "\n";
            }
            for (const auto& e : complex.edges()) os << e[0] << " " << e[1] << "\n";
            break;
        }
        case ComplexFormat::Off: {
            // OFF keeps only faces; refuse to drop edges that are not part
            // of the face closure.
            std::set<EdgeIndices> closure;
            for (const auto& t : complex.triangles()) {
                closure.insert({t[0], t[1]});
                closure.insert({t[1], t[2]});
                closure.insert({t[0], t[2]});
            }
            const std::set<EdgeIndices> stored(complex.edges().begin(), complex.edges().end());
            if (stored != closure)
                throw std::invalid_argument(
                    "off cannot represent edges outside the triangle face closure");
            os << "OFF\n";
            os << coords.rows() << " " << complex.num_triangles() << " 0\n";
            for (Eigen::Index r = 0; r < coords.rows(); ++r) {
                for (Eigen::Index c = 0; c < coords.cols(); ++c) {
                    if (c) os << " ";
                    os << fmt(coords(r, c));
                }
                os << "\n";
            }
            for (const auto& t : complex.triangles())
                os << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
            break;
        }
    }
    atomic_write_text(path, os.str());
}

void write_ect(const EctGrid& grid, const std::filesystem::path& path, GridFormat format) {
    if (grid.values.size() == 0) throw std::invalid_argument("cannot write an empty grid");
    std::ostringstream os;
    if (format == GridFormat::Csv) {
        for (Eigen::Index i = 0; i < grid.heights.size(); ++i) {
            if (i) os << ",";
            os << fmt(grid.heights[i]);
        }
        os << "\n";
        for (Eigen::Index d = 0; d < grid.values.rows(); ++d) {
            for (Eigen::Index i = 0; i < grid.values.cols(); ++i) {
                if (i) os << ",";
                os << fmt(grid.values(d, i));
            }
            os << "\n";
        }
        atomic_write_text(path, os.str());
        return;
    }

    // 8-bit min-max view; the sidecar records the affine scaling so the
    // image remains interpretable (min == max flags a constant grid).
    const double lo = grid.values.minCoeff();
    const double hi = grid.values.maxCoeff();
    os << "P2\n" << grid.values.cols() << " " << grid.values.rows() << "\n255\n";
    for (Eigen::Index d = 0; d < grid.values.rows(); ++d) {
        for (Eigen::Index i = 0; i < grid.values.cols(); ++i) {
            int pixel = 128;
            if (hi > lo)
                pixel = static_cast<int>(
                    std::lround((grid.values(d, i) - lo) / (hi - lo) * 255.0));
            os << pixel << (i + 1 < grid.values.cols() ? " " : "");
        }
        os << "\n";
    }
    atomic_write_text(path, os.str());
    std::ostringstream scale;
    scale << "min = " << fmt(lo) << "\nmax = " << fmt(hi) << "\n";
    atomic_write_text(path.string() + ".scale.txt", scale.str());
}

EctGrid read_ect_csv(const std::filesystem::path& path) {
    LineReader reader(path);
    std::string line;
    if (!reader.next(line)) parse_fail(path, reader.line_no, "empty grid file");
    std::vector<double> heights;
    try {
        heights = parse_reals(line, ',');
    } catch (const std::exception&) {
        parse_fail(path, reader.line_no, "malformed height header");
    }
    std::vector<std::vector<double>> rows;
    while (reader.next(line)) {
        try {
            rows.push_back(parse_reals(line, ','));
        } catch (const std::exception&) {
            parse_fail(path, reader.line_no, "malformed grid row");
        }
        if (rows.back().size() != heights.size())
            parse_fail(path, reader.line_no, "grid row width does not match the header");
    }
    if (rows.empty()) parse_fail(path, reader.line_no, "grid has no rows");

    EctGrid grid;
    grid.heights = Eigen::Map<const Vector>(heights.data(), static_cast<Eigen::Index>(heights.size()));
    grid.values.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(heights.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            grid.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    grid.config.num_heights = static_cast<int>(heights.size());
    grid.config.h_min = heights.front();
    grid.config.h_max = heights.back();
    return grid;
}

void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
        os << content;
        if (!os) throw std::runtime_error("failed while writing '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
    std::ostringstream os;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) os << ",";
            os << fmt(m(r, c));
        }
        os << "\n";
    }
    atomic_write_text(path, os.str());
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
    LineReader reader(path);
    std::string line;
    std::vector<std::vector<double>> rows;
    while (reader.next(line)) {
        try {
            rows.push_back(parse_reals(line, ','));
        } catch (const std::exception&) {
            parse_fail(path, reader.line_no, "malformed csv row");
        }
        if (rows.back().size() != rows.front().size())
            parse_fail(path, reader.line_no, "inconsistent csv width");
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()),
             rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return m;
}

void write_loss_trace_csv(const std::vector<double>& trace, const std::filesystem::path& path) {
    std::ostringstream os;
    os << "step,loss\n";
    for (std::size_t i = 0; i < trace.size(); ++i) os << i << "," << fmt(trace[i]) << "\n";
    atomic_write_text(path, os.str());
}

namespace {

int to_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument("junk");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "' needs an integer, got '" + value +
                                    "'");
    }
}

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("junk");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "' needs a number, got '" + value +
                                    "'");
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument("junk");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key '" + key + "' needs an unsigned integer, got '" +
                                    value + "'");
    }
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw std::invalid_argument("config key '" + key + "' needs true or false, got '" + value +
                                "'");
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

void apply_config_entry(ExperimentConfig& config, const std::string& key,
                        const std::string& value) {
    if (key == "task") config.task = value;
    else if (key == "input") config.input = value;
    else if (key == "format") config.format = value;
    else if (key == "normalize_coords") config.normalize_coords = to_bool(key, value);
    else if (key == "shape") config.shape = value;
    else if (key == "points") config.points = to_int(key, value);
    else if (key == "noise") config.noise = to_double(key, value);
    else if (key == "target_shape") config.target_shape = value;
    else if (key == "target_points") config.target_points = to_int(key, value);
    else if (key == "directions") config.directions = to_int(key, value);
    else if (key == "heights") config.heights = to_int(key, value);
    else if (key == "lambda") config.lambda = to_double(key, value);
    else if (key == "h_min") config.h_min = to_double(key, value);
    else if (key == "h_max") config.h_max = to_double(key, value);
    else if (key == "normalize") config.normalize = value;
    else if (key == "constrained") config.constrained = to_bool(key, value);
    else if (key == "mode") config.mode = value;
    else if (key == "steps") config.steps = to_int(key, value);
    else if (key == "lr") config.lr = to_double(key, value);
    else if (key == "tolerance") config.tolerance = to_double(key, value);
    else if (key == "per_class") config.per_class = to_int(key, value);
    else if (key == "epochs") config.epochs = to_int(key, value);
    else if (key == "batch_size") config.batch_size = to_int(key, value);
    else if (key == "learn_directions") config.learn_directions = to_bool(key, value);
    else if (key == "bench_sizes") config.bench_sizes = value;
    else if (key == "seed") config.seed = to_u64(key, value);
    else if (key == "out") config.out = value;
    else throw std::invalid_argument("unknown config key '" + key + "'");
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
    LineReader reader(path);
    ExperimentConfig config;
    std::string line;
    while (reader.next(line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) parse_fail(path, reader.line_no, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) parse_fail(path, reader.line_no, "empty config key");
        try {
            apply_config_entry(config, key, value);
        } catch (const std::exception& e) {
            parse_fail(path, reader.line_no, e.what());
        }
    }
    return config;
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "task = " << c.task << "\n";
    os << "input = " << c.input << "\n";
    os << "format = " << c.format << "\n";
    os << "normalize_coords = " << (c.normalize_coords ? "true" : "false") << "\n";
    os << "shape = " << c.shape << "\n";
    os << "points = " << c.points << "\n";
    os << "noise = " << fmt(c.noise) << "\n";
    os << "target_shape = " << c.target_shape << "\n";
    os << "target_points = " << c.target_points << "\n";
    os << "directions = " << c.directions << "\n";
    os << "heights = " << c.heights << "\n";
    os << "lambda = " << fmt(c.lambda) << "\n";
    os << "h_min = " << fmt(c.h_min) << "\n";
    os << "h_max = " << fmt(c.h_max) << "\n";
    os << "normalize = " << c.normalize << "\n";
    os << "constrained = " << (c.constrained ? "true" : "false") << "\n";
    os << "mode = " << c.mode << "\n";
    os << "steps = " << c.steps << "\n";
    os << "lr = " << fmt(c.lr) << "\n";
    os << "tolerance = " << fmt(c.tolerance) << "\n";
    os << "per_class = " << c.per_class << "\n";
    os << "epochs = " << c.epochs << "\n";
    os << "batch_size = " << c.batch_size << "\n";
    os << "learn_directions = " << (c.learn_directions ? "true" : "false") << "\n";
    os << "bench_sizes = " << c.bench_sizes << "\n";
    os << "seed = " << c.seed << "\n";
    os << "out = " << c.out << "\n";
    return os.str();
}

}  // namespace dect
