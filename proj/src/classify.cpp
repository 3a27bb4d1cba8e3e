#include "dect/classify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace dect {

MlpParams MlpParams::init(const std::vector<int>& dims, Rng& rng) {
    if (dims.size() < 2) throw std::invalid_argument("an MLP needs at least one layer");
    MlpParams params;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int in = dims[l];
        const int out = dims[l + 1];
        if (in < 1 || out < 1) throw std::invalid_argument("layer dimensions must be positive");
        Matrix w(out, in);
        const double scale = std::sqrt(2.0 / in);
        for (int r = 0; r < out; ++r)
            for (int c = 0; c < in; ++c) w(r, c) = scale * rng.gaussian();
        params.weights.push_back(std::move(w));
        params.biases.push_back(Vector::Zero(out));
    }
    return params;
}

namespace {

struct MlpCache {
    std::vector<Vector> inputs;  // input of each layer
    std::vector<Vector> pre;     // pre-activation of each layer
};

Vector mlp_forward(const MlpParams& params, const Vector& x, MlpCache* cache) {
    Vector h = x;
    const int layers = params.num_layers();
    for (int l = 0; l < layers; ++l) {
        if (cache) cache->inputs.push_back(h);
        Vector z = params.weights[l] * h + params.biases[l];
        if (cache) cache->pre.push_back(z);
        if (l + 1 < layers) z = z.cwiseMax(0.0);  // ReLU on hidden layers
        h = std::move(z);
    }
    return h;
}

struct MlpGrads {
    std::vector<Matrix> d_weights;
    std::vector<Vector> d_biases;

    static MlpGrads zeros_like(const MlpParams& params) {
        MlpGrads g;
        for (int l = 0; l < params.num_layers(); ++l) {
            g.d_weights.push_back(Matrix::Zero(params.weights[l].rows(), params.weights[l].cols()));
            g.d_biases.push_back(Vector::Zero(params.biases[l].size()));
        }
        return g;
    }
};

// Accumulates parameter gradients into `grads` and returns dL/dinput.
Vector mlp_backward(const MlpParams& params, const MlpCache& cache, const Vector& d_output,
                    MlpGrads& grads) {
    Vector delta = d_output;
    for (int l = params.num_layers() - 1; l >= 0; --l) {
        if (l + 1 < params.num_layers()) {
            // Through the ReLU of layer l (the cached pre-activation decides).
            delta = (cache.pre[l].array() > 0.0).select(delta, 0.0);
        }
        grads.d_weights[l] += delta * cache.inputs[l].transpose();
        grads.d_biases[l] += delta;
        if (l > 0) delta = params.weights[l].transpose() * delta;
    }
    return params.weights[0].transpose() * delta;
}

double pool_scale(const ClassifierModel& model) {
    return model.pool == Pooling::Mean ? 1.0 / model.directions.count() : 1.0;
}

struct SampleEval {
    double loss = 0.0;
    bool correct = false;
};

int argmax_lowest(const Vector& logits) {
    int best = 0;
    for (int c = 1; c < logits.size(); ++c)
        if (logits[c] > logits[best]) best = c;
    return best;
}

// Forward plus, when `grads` is given, a full backward pass. Direction
// gradients come through the smooth-transform backward and are accumulated
// into `dir_grads` when requested.
SampleEval process_sample(const ClassifierModel& model, const GeometricComplex& complex,
                          int label, MlpGrads* embed_grads, MlpGrads* head_grads,
                          Matrix* dir_grads) {
    const EctGrid grid = ect_smooth(complex, model.directions, model.ect_config);
    const int num_dirs = model.directions.count();

    std::vector<MlpCache> curve_caches(static_cast<std::size_t>(num_dirs));
    Vector pooled = Vector::Zero(model.curve_embed.output_dim());
    const bool want_grads = embed_grads != nullptr;
    for (int d = 0; d < num_dirs; ++d) {
        const Vector curve = grid.values.row(d).transpose();
        pooled += mlp_forward(model.curve_embed, curve,
                              want_grads ? &curve_caches[static_cast<std::size_t>(d)] : nullptr);
    }
    pooled *= pool_scale(model);

    MlpCache head_cache;
    const Vector logits =
        mlp_forward(model.head, pooled, want_grads ? &head_cache : nullptr);

    // Cross entropy via a stable log-softmax.
    const double max_logit = logits.maxCoeff();
    const Vector shifted = (logits.array() - max_logit).exp();
    const double z = shifted.sum();
    SampleEval eval;
    eval.loss = -(logits[label] - max_logit - std::log(z));
    eval.correct = argmax_lowest(logits) == label;

    if (!want_grads) return eval;

    Vector d_logits = shifted / z;
    d_logits[label] -= 1.0;

    const Vector d_pooled = mlp_backward(model.head, head_cache, d_logits, *head_grads);
    Matrix upstream(num_dirs, model.ect_config.num_heights);
    for (int d = 0; d < num_dirs; ++d) {
        const Vector d_embed = d_pooled * pool_scale(model);
        const Vector d_curve = mlp_backward(model.curve_embed,
                                            curve_caches[static_cast<std::size_t>(d)], d_embed,
                                            *embed_grads);
        upstream.row(d) = d_curve.transpose();
    }
    if (dir_grads) {
        const EctGradients g =
            ect_smooth_backward(complex, model.directions, model.ect_config, upstream);
        *dir_grads += g.d_directions;
    }
    return eval;
}

void check_dataset(const ClassifierModel& model, const Dataset& dataset) {
    if (dataset.empty()) throw std::invalid_argument("empty dataset");
    std::set<int> labels;
    for (const auto& sample : dataset) {
        if (sample.label < 0 || sample.label >= model.num_classes())
            throw std::invalid_argument("label out of range for the model head");
        labels.insert(sample.label);
    }
    if (labels.size() < 2) throw std::invalid_argument("dataset has fewer than two classes");
}

}  // namespace

Vector MlpParams::forward(const Vector& x) const { return mlp_forward(*this, x, nullptr); }

ClassifierModel make_classifier(int ambient_dim, int num_classes, int num_directions,
                                const EctConfig& config, std::uint64_t seed,
                                bool constrained_directions) {
    if (num_classes < 2) throw std::invalid_argument("a classifier needs at least two classes");
    EctConfig cfg = config;
    cfg.mode = EctMode::Smooth;  // gradients must reach the directions
    cfg.check();

    DirectionSet dirs = uniform_directions(ambient_dim, num_directions, seed);
    dirs.constrained = constrained_directions;

    Rng rng = Rng::substream(seed, "init");
    ClassifierModel model{std::move(dirs), cfg,
                          MlpParams::init({cfg.num_heights, 32, 32, 16}, rng), Pooling::Mean,
                          MlpParams::init({16, 25, 25, 25, num_classes}, rng)};
    return model;
}

Vector forward(const ClassifierModel& model, const GeometricComplex& complex) {
    const EctGrid grid = ect_smooth(complex, model.directions, model.ect_config);
    Vector pooled = Vector::Zero(model.curve_embed.output_dim());
    for (int d = 0; d < model.directions.count(); ++d)
        pooled += mlp_forward(model.curve_embed, grid.values.row(d).transpose(), nullptr);
    pooled *= pool_scale(model);
    return mlp_forward(model.head, pooled, nullptr);
}

Matrix forward_batch(const ClassifierModel& model,
                     const std::vector<const GeometricComplex*>& complexes) {
    Matrix logits(static_cast<Eigen::Index>(complexes.size()), model.num_classes());
    for (std::size_t r = 0; r < complexes.size(); ++r)
        logits.row(static_cast<Eigen::Index>(r)) = forward(model, *complexes[r]).transpose();
    return logits;
}

std::pair<double, Matrix> sample_loss_direction_gradient(const ClassifierModel& model,
                                                         const GeometricComplex& complex,
                                                         int label) {
    if (label < 0 || label >= model.num_classes())
        throw std::invalid_argument("label out of range for the model head");
    MlpGrads embed_grads = MlpGrads::zeros_like(model.curve_embed);
    MlpGrads head_grads = MlpGrads::zeros_like(model.head);
    Matrix dir_grads = Matrix::Zero(model.directions.count(), model.directions.dim());
    const SampleEval eval =
        process_sample(model, complex, label, &embed_grads, &head_grads, &dir_grads);
    return {eval.loss, std::move(dir_grads)};
}

void train(ClassifierModel& model, const Dataset& dataset, TrainRun& run) {
    check_dataset(model, dataset);
    if (run.epochs < 0) throw std::invalid_argument("epoch budget must be nonnegative");
    if (run.batch_size < 1) throw std::invalid_argument("batch size must be positive");

    const auto [train_set, val_set] = stratified_split(dataset, 0.8, run.seed);

    AdamState dir_state = AdamState::for_params(model.directions.directions, run.lr);
    std::vector<AdamState> embed_w_state, head_w_state;
    std::vector<AdamState> embed_b_state, head_b_state;
    for (int l = 0; l < model.curve_embed.num_layers(); ++l) {
        embed_w_state.push_back(AdamState::for_params(model.curve_embed.weights[l], run.lr));
        embed_b_state.push_back(AdamState::for_params(model.curve_embed.biases[l], run.lr));
    }
    for (int l = 0; l < model.head.num_layers(); ++l) {
        head_w_state.push_back(AdamState::for_params(model.head.weights[l], run.lr));
        head_b_state.push_back(AdamState::for_params(model.head.biases[l], run.lr));
    }

    Rng shuffle_rng = Rng::substream(run.seed, "shuffle");
    std::vector<int> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    run.metrics.clear();
    double best_val_loss = std::numeric_limits<double>::infinity();
    int epochs_since_best = 0;

    for (int epoch = 0; epoch < run.epochs; ++epoch) {
        // Fisher-Yates with our own rng, so the permutation is seed-stable.
        for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
            std::swap(order[static_cast<std::size_t>(i)],
                      order[static_cast<std::size_t>(shuffle_rng.uniform_int(0, i))]);

        double epoch_loss = 0.0;
        int epoch_correct = 0;
        for (std::size_t start = 0; start < order.size(); start += run.batch_size) {
            const std::size_t end = std::min(order.size(), start + run.batch_size);
            const double batch_count = static_cast<double>(end - start);

            MlpGrads embed_grads = MlpGrads::zeros_like(model.curve_embed);
            MlpGrads head_grads = MlpGrads::zeros_like(model.head);
            Matrix dir_grads = Matrix::Zero(model.directions.count(), model.directions.dim());

            for (std::size_t k = start; k < end; ++k) {
                const Sample& sample = train_set[static_cast<std::size_t>(order[k])];
                const SampleEval eval = process_sample(
                    model, sample.complex, sample.label, &embed_grads, &head_grads,
                    run.learn_directions ? &dir_grads : nullptr);
                epoch_loss += eval.loss;
                epoch_correct += eval.correct ? 1 : 0;
            }

            // Mean-loss gradients.
            for (int l = 0; l < model.curve_embed.num_layers(); ++l) {
                adam_step(model.curve_embed.weights[l], embed_grads.d_weights[l] / batch_count,
                          embed_w_state[static_cast<std::size_t>(l)]);
                Matrix bias = model.curve_embed.biases[l];
                adam_step(bias, embed_grads.d_biases[l] / batch_count,
                          embed_b_state[static_cast<std::size_t>(l)]);
                model.curve_embed.biases[l] = bias;
            }
            for (int l = 0; l < model.head.num_layers(); ++l) {
                adam_step(model.head.weights[l], head_grads.d_weights[l] / batch_count,
                          head_w_state[static_cast<std::size_t>(l)]);
                Matrix bias = model.head.biases[l];
                adam_step(bias, head_grads.d_biases[l] / batch_count,
                          head_b_state[static_cast<std::size_t>(l)]);
                model.head.biases[l] = bias;
            }
            if (run.learn_directions) {
                adam_step(model.directions.directions, dir_grads / batch_count, dir_state);
                if (model.directions.constrained)
                    model.directions = model.directions.renormalized();
            }
        }

        EpochMetrics metrics;
        metrics.train_loss = epoch_loss / static_cast<double>(train_set.size());
        metrics.train_accuracy =
            static_cast<double>(epoch_correct) / static_cast<double>(train_set.size());
        double val_loss = 0.0;
        int val_correct = 0;
        for (const auto& sample : val_set) {
            const SampleEval eval =
                process_sample(model, sample.complex, sample.label, nullptr, nullptr, nullptr);
            val_loss += eval.loss;
            val_correct += eval.correct ? 1 : 0;
        }
        if (!val_set.empty()) {
            metrics.val_loss = val_loss / static_cast<double>(val_set.size());
            metrics.val_accuracy =
                static_cast<double>(val_correct) / static_cast<double>(val_set.size());
        }
        run.metrics.push_back(metrics);

        if (run.early_stop_patience > 0 && !val_set.empty()) {
            if (metrics.val_loss < best_val_loss) {
                best_val_loss = metrics.val_loss;
                epochs_since_best = 0;
            } else if (++epochs_since_best >= run.early_stop_patience) {
                break;
            }
        }
    }
}

double evaluate(const ClassifierModel& model, const Dataset& dataset) {
    if (dataset.empty()) throw std::invalid_argument("empty dataset");
    int correct = 0;
    for (const auto& sample : dataset) {
        if (sample.label < 0 || sample.label >= model.num_classes())
            throw std::invalid_argument("label out of range for the model head");
        if (argmax_lowest(forward(model, sample.complex)) == sample.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

Dataset make_two_class_dataset(int per_class, std::uint64_t seed, int min_points,
                               int max_points, double noise_sigma) {
    if (per_class < 1) throw std::invalid_argument("per_class must be positive");
    Rng rng = Rng::substream(seed, "data");
    Dataset dataset;
    dataset.reserve(static_cast<std::size_t>(2 * per_class));
    const ShapeKind kinds[2] = {ShapeKind::Circle, ShapeKind::TwoCircles};
    for (int label = 0; label < 2; ++label) {
        for (int i = 0; i < per_class; ++i) {
            ShapeSpec spec;
            spec.kind = kinds[label];
            spec.num_points = rng.uniform_int(min_points, max_points);
            spec.noise_sigma = noise_sigma;
            spec.seed = rng.next_u64();
            dataset.push_back({generate(spec), label});
        }
    }
    return dataset;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double first_fraction,
                                             std::uint64_t seed) {
    if (!(first_fraction >= 0.0 && first_fraction <= 1.0))
        throw std::invalid_argument("split fraction must lie in [0, 1]");
    std::map<int, std::vector<int>> by_label;
    for (int i = 0; i < static_cast<int>(dataset.size()); ++i)
        by_label[dataset[static_cast<std::size_t>(i)].label].push_back(i);

    Rng rng = Rng::substream(seed, "split");
    Dataset first, second;
    for (auto& [label, indices] : by_label) {
        for (int i = static_cast<int>(indices.size()) - 1; i > 0; --i)
            std::swap(indices[static_cast<std::size_t>(i)],
                      indices[static_cast<std::size_t>(rng.uniform_int(0, i))]);
        const int cut = static_cast<int>(first_fraction * static_cast<double>(indices.size()) + 0.5);
        for (int k = 0; k < static_cast<int>(indices.size()); ++k) {
            const auto& sample = dataset[static_cast<std::size_t>(indices[static_cast<std::size_t>(k)])];
            (k < cut ? first : second).push_back(sample);
        }
    }
    return {std::move(first), std::move(second)};
}

// ---------------------------------------------------------------------------
// Checkpoint format (version 1, little-endian throughout):
//   magic "DECTMDL1", u32 version,
//   u32 ambient_dim, u32 num_directions, u8 constrained,
//   f64 lambda, u32 num_heights, f64 h_min, f64 h_max,
//   u8 normalization, u8 mode, u8 pooling,
//   directions matrix (row-major f64),
//   embedding MLP, head MLP
// where an MLP is: u32 num_layers, then per layer u32 rows, u32 cols,
// row-major f64 weights, f64 biases (rows entries).
// ---------------------------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

constexpr char kMagic[8] = {'D', 'E', 'C', 'T', 'M', 'D', 'L', '1'};

void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_u8(std::ostream& os, std::uint8_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_f64(std::ostream& os, double v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}
std::uint8_t read_u8(std::istream& is) {
    std::uint8_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}
double read_f64(std::istream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

void write_matrix(std::ostream& os, const Matrix& m) {
    write_u32(os, static_cast<std::uint32_t>(m.rows()));
    write_u32(os, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) write_f64(os, m(r, c));
}

Matrix read_matrix(std::istream& is) {
    const auto rows = read_u32(is);
    const auto cols = read_u32(is);
    if (!is || static_cast<std::uint64_t>(rows) * cols > (1ull << 26))
        throw std::runtime_error("corrupt checkpoint matrix header");
    Matrix m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = read_f64(is);
    return m;
}

void write_mlp(std::ostream& os, const MlpParams& params) {
    write_u32(os, static_cast<std::uint32_t>(params.num_layers()));
    for (int l = 0; l < params.num_layers(); ++l) {
        write_matrix(os, params.weights[l]);
        for (Eigen::Index i = 0; i < params.biases[l].size(); ++i)
            write_f64(os, params.biases[l][i]);
    }
}

MlpParams read_mlp(std::istream& is) {
    MlpParams params;
    const auto layers = read_u32(is);
    if (!is || layers == 0 || layers > 64)
        throw std::runtime_error("corrupt checkpoint layer count");
    for (std::uint32_t l = 0; l < layers; ++l) {
        Matrix w = read_matrix(is);
        Vector b(w.rows());
        for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = read_f64(is);
        params.weights.push_back(std::move(w));
        params.biases.push_back(std::move(b));
    }
    return params;
}

}  // namespace

void save_model(const ClassifierModel& model, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    os.write(kMagic, sizeof kMagic);
    write_u32(os, 1);
    write_u32(os, static_cast<std::uint32_t>(model.directions.dim()));
    write_u32(os, static_cast<std::uint32_t>(model.directions.count()));
    write_u8(os, model.directions.constrained ? 1 : 0);
    write_f64(os, model.ect_config.lambda);
    write_u32(os, static_cast<std::uint32_t>(model.ect_config.num_heights));
    write_f64(os, model.ect_config.h_min);
    write_f64(os, model.ect_config.h_max);
    write_u8(os, static_cast<std::uint8_t>(model.ect_config.normalization));
    write_u8(os, static_cast<std::uint8_t>(model.ect_config.mode));
    write_u8(os, static_cast<std::uint8_t>(model.pool));
    write_matrix(os, model.directions.directions);
    write_mlp(os, model.curve_embed);
    write_mlp(os, model.head);
    if (!os) throw std::runtime_error("failed while writing '" + path.string() + "'");
}

ClassifierModel load_model(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + path.string() + "'");
    char magic[8] = {};
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw std::runtime_error("'" + path.string() + "' is not a model checkpoint");
    const auto version = read_u32(is);
    if (version != 1) throw std::runtime_error("unsupported checkpoint version");

    const auto dim = read_u32(is);
    const auto count = read_u32(is);
    const bool constrained = read_u8(is) != 0;
    EctConfig config;
    config.lambda = read_f64(is);
    config.num_heights = static_cast<int>(read_u32(is));
    config.h_min = read_f64(is);
    config.h_max = read_f64(is);
    config.normalization = static_cast<EctNormalization>(read_u8(is));
    config.mode = static_cast<EctMode>(read_u8(is));
    const auto pool = static_cast<Pooling>(read_u8(is));
    Matrix directions = read_matrix(is);
    if (directions.rows() != static_cast<Eigen::Index>(count) ||
        directions.cols() != static_cast<Eigen::Index>(dim))
        throw std::runtime_error("checkpoint direction shape mismatch");
    MlpParams embed = read_mlp(is);
    MlpParams head = read_mlp(is);
    if (!is) throw std::runtime_error("truncated checkpoint '" + path.string() + "'");

    DirectionSet dirs(std::move(directions), false);
    dirs.constrained = constrained;
    ClassifierModel model{std::move(dirs), config, std::move(embed), pool, std::move(head)};
    if (model.curve_embed.input_dim() != config.num_heights)
        throw std::runtime_error("checkpoint embedding does not match the height count");
    if (model.head.input_dim() != model.curve_embed.output_dim())
        throw std::runtime_error("checkpoint head does not match the embedding");
    return model;
}

}  // namespace dect
