#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dect/grad.hpp"
#include "dect/optim.hpp"
#include "dect/rng.hpp"

namespace dect {

/// Fully connected network parameters. Hidden layers use ReLU, the output
/// layer is linear.
struct MlpParams {
    std::vector<Matrix> weights;  // layer l: (out_l x in_l)
    std::vector<Vector> biases;

    static MlpParams init(const std::vector<int>& dims, Rng& rng);

    int num_layers() const { return static_cast<int>(weights.size()); }
    int input_dim() const { return static_cast<int>(weights.front().cols()); }
    int output_dim() const { return static_cast<int>(weights.back().rows()); }

    Vector forward(const Vector& x) const;
};

enum class Pooling { Sum, Mean };

/// End-to-end differentiable classifier: smooth transform (trainable
/// directions) -> per-curve MLP embedding -> permutation-invariant pooling
/// over directions -> MLP head producing class logits.
struct ClassifierModel {
    DirectionSet directions;
    EctConfig ect_config;
    MlpParams curve_embed;  // num_heights -> embedding
    Pooling pool = Pooling::Mean;
    MlpParams head;         // embedding -> class logits

    int num_classes() const { return head.output_dim(); }
};

/// Default architecture: embedding 32-32 hidden with a 16-dim output, head
/// with three hidden layers of 25 units.
ClassifierModel make_classifier(int ambient_dim, int num_classes, int num_directions,
                                const EctConfig& config, std::uint64_t seed,
                                bool constrained_directions = true);

struct Sample {
    GeometricComplex complex;
    int label = 0;
};
using Dataset = std::vector<Sample>;

struct EpochMetrics {
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainRun {
    std::uint64_t seed = 0;
    int epochs = 100;  // cap; early stopping may end sooner
    int batch_size = 16;
    double lr = 1e-3;
    bool learn_directions = true;
    /// Stop when validation loss has not improved for this many epochs
    /// (0 disables early stopping).
    int early_stop_patience = 0;
    std::vector<EpochMetrics> metrics;
};

/// Class logits for one complex. The smooth transform is used at train and
/// evaluation time alike so both see the same representation.
Vector forward(const ClassifierModel& model, const GeometricComplex& complex);

/// Row r holds the logits of complexes[r]; samples may mix cardinalities
/// and modalities freely.
Matrix forward_batch(const ClassifierModel& model,
                     const std::vector<const GeometricComplex*>& complexes);

/// Cross-entropy of one sample and its gradient with respect to the
/// direction coordinates, through the full chain (head, pooling, embedding,
/// smooth transform). Mostly useful for gradient checking.
std::pair<double, Matrix> sample_loss_direction_gradient(const ClassifierModel& model,
                                                         const GeometricComplex& complex,
                                                         int label);

/// Minibatch Adam training with cross-entropy loss. A stratified 20% of
/// `dataset` is held out for validation metrics. Gradients reach the head,
/// pooling and embedding always, and the directions when
/// run.learn_directions is set. Deterministic under a fixed run.seed.
/// Throws std::invalid_argument on an empty dataset or fewer than two
/// classes.
void train(ClassifierModel& model, const Dataset& dataset, TrainRun& run);

/// Fraction of argmax-correct predictions; logit ties resolve to the lowest
/// class index. Throws std::invalid_argument on an empty dataset.
double evaluate(const ClassifierModel& model, const Dataset& dataset);

/// Binary checkpoint of every model parameter (versioned, little-endian
/// 64-bit floats; see io docs in the README).
void save_model(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_model(const std::filesystem::path& path);

/// Desk-scale benchmark dataset: label 0 = noisy circle, label 1 = noisy
/// pair of circles, cardinalities drawn from [min_points, max_points].
Dataset make_two_class_dataset(int per_class, std::uint64_t seed,
                               int min_points = 48, int max_points = 80,
                               double noise_sigma = 0.05);

/// Deterministic stratified split; `first_fraction` of every class goes to
/// the first part.
std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset,
                                             double first_fraction,
                                             std::uint64_t seed);

}  // namespace dect
