#ifndef SEGCAL_MODEL_HPP
#define SEGCAL_MODEL_HPP

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "segcal/volume.hpp"

namespace segcal {

// Multi-channel real-valued input volume, channel fastest. 2D images are
// nz = 1 stacks; convolutions run per slice.
struct FeatureVolume {
  GridMeta meta;
  int channels = 1;
  std::vector<double> data;  // [z][y][x][c]

  std::size_t size() const { return meta.voxel_count(); }
  bool operator==(const FeatureVolume&) const = default;
};

enum class Head { Softmax, Sigmoid };

// Three-layer fully-convolutional segmenter:
// 3x3 conv (C_in -> 8) + ReLU, 3x3 conv (8 -> 8) + ReLU, optional dropout,
// 1x1 conv (8 -> K), softmax or sigmoid head. Same-padding with zeros.
struct ToyModel {
  static constexpr int kHidden = 8;

  int in_channels = 1;
  int classes = 2;
  Head head = Head::Softmax;
  double dropout_p = 0.0;
  std::uint64_t seed = 0;

  std::vector<double> w1, b1;  // [8][C_in][3][3], [8]
  std::vector<double> w2, b2;  // [8][8][3][3],   [8]
  std::vector<double> w3, b3;  // [K][8],         [K]

  std::size_t param_count() const;
  // Flattened view in declared field order (w1, b1, w2, b2, w3, b3).
  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);
};

// He-style Gaussian initialization, std = sqrt(2 / fan_in), seeded.
ToyModel init_model(int in_channels, int classes, Head head, double dropout_p,
                    std::uint64_t seed);

// Forward pass. Dropout fires iff sample_dropout (training or MC-dropout
// inference); rng supplies the dropout mask stream.
ProbabilityVolume forward(const ToyModel& model, const FeatureVolume& x,
                          bool sample_dropout, std::mt19937_64& rng);
ProbabilityVolume forward(const ToyModel& model, const FeatureVolume& x);

enum class LossKind { CrossEntropy, Dice };
enum class WeightMode { InverseFrequency, Uniform, Explicit };

struct LossConfig {
  LossKind kind = LossKind::CrossEntropy;
  std::vector<double> class_weights;  // length K; filled by weight_mode
  double epsilon = 1.0;               // Dice smoothing
  WeightMode weight_mode = WeightMode::Uniform;
};

struct LossValue {
  double loss = 0.0;
  // CE: gradient w.r.t. pre-softmax logits. Dice: gradient w.r.t.
  // probabilities. Channel-fastest, matching the probs layout.
  std::vector<double> grad;
};

// Weighted cross-entropy over N voxels (softmax probabilities expected).
LossValue ce_loss(const std::vector<double>& probs,
                  const std::vector<std::uint8_t>& labels, int classes,
                  const LossConfig& cfg);

// Negative smoothed soft Dice summed over all K classes.
LossValue dice_loss(const std::vector<double>& probs,
                    const std::vector<std::uint8_t>& labels, int classes,
                    const LossConfig& cfg);

// omega_k = N_total / (K * count_k); errors if any class never occurs.
std::vector<double> inverse_frequency_weights(
    const std::vector<const LabelVolume*>& train_labels, int classes);

struct TrainConfig {
  double lr = 0.005;
  int batch_size = 5;
  int epochs = 100;
  int early_stop_patience = 30;  // epochs without val-Dice improvement
  // Plateau schedule: halve lr when val Dice has not improved by
  // plateau_threshold within plateau_patience epochs.
  int plateau_patience = 10;
  double plateau_threshold = 0.001;
  double lr_factor = 0.5;
  std::uint64_t seed = 0;
  // Adam moments
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_dice = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  ToyModel model;  // checkpoint at the best validation Dice epoch
  std::vector<EpochStats> history;
  double best_val_dice = 0.0;
};

using Dataset = std::vector<std::pair<FeatureVolume, LabelVolume>>;

TrainResult train(ToyModel model, const Dataset& train_set,
                  const Dataset& val_set, const LossConfig& loss,
                  const TrainConfig& cfg);

// M independent train() runs with member-indexed seeds derived from
// cfg.seed; member m reseeds both initialization and shuffling. Head defaults
// to sigmoid for Dice loss and softmax for CE, matching the training recipe.
std::vector<TrainResult> train_ensemble(int count, const Dataset& train_set,
                                        const Dataset& val_set,
                                        const LossConfig& loss,
                                        const TrainConfig& cfg,
                                        double dropout_p = 0.0);

// Mean Dice over foreground classes present in truth; used for validation
// checkpointing. Classes absent from both pred and truth are skipped.
double mean_foreground_dice(const LabelVolume& pred, const LabelVolume& truth);

// TOYM1 checkpoint container: magic line, canonical JSON header, float64
// little-endian parameters in declared field order.
void save_model(const ToyModel& model, const std::filesystem::path& path);
ToyModel load_model(const std::filesystem::path& path);

std::string history_csv(const std::vector<EpochStats>& history);

// Full loss + gradient w.r.t. every model parameter for one case; drives
// training and the finite-difference checks.
struct ParamGrad {
  double loss = 0.0;
  std::vector<double> grad;  // same layout as ToyModel::flatten()
};
ParamGrad loss_and_param_grad(const ToyModel& model, const FeatureVolume& x,
                              const LabelVolume& y, const LossConfig& loss,
                              bool sample_dropout, std::mt19937_64& rng);

}  // namespace segcal

#endif
