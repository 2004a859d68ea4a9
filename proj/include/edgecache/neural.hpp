#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgecache/features.hpp"
#include "edgecache/scenario.hpp"

namespace edgecache {

/// Convolutions (same padding, ReLU) followed by dense ReLU layers and a
/// softmax output layer.
struct Architecture {
  int input_rows = 5;
  int input_cols = 33;
  int kernel = 3;
  std::vector<int> conv_maps{16, 32};
  std::vector<int> hidden{128};
  int outputs = 6;

  int input_size() const { return input_rows * input_cols; }
  bool operator==(const Architecture&) const = default;
};

nlohmann::json architecture_to_json(const Architecture& a);
Architecture architecture_from_json(const nlohmann::json& j);

/// Weights are column-major (outputs x inputs); conv inputs are ordered
/// (in_map, kernel_row, kernel_col).
struct Layer {
  std::vector<double> weights;
  std::vector<double> bias;

  bool operator==(const Layer&) const = default;
};

/// Layer list: conv layers first, then dense layers, the last one producing logits.
using Parameters = std::vector<Layer>;

struct CnnModel {
  Architecture arch;
  std::uint64_t seed = 0;
  Parameters layers;

  int conv_layers() const { return static_cast<int>(arch.conv_maps.size()); }
  std::size_t parameter_count() const;
  /// Flat parameter access, in layer order, weights before bias.
  double& parameter(std::size_t i);

  bool operator==(const CnnModel&) const = default;
};

/// One model per flow row of the input image.
struct CnnBank {
  Architecture arch;
  std::uint64_t seed = 0;
  int epoch = 0;
  std::vector<CnnModel> models;

  int size() const { return static_cast<int>(models.size()); }
  bool operator==(const CnnBank&) const = default;
};

/// Zero-initialized layers with the architecture's shapes.
Parameters zero_parameters(const Architecture& arch);

/// He-uniform weights and zero biases, keyed on (seed, model index).
CnnBank init_bank(const Architecture& arch, int bank_size, int edge_clouds, std::uint64_t seed);

std::vector<double> forward(const CnnModel& m, std::span<const double> pixels);
std::vector<double> forward(const CnnModel& m, const FeatureImage& img);

/// Cross entropy against a one-hot label; predictions clamped below at 1e-12.
double loss(std::span<const double> pred, std::span<const double> label);
double loss(std::span<const double> pred, int label);

/// Summed loss gradients over a batch (not averaged). Returns the summed loss.
double accumulate_gradients(const CnnModel& m, const std::vector<std::span<const double>>& images,
                            const std::vector<int>& labels, Parameters& grads);

/// Loss gradient for one image and class label.
Parameters gradients(const CnnModel& m, std::span<const double> pixels, int label);
Parameters gradients(const CnnModel& m, const FeatureImage& img, int label);

struct TrainOptions {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch = 32;
  int epochs = 100;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct ModelReport {
  std::vector<double> train_loss;  // entry 0 is the loss before training
  std::vector<double> test_loss;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  int train_samples = 0;
  int test_samples = 0;
};

struct TrainReport {
  std::vector<ModelReport> models;
  double seconds = 0.0;
};

nlohmann::json train_report_to_json(const TrainReport& r);

using EpochFn = std::function<void(int model, int epoch, double train_loss)>;

/// Trains model k on row k's label, skipping samples where that flow is uncached.
TrainReport train_bank(CnnBank& bank, const Dataset& data, const TrainOptions& opts,
                       const EpochFn& progress = {});

void save_bank(const std::string& path, const CnnBank& bank);
CnnBank load_bank(const std::string& path);

}  // namespace edgecache
