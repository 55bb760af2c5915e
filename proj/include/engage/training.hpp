#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "engage/dataset.hpp"
#include "engage/matrix.hpp"
#include "engage/metrics.hpp"
#include "engage/model.hpp"

namespace engage {

struct TrainConfig {
  double learning_rate = 1e-5;
  int epochs = 200;
  int batch_size = 8;  // snapshots per optimizer step
  double dropout = 0.5;
  double lambda = 1e-4;  // L2 coefficient
  int hyper_layers = 3;
  int graph_layers = 3;
  int hidden_dim = 64;
  std::uint64_t seed = 0;
  bool attention_enabled = true;
  bool attention_per_layer = true;
  Ablation ablation = Ablation::none;
  double train_fraction = 0.8;
  double subsample_fraction = 1.0;
  int max_students = 16;

  void validate() const;
};

// Standard Adam with bias correction. State is owned here, aligned with the
// tensor list given to step(); shapes are checked on every call.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(const std::vector<TensorRef>& params, const std::vector<Matrix>& grads);
  int steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<Matrix> m_, v_;
};

struct EpochLog {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;  // training-mode predictions (dropout active)
  double test_accuracy = 0.0;   // clean evaluation; NaN when the test side is empty
};

struct TrainResult {
  ModelParameters params;
  std::vector<EpochLog> log;
  MetricsReport train_metrics;  // clean evaluation on the train split
  MetricsReport test_metrics;   // n_samples == 0 when the test side is empty
  std::vector<double> class_weights;
  Split split;
};

TrainResult train(const TrainConfig& config, const Dataset& dataset);

// Clean (dropout-off) evaluation of the given snapshots.
MetricsReport evaluate(ModelParameters& params, const Dataset& dataset,
                       const std::vector<int>& snapshot_ids);

struct LayerSweepResult {
  std::vector<int> l_values;
  std::vector<int> k_values;
  std::vector<std::vector<double>> test_accuracy;  // [l][k]
};
LayerSweepResult sweep_layers(const TrainConfig& base, const Dataset& dataset, int max_l = 6,
                              int max_k = 6);

struct DataScaleRow {
  double fraction = 0.0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::vector<double> per_trial;
};
std::vector<DataScaleRow> sweep_data_scale(const TrainConfig& base, const Dataset& dataset,
                                           const std::vector<double>& fractions,
                                           int trials = 5);

}  // namespace engage
