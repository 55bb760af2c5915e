#include "engage/training.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "engage/errors.hpp"
#include "engage/head.hpp"

namespace engage {

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw ValidationError("train: learning_rate must be > 0");
  if (epochs < 1) throw ValidationError("train: epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0)
    throw ValidationError("train: dropout must be in [0, 1)");
  if (lambda < 0.0) throw ValidationError("train: lambda must be >= 0");
  if (hyper_layers < 1 || graph_layers < 1)
    throw ValidationError("train: layer counts must be >= 1");
  if (hidden_dim < 1) throw ValidationError("train: hidden_dim must be >= 1");
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(const std::vector<TensorRef>& params, const std::vector<Matrix>& grads) {
  if (params.size() != grads.size())
    throw ValidationError("adam: " + std::to_string(params.size()) + " tensors vs " +
                          std::to_string(grads.size()) + " gradients");
  if (m_.empty()) {
    for (const TensorRef& r : params) {
      m_.push_back(Matrix::zeros(r.tensor->rows, r.tensor->cols));
      v_.push_back(Matrix::zeros(r.tensor->rows, r.tensor->cols));
    }
  }
  if (m_.size() != params.size())
    throw ValidationError("adam: state holds " + std::to_string(m_.size()) +
                          " tensors, step got " + std::to_string(params.size()));
  ++t_;
  const double bias1 = 1.0 - std::pow(beta1_, t_);
  const double bias2 = 1.0 - std::pow(beta2_, t_);
  for (size_t i = 0; i < params.size(); ++i) {
    Matrix& theta = *params[i].tensor;
    const Matrix& g = grads[i];
    if (!theta.same_shape(g) || !theta.same_shape(m_[i]))
      throw ValidationError("adam: shape mismatch on " + params[i].name + " (" +
                            theta.shape_str() + " vs " + g.shape_str() + ")");
    for (int j = 0; j < theta.size(); ++j) {
      m_[i].data[j] = beta1_ * m_[i].data[j] + (1.0 - beta1_) * g.data[j];
      v_[i].data[j] = beta2_ * v_[i].data[j] + (1.0 - beta2_) * g.data[j] * g.data[j];
      const double m_hat = m_[i].data[j] / bias1;
      const double v_hat = v_[i].data[j] / bias2;
      theta.data[j] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

namespace {

ModelConfig model_config_from(const TrainConfig& tc, const DatasetManifest& manifest) {
  ModelConfig mc;
  mc.feature_dims = manifest.feature_dims;
  mc.hidden_dim = tc.hidden_dim;
  mc.n_classes = manifest.n_classes;
  mc.n_students = manifest.students_per_snapshot;
  mc.max_students = std::max(tc.max_students, manifest.students_per_snapshot);
  mc.hyper_layers = tc.hyper_layers;
  mc.graph_layers = tc.graph_layers;
  mc.attention_enabled = tc.attention_enabled;
  mc.attention_per_layer = tc.attention_per_layer;
  mc.ablation = tc.ablation;
  return mc;
}

double mean_correct(const std::vector<int>& labels, const std::vector<int>& preds) {
  long long correct = 0;
  for (size_t i = 0; i < labels.size(); ++i) correct += labels[i] == preds[i] ? 1 : 0;
  return labels.empty() ? 0.0 : static_cast<double>(correct) / labels.size();
}

}  // namespace

MetricsReport evaluate(ModelParameters& params, const Dataset& dataset,
                       const std::vector<int>& snapshot_ids) {
  if (snapshot_ids.empty()) throw ValidationError("evaluate: empty snapshot set");
  const ModelConfig& config = params.config;
  ModelWorkspace ws = build_workspace(config);
  std::vector<int> labels, predictions;
  std::vector<std::vector<double>> probabilities;
  ForwardOptions opts;  // inference mode: no dropout
  for (int id : snapshot_ids) {
    if (id < 0 || id >= static_cast<int>(dataset.snapshots.size()))
      throw ValidationError("evaluate: snapshot id " + std::to_string(id) + " out of range");
    Tape t;
    BoundModel bound = bind_model(t, params, ws);
    SnapshotOutput out = snapshot_forward(t, bound, config, dataset.snapshots[id], opts);
    for (size_t i = 0; i < out.predictions.size(); ++i) {
      labels.push_back(out.labels[i]);
      predictions.push_back(out.predictions[i]);
      const Matrix& p = t.value(out.probability_rows[i]);
      probabilities.emplace_back(p.data.begin(), p.data.end());
    }
  }
  return compute_metrics(labels, predictions, probabilities, config.n_classes);
}

TrainResult train(const TrainConfig& config, const Dataset& dataset) {
  config.validate();
  if (dataset.snapshots.empty()) throw ValidationError("train: dataset has no snapshots");

  SplitSpec split_spec;
  split_spec.train_fraction = config.train_fraction;
  split_spec.seed = config.seed;
  split_spec.subsample_fraction = config.subsample_fraction;
  Split split = split_dataset(dataset.manifest.n_snapshots, split_spec);
  if (split.train_ids.empty()) throw ValidationError("train: empty training split");

  const std::vector<int> train_labels = collect_labels(dataset, split.train_ids);
  const std::vector<double> weights = class_weights(train_labels, dataset.manifest.n_classes);

  ModelConfig mc = model_config_from(config, dataset.manifest);
  TrainResult result;
  result.params = ModelParameters::init(mc, config.seed);
  result.class_weights = weights;
  result.split = split;
  ModelWorkspace ws = build_workspace(mc);

  Adam optimizer(config.learning_rate);
  // The training loop draws (shuffles, dropout) from its own stream so that
  // parameter initialization and data order stay independently reproducible.
  Rng loop_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);

  std::vector<int> order = split.train_ids;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    loop_rng.shuffle(order);
    double loss_sum = 0.0;
    long long loss_rows = 0;
    std::vector<int> epoch_labels, epoch_preds;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t end = std::min(order.size(), start + config.batch_size);
      Tape t;
      BoundModel bound = bind_model(t, result.params, ws);
      ForwardOptions opts;
      opts.training = true;
      opts.dropout = config.dropout;
      opts.rng = &loop_rng;
      std::vector<Value> rows;
      std::vector<int> labels;
      for (size_t b = start; b < end; ++b) {
        SnapshotOutput out =
            snapshot_forward(t, bound, mc, dataset.snapshots[order[b]], opts);
        rows.insert(rows.end(), out.probability_rows.begin(), out.probability_rows.end());
        labels.insert(labels.end(), out.labels.begin(), out.labels.end());
        epoch_labels.insert(epoch_labels.end(), out.labels.begin(), out.labels.end());
        epoch_preds.insert(epoch_preds.end(), out.predictions.begin(), out.predictions.end());
      }
      Value loss = weighted_loss(t, rows, labels, weights, bound.ordered, config.lambda);
      t.backward(loss);
      std::vector<Matrix> grads;
      grads.reserve(bound.ordered.size());
      for (Value v : bound.ordered) grads.push_back(t.grad(v));
      optimizer.step(tensor_refs(result.params), grads);
      loss_sum += t.value(loss).at(0, 0) * static_cast<double>(labels.size());
      loss_rows += static_cast<long long>(labels.size());
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(loss_rows);
    entry.train_accuracy = mean_correct(epoch_labels, epoch_preds);
    entry.test_accuracy = split.test_ids.empty()
                              ? std::numeric_limits<double>::quiet_NaN()
                              : evaluate(result.params, dataset, split.test_ids).accuracy;
    result.log.push_back(entry);
  }

  result.train_metrics = evaluate(result.params, dataset, split.train_ids);
  if (!split.test_ids.empty())
    result.test_metrics = evaluate(result.params, dataset, split.test_ids);
  return result;
}

LayerSweepResult sweep_layers(const TrainConfig& base, const Dataset& dataset, int max_l,
                              int max_k) {
  LayerSweepResult grid;
  for (int l = 1; l <= max_l; ++l) grid.l_values.push_back(l);
  for (int k = 1; k <= max_k; ++k) grid.k_values.push_back(k);
  for (int l = 1; l <= max_l; ++l) {
    std::vector<double> row;
    for (int k = 1; k <= max_k; ++k) {
      TrainConfig cell = base;
      cell.hyper_layers = l;
      cell.graph_layers = k;
      TrainResult r = train(cell, dataset);
      row.push_back(r.test_metrics.accuracy);
    }
    grid.test_accuracy.push_back(row);
  }
  return grid;
}

std::vector<DataScaleRow> sweep_data_scale(const TrainConfig& base, const Dataset& dataset,
                                           const std::vector<double>& fractions, int trials) {
  if (trials < 1) throw ValidationError("sweep: trials must be >= 1");
  std::vector<DataScaleRow> rows;
  for (double fraction : fractions) {
    DataScaleRow row;
    row.fraction = fraction;
    for (int trial = 0; trial < trials; ++trial) {
      TrainConfig cell = base;
      cell.subsample_fraction = fraction;
      cell.seed = static_cast<std::uint64_t>(trial);
      TrainResult r = train(cell, dataset);
      row.per_trial.push_back(r.test_metrics.accuracy);
    }
    double sum = 0.0;
    for (double a : row.per_trial) sum += a;
    row.mean_accuracy = sum / row.per_trial.size();
    double sq = 0.0;
    for (double a : row.per_trial) sq += (a - row.mean_accuracy) * (a - row.mean_accuracy);
    row.std_accuracy = std::sqrt(sq / row.per_trial.size());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace engage
