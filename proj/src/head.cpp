#include "engage/head.hpp"

#include <string>

#include "engage/errors.hpp"

namespace engage {

void HeadParams::init(int fused_len, int classes, Rng& rng) {
  weights = init_linear(fused_len, classes, rng);
  bias = Matrix::zeros(1, classes);
}

Value fuse(Tape& t, std::optional<Value> hyper_out, std::optional<Value> freq_out,
           int student) {
  if (!hyper_out && !freq_out) {
    throw ValidationError("fuse: no stream output to fuse");
  }
  std::vector<Value> parts;
  for (int type = 0; type < kNumFeatureTypes; ++type) {
    const int node = node_id(student, type);
    if (hyper_out) parts.push_back(t.slice_rows(*hyper_out, node, 1));
    if (freq_out) parts.push_back(t.slice_rows(*freq_out, node, 1));
  }
  return t.concat_row_vectors(parts);
}

Classification classify(Tape& t, Value fused, const HeadNodes& head) {
  Value logits = t.add(t.matmul(t.relu(fused), head.weights), head.bias);
  Classification c;
  c.probabilities = t.softmax_row(logits);
  const Matrix& p = t.value(c.probabilities);
  c.predicted = 0;
  for (int j = 1; j < p.cols; ++j) {
    if (p.at(0, j) > p.at(0, c.predicted)) c.predicted = j;
  }
  return c;
}

Value weighted_loss(Tape& t, const std::vector<Value>& probability_rows,
                    const std::vector<int>& labels,
                    const std::vector<double>& class_weights,
                    const std::vector<Value>& params, double lambda) {
  if (probability_rows.empty()) {
    throw ValidationError("weighted_loss: empty batch");
  }
  if (probability_rows.size() != labels.size()) {
    throw ValidationError("weighted_loss: " + std::to_string(probability_rows.size()) +
                          " probability rows vs " + std::to_string(labels.size()) +
                          " labels");
  }
  const int classes = t.value(probability_rows[0]).cols;
  if (static_cast<int>(class_weights.size()) != classes) {
    throw ValidationError("weighted_loss: " + std::to_string(class_weights.size()) +
                          " class weights for " + std::to_string(classes) + " classes");
  }
  Value acc;
  bool have = false;
  for (size_t i = 0; i < probability_rows.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw ValidationError("weighted_loss: label " + std::to_string(labels[i]) +
                            " outside [0, " + std::to_string(classes) + ")");
    }
    Value term = t.scale(t.log_clamped(t.pick(probability_rows[i], 0, labels[i])),
                         -class_weights[labels[i]]);
    acc = have ? t.add(acc, term) : term;
    have = true;
  }
  Value loss = t.scale(acc, 1.0 / static_cast<double>(probability_rows.size()));
  if (lambda != 0.0) {
    Value reg;
    bool have_reg = false;
    for (Value p : params) {
      Value sq = t.sum(t.hadamard(p, p));
      reg = have_reg ? t.add(reg, sq) : sq;
      have_reg = true;
    }
    if (have_reg) loss = t.add(loss, t.scale(reg, lambda));
  }
  return loss;
}

}  // namespace engage
