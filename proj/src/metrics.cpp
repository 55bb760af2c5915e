#include "engage/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "engage/errors.hpp"

namespace engage {

double roc_auc(const std::vector<int>& positive, const std::vector<double>& scores) {
  if (positive.size() != scores.size())
    throw ValidationError("roc_auc: " + std::to_string(positive.size()) + " labels vs " +
                          std::to_string(scores.size()) + " scores");
  const int n = static_cast<int>(scores.size());
  long long n_pos = 0;
  for (int p : positive) n_pos += p != 0 ? 1 : 0;
  const long long n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return 0.5;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] < scores[b]; });
  // Average ranks across tie groups, then sum the positives' ranks.
  double pos_rank_sum = 0.0;
  int i = 0;
  while (i < n) {
    int j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * ((i + 1) + j);  // 1-based ranks i+1 .. j
    for (int k = i; k < j; ++k)
      if (positive[order[k]] != 0) pos_rank_sum += avg_rank;
    i = j;
  }
  const double n_pos_d = static_cast<double>(n_pos);
  return (pos_rank_sum - n_pos_d * (n_pos_d + 1.0) / 2.0) /
         (n_pos_d * static_cast<double>(n_neg));
}

MetricsReport compute_metrics(const std::vector<int>& labels,
                              const std::vector<int>& predictions,
                              const std::vector<std::vector<double>>& probabilities,
                              int n_classes) {
  const int n = static_cast<int>(labels.size());
  if (n == 0) throw ValidationError("metrics: empty sample set");
  if (predictions.size() != labels.size() || probabilities.size() != labels.size())
    throw ValidationError("metrics: labels/predictions/probabilities sizes differ");
  if (n_classes < 2) throw ValidationError("metrics: need at least 2 classes");

  MetricsReport r;
  r.n_samples = n;
  r.confusion.assign(n_classes, std::vector<long long>(n_classes, 0));
  long long correct = 0;
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes || predictions[i] < 0 ||
        predictions[i] >= n_classes)
      throw ValidationError("metrics: sample " + std::to_string(i) + " outside [0, " +
                            std::to_string(n_classes) + ")");
    if (static_cast<int>(probabilities[i].size()) != n_classes)
      throw ValidationError("metrics: probability row " + std::to_string(i) +
                            " has wrong length");
    ++r.confusion[labels[i]][predictions[i]];
    if (labels[i] == predictions[i]) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / n;

  // Per-class precision/recall; empty denominators give 0 (keeps macro-F1
  // total when a class is never predicted or never present).
  double f1_sum = 0.0;
  for (int c = 0; c < n_classes; ++c) {
    long long true_c = 0, pred_c = 0;
    for (int k = 0; k < n_classes; ++k) {
      true_c += r.confusion[c][k];
      pred_c += r.confusion[k][c];
    }
    const long long tp = r.confusion[c][c];
    const double precision = pred_c > 0 ? static_cast<double>(tp) / pred_c : 0.0;
    const double recall = true_c > 0 ? static_cast<double>(tp) / true_c : 0.0;
    r.precision.push_back(precision);
    r.recall.push_back(recall);
    f1_sum += precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall)
                                       : 0.0;
  }
  r.macro_f1 = f1_sum / n_classes;

  if (n_classes == 2) {
    std::vector<int> positive(n);
    std::vector<double> scores(n);
    for (int i = 0; i < n; ++i) {
      positive[i] = labels[i] == 1 ? 1 : 0;
      scores[i] = probabilities[i][1];
    }
    r.auc = roc_auc(positive, scores);
  } else {
    // Macro one-vs-rest over class probability columns.
    double auc_sum = 0.0;
    for (int c = 0; c < n_classes; ++c) {
      std::vector<int> positive(n);
      std::vector<double> scores(n);
      for (int i = 0; i < n; ++i) {
        positive[i] = labels[i] == c ? 1 : 0;
        scores[i] = probabilities[i][c];
      }
      auc_sum += roc_auc(positive, scores);
    }
    r.auc = auc_sum / n_classes;
  }
  return r;
}

}  // namespace engage
