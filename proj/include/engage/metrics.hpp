#pragma once

#include <vector>

namespace engage {

struct MetricsReport {
  int n_samples = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double auc = 0.0;  // ROC-AUC for binary, macro one-vs-rest for more classes
  std::vector<std::vector<long long>> confusion;  // [true][predicted]
  std::vector<double> precision;                  // per class
  std::vector<double> recall;                     // per class
};

// Rank-based ROC-AUC with the average-rank tie correction. Degenerate inputs
// (a single class present) return 0.5.
double roc_auc(const std::vector<int>& positive, const std::vector<double>& scores);

// labels/predictions in [0, n_classes); probabilities holds one row of
// n_classes entries per sample, used for the AUC.
MetricsReport compute_metrics(const std::vector<int>& labels,
                              const std::vector<int>& predictions,
                              const std::vector<std::vector<double>>& probabilities,
                              int n_classes);

}  // namespace engage
