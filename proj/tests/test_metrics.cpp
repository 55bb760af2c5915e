#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "engage/errors.hpp"
#include "engage/metrics.hpp"
#include "engage/rng.hpp"

using namespace engage;

namespace {

// Pair-counting AUC oracle: fraction of (positive, negative) pairs where the
// positive outranks the negative, ties counting half.
double auc_pairs(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  long long pairs = 0;
  for (size_t p = 0; p < scores.size(); ++p) {
    if (labels[p] != 1) continue;
    for (size_t n = 0; n < scores.size(); ++n) {
      if (labels[n] != 0) continue;
      ++pairs;
      if (scores[p] > scores[n])
        wins += 1.0;
      else if (scores[p] == scores[n])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

std::vector<std::vector<double>> binary_rows(const std::vector<double>& positive_scores) {
  std::vector<std::vector<double>> rows;
  for (double s : positive_scores) rows.push_back({1.0 - s, s});
  return rows;
}

std::vector<int> argmax_predictions(const std::vector<std::vector<double>>& rows) {
  std::vector<int> out;
  for (const auto& row : rows) {
    int best = 0;
    for (size_t c = 1; c < row.size(); ++c)
      if (row[c] > row[best]) best = static_cast<int>(c);
    out.push_back(best);
  }
  return out;
}

}  // namespace

TEST_CASE("fixture: perfect predictions give exactly 1.0 across the board") {
  std::vector<int> labels = {0, 1, 0, 1, 1, 0, 0, 1, 1, 0};
  std::vector<double> scores;
  for (int y : labels) scores.push_back(y == 1 ? 0.9 : 0.1);
  const auto rows = binary_rows(scores);
  MetricsReport r = compute_metrics(labels, argmax_predictions(rows), rows, 2);
  CHECK(r.accuracy == 1.0);
  CHECK(r.macro_f1 == 1.0);
  CHECK(r.auc == 1.0);
  CHECK(r.n_samples == 10);
  CHECK(r.confusion[0][0] == 5);
  CHECK(r.confusion[1][1] == 5);
  CHECK(r.confusion[0][1] == 0);
  CHECK(r.confusion[1][0] == 0);
}

TEST_CASE("fixture: inverted predictions give exactly 0.0 across the board") {
  std::vector<int> labels = {0, 1, 0, 1, 1, 0, 0, 1, 1, 0};
  std::vector<double> scores;
  for (int y : labels) scores.push_back(y == 1 ? 0.1 : 0.9);  // anti-ordered
  const auto rows = binary_rows(scores);
  MetricsReport r = compute_metrics(labels, argmax_predictions(rows), rows, 2);
  CHECK(r.accuracy == 0.0);
  CHECK(r.macro_f1 == 0.0);
  CHECK(r.auc == 0.0);
}

TEST_CASE("fixture: constant predictor on a balanced set") {
  std::vector<int> labels = {0, 1, 0, 1, 1, 0, 0, 1, 1, 0};
  std::vector<std::vector<double>> rows(10, {0.6, 0.4});  // always predicts class 0
  MetricsReport r = compute_metrics(labels, argmax_predictions(rows), rows, 2);
  CHECK(r.accuracy == 0.5);
  // Class 0: precision 1/2, recall 1, F1 = 2/3. Class 1: F1 = 0. Macro = 1/3.
  CHECK(r.macro_f1 == 1.0 / 3.0);
  CHECK(r.auc == 0.5);  // all scores tied
}

TEST_CASE("auc: tie group averaging matches the hand-worked case") {
  // Scores 0.1, 0.4, 0.4, 0.8 with labels 0, 0, 1, 1. Average ranks are
  // 1, 2.5, 2.5, 4, so the positive rank sum is 6.5 and AUC = (6.5-3)/4.
  const double auc = roc_auc({0, 0, 1, 1}, {0.1, 0.4, 0.4, 0.8});
  CHECK(auc == 0.875);
}

TEST_CASE("auc: rank formulation agrees with pair counting on random draws") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(40));
    std::vector<double> scores;
    std::vector<int> labels;
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < n; ++i) {
      // Coarse grid so ties actually happen.
      scores.push_back(static_cast<double>(rng.below(5)) / 4.0);
      labels.push_back(static_cast<int>(rng.below(2)));
      has_pos = has_pos || labels.back() == 1;
      has_neg = has_neg || labels.back() == 0;
    }
    if (!has_pos || !has_neg) continue;
    CHECK(roc_auc(labels, scores) == doctest::Approx(auc_pairs(scores, labels)).epsilon(1e-12));
  }
}

TEST_CASE("auc: single-class degenerate input scores 0.5") {
  CHECK(roc_auc({1, 1, 1}, {0.2, 0.7, 0.9}) == 0.5);
  CHECK(roc_auc({0, 0, 0}, {0.2, 0.7, 0.9}) == 0.5);
}

TEST_CASE("ternary: macro one-vs-rest AUC averages the per-class values") {
  // Three samples, one per class, scored perfectly: every one-vs-rest AUC is 1.
  std::vector<int> labels = {0, 1, 2};
  std::vector<std::vector<double>> rows = {
      {0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}};
  MetricsReport r = compute_metrics(labels, argmax_predictions(rows), rows, 3);
  CHECK(r.accuracy == 1.0);
  CHECK(r.macro_f1 == 1.0);
  CHECK(r.auc == 1.0);

  // Mixed case checked against the pair-counting oracle per class.
  labels = {0, 1, 2, 1, 0, 2, 2, 1};
  rows = {{0.5, 0.3, 0.2}, {0.2, 0.5, 0.3}, {0.3, 0.3, 0.4}, {0.6, 0.2, 0.2},
          {0.2, 0.6, 0.2}, {0.1, 0.2, 0.7}, {0.4, 0.4, 0.2}, {0.3, 0.4, 0.3}};
  double expected = 0.0;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> scores;
    std::vector<int> onevrest;
    for (size_t i = 0; i < labels.size(); ++i) {
      scores.push_back(rows[i][c]);
      onevrest.push_back(labels[i] == c ? 1 : 0);
    }
    expected += auc_pairs(scores, onevrest) / 3.0;
  }
  MetricsReport mixed = compute_metrics(labels, argmax_predictions(rows), rows, 3);
  CHECK(mixed.auc == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("precision and recall populate from the confusion matrix") {
  // pred:  0 0 1 1 1 0   true: 0 1 1 1 0 0
  std::vector<int> predictions = {0, 0, 1, 1, 1, 0};
  std::vector<int> labels = {0, 1, 1, 1, 0, 0};
  std::vector<std::vector<double>> rows;
  for (int p : predictions) rows.push_back(p == 1 ? std::vector<double>{0.2, 0.8}
                                                  : std::vector<double>{0.8, 0.2});
  MetricsReport r = compute_metrics(labels, predictions, rows, 2);
  CHECK(r.confusion[0][0] == 2);
  CHECK(r.confusion[0][1] == 1);
  CHECK(r.confusion[1][0] == 1);
  CHECK(r.confusion[1][1] == 2);
  CHECK(r.precision[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(r.recall[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(r.precision[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(r.recall[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(r.accuracy == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("accuracy equals mean correctness on random inputs") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(30));
    std::vector<int> predictions, labels;
    std::vector<std::vector<double>> rows;
    double correct = 0.0;
    for (int i = 0; i < n; ++i) {
      predictions.push_back(static_cast<int>(rng.below(2)));
      labels.push_back(static_cast<int>(rng.below(2)));
      rows.push_back(predictions.back() == 1 ? std::vector<double>{0.3, 0.7}
                                             : std::vector<double>{0.7, 0.3});
      if (predictions.back() == labels.back()) correct += 1.0;
    }
    MetricsReport r = compute_metrics(labels, predictions, rows, 2);
    CHECK(r.accuracy == doctest::Approx(correct / n).epsilon(1e-12));
    long long trace = 0;
    for (int c = 0; c < 2; ++c) trace += r.confusion[c][c];
    CHECK(static_cast<double>(trace) / n == doctest::Approx(r.accuracy).epsilon(1e-12));
  }
}

TEST_CASE("validation: mismatched sizes and bad labels are rejected") {
  std::vector<std::vector<double>> rows = {{0.5, 0.5}};
  CHECK_THROWS_AS(compute_metrics({0, 1}, {0}, rows, 2), ValidationError);
  CHECK_THROWS_AS(compute_metrics({0}, {2}, rows, 2), ValidationError);
  CHECK_THROWS_AS(compute_metrics({2}, {0}, rows, 2), ValidationError);
  CHECK_THROWS_AS(compute_metrics({0}, {0}, {{0.5}}, 2), ValidationError);
  CHECK_THROWS_AS(compute_metrics({}, {}, {}, 2), ValidationError);
  std::vector<double> short_scores = {0.5};
  CHECK_THROWS_AS(roc_auc({0, 1}, short_scores), ValidationError);
}
