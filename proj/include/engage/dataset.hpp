#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "engage/common.hpp"
#include "engage/rng.hpp"

namespace engage {

struct DatasetManifest {
  std::array<int, kNumFeatureTypes> feature_dims = {0, 0, 0};  // d_e, d_a, d_u
  int n_classes = 0;
  int n_snapshots = 0;
  int students_per_snapshot = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> label_names;
};

struct StudentRecord {
  int index = -1;
  std::array<std::vector<double>, kNumFeatureTypes> features;
  int label = -1;
};

struct FeatureSnapshot {
  std::string snapshot_id;
  std::vector<StudentRecord> students;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<FeatureSnapshot> snapshots;
};

// Line-delimited structured text: a manifest record, then one record per
// snapshot. Floats are printed shortest-round-trip, so write -> load is
// bit-exact. Loading validates every invariant and names the offending
// snapshot id and field on failure.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& ds, const std::string& path);

std::vector<std::string> default_label_names(int n_classes);

// Planted-contagion generator. Each snapshot draws a group mood m and a
// per-snapshot contagion strength rho from `rho_choices`; each student draws
// a base engagement b_i. Latent engagement z_i = (1-rho)*b_i + rho*m, binned
// into C classes by standard-normal quantiles. Each type's signal channel is
// a noisy readout of the individual deviation u_i = b_i - m (gains differ per
// type), so a single student's features pin down only u_i; the group mood,
// which dominates the label at high rho, emerges only from pooling deviations
// across students. Each student independently loses tracking with small
// probability per snapshot: signal channels then read noise at the scale of
// real deviations, and channel 1 of upper_body carries a positive
// tracking-loss flag, so clean pooling requires spotting the flag on one
// node and excluding that student's whole row before aggregation. Remaining
// channels carry iid nuisance noise at a per-type scale.
struct SynthConfig {
  int n_students = 6;
  int n_snapshots = 1000;
  int n_classes = 2;
  std::vector<double> rho_choices = {0.7};
  double noise = 0.3;
  std::uint64_t seed = 0;
  std::array<int, kNumFeatureTypes> feature_dims = {512, 49, 34};
};

Dataset generate_synthetic(const SynthConfig& config);

// Inverse-frequency class weights normalized to mean 1 over classes; every
// class must be present.
std::vector<double> class_weights(const std::vector<int>& labels, int n_classes);

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  double subsample_fraction = 1.0;  // applied to the train side, after the split
};

struct Split {
  std::vector<int> train_ids;
  std::vector<int> test_ids;
};

// Deterministic shuffle-split over snapshot indices. Snapshots are never
// divided across sides; subsampling keeps a prefix of the shuffled train ids.
Split split_dataset(int n_snapshots, const SplitSpec& spec);

// Flat per-student labels of the selected snapshots, in (snapshot, student)
// order.
std::vector<int> collect_labels(const Dataset& ds, const std::vector<int>& snapshot_ids);

}  // namespace engage
