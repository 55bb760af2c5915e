#pragma once

#include <vector>

#include "engage/common.hpp"
#include "engage/matrix.hpp"
#include "engage/rng.hpp"
#include "engage/tape.hpp"

namespace engage {

// Ordinary pairwise graph over the same 3N nodes. Two nodes are adjacent when
// they share a feature type across different students, or share a student
// across different feature types. For N >= 2 every node has degree N+1.
struct PairGraphTopology {
  int n_students = 0;
  int n_nodes = 0;     // 3N
  Matrix adjacency;    // 3N x 3N, binary, zero diagonal
  Matrix laplacian;    // I - D^-1/2 A D^-1/2
  Matrix filter_low;   // 2I - laplacian
  Matrix filter_high;  // laplacian
};

PairGraphTopology build_pair_graph(int n_students);

// Learnable state of the frequency stream: one low-pass and one high-pass
// feature transform per layer.
struct FreqStreamParams {
  std::vector<Matrix> low_transforms;   // K matrices, Dh x Dh
  std::vector<Matrix> high_transforms;  // K matrices, Dh x Dh

  void init(int hidden_dim, int layers, Rng& rng);
};

struct FreqStreamNodes {
  std::vector<Value> low_transforms;
  std::vector<Value> high_transforms;
};

struct PairTopoBinding {
  const PairGraphTopology* topo = nullptr;
  Value filter_low;
  Value filter_high;
};

PairTopoBinding bind_pair_topology(Tape& t, const PairGraphTopology& topo);

// One layer: the low- and high-pass filtered features get separate
// transforms, and their sum passes through a ReLU.
Value freq_layer(Tape& t, Value features, const PairTopoBinding& topo,
                 const FreqStreamNodes& params, int layer);

struct FreqForwardOptions {
  int layers = 3;
  double dropout = 0.0;
  bool training = false;
  Rng* rng = nullptr;
};

// Full stream: stacked frequency layers over the encoded node features.
Value multifrequency_forward(Tape& t, Value encoded, const PairTopoBinding& topo,
                             const FreqStreamNodes& params,
                             const FreqForwardOptions& opts);

}  // namespace engage
