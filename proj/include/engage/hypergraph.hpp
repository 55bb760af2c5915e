#pragma once

#include <vector>

#include "engage/common.hpp"
#include "engage/matrix.hpp"
#include "engage/rng.hpp"
#include "engage/tape.hpp"

namespace engage {

// Hypergraph over the 3N per-student feature nodes of one snapshot.
//
// Hyperedge columns: [0, N) are student edges (the three nodes of one
// student), [N, N+3) are group edges (all N nodes of one feature type, in
// type order). Every node sits on exactly one student edge and one group
// edge, so every row of the incidence matrix has exactly two ones.
struct HypergraphTopology {
  int n_students = 0;
  int n_nodes = 0;  // 3N
  int n_edges = 0;  // N+3
  Matrix incidence;  // n_nodes x n_edges, binary
  Matrix edge_mean;  // n_edges x n_nodes; row e averages the members of e

  bool is_student_edge(int e) const { return e < n_students; }
};

HypergraphTopology build_topology(int n_students);

// Learnable state of the hypergraph stream: diagonal hyperedge weights, the
// shared attention vector, and one square feature transform per layer.
struct HyperStreamParams {
  Matrix edge_weights;                    // 1 x (N+3), initialised to 1
  Matrix attention;                       // 2*Dh x 1
  std::vector<Matrix> layer_transforms;   // L matrices, Dh x Dh

  void init(int n_edges, int hidden_dim, int layers, bool with_attention, Rng& rng);
};

struct HyperStreamNodes {
  Value edge_weights;
  Value attention;  // unset when attention is disabled
  std::vector<Value> layer_transforms;
};

// Topology constants bound onto a tape once and shared across layers.
struct HyperTopoBinding {
  const HypergraphTopology* topo = nullptr;
  Value incidence;
  Value edge_mean;
};

HyperTopoBinding bind_topology(Tape& t, const HypergraphTopology& topo);

// Attention scores between each node and its incident hyperedges: both sides
// are projected by the layer transform, an edge is summarised as the mean of
// its member nodes, and the two halves of the attention vector score node and
// edge parts. Rows are softmax-normalised over the (two) incident edges, so
// the result is a drop-in replacement for the binary incidence matrix.
Value attention_weights(Tape& t, Value features, const HyperTopoBinding& topo,
                        const HyperStreamNodes& params, int layer);

// One convolution: degree-normalised two-stage aggregation (nodes -> edges ->
// nodes) with diagonal edge weights, then the layer transform and a ReLU.
// `effective_incidence` is either the binary incidence or attention weights.
Value hyperconv_layer(Tape& t, Value features, Value effective_incidence,
                      const HyperStreamNodes& params, int layer);

struct HyperForwardOptions {
  int layers = 3;
  bool attention_enabled = true;
  // Recompute attention from each layer's input (default), or compute it once
  // from the initial features and reuse it in every layer.
  bool attention_per_layer = true;
  double dropout = 0.0;  // applied after each layer, training mode only
  bool training = false;
  Rng* rng = nullptr;  // required when training with dropout > 0
};

// Full stream: stacked hyperconv layers over the encoded node features.
Value multivariate_forward(Tape& t, Value encoded, const HyperTopoBinding& topo,
                           const HyperStreamNodes& params,
                           const HyperForwardOptions& opts);

}  // namespace engage
