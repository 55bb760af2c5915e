#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "engage/dataset.hpp"
#include "engage/encoder.hpp"
#include "engage/head.hpp"
#include "engage/hypergraph.hpp"
#include "engage/pair_graph.hpp"

namespace engage {

// Model variants with one mechanism removed. no_graph (both streams removed,
// classifier on encoded features alone) is a reference baseline, not one of
// the published variants.
enum class Ablation {
  none,
  no_multivariate,
  no_multifrequency,
  no_attention,
  drop_emotional,
  drop_attentional,
  drop_upper_body,
  no_graph,
};

const char* ablation_name(Ablation a);
Ablation parse_ablation(const std::string& name);  // throws ValidationError

struct ModelConfig {
  std::array<int, kNumFeatureTypes> feature_dims = {0, 0, 0};
  int hidden_dim = 64;
  int n_classes = 2;
  int n_students = 0;
  int max_students = 16;  // embedding table rows
  int hyper_layers = 3;   // L
  int graph_layers = 3;   // K
  bool attention_enabled = true;
  bool attention_per_layer = true;
  Ablation ablation = Ablation::none;

  bool uses_hyper() const {
    return ablation != Ablation::no_multivariate && ablation != Ablation::no_graph;
  }
  bool uses_freq() const {
    return ablation != Ablation::no_multifrequency && ablation != Ablation::no_graph;
  }
  bool uses_attention() const {
    return uses_hyper() && attention_enabled && ablation != Ablation::no_attention;
  }
  std::array<bool, kNumFeatureTypes> enabled_types() const;
  // Length of the fused per-student vector: D_h per stream block, or 3*D_h
  // straight off the encoder for the no_graph baseline.
  int fused_length() const;
  void validate() const;
};

struct ModelParameters {
  ModelConfig config;
  EncoderParams encoder;
  HyperStreamParams hyper;
  FreqStreamParams freq;
  HeadParams head;

  static ModelParameters init(const ModelConfig& config, std::uint64_t seed);
  long long parameter_count() const;
};

// Stable enumeration of the live parameter tensors of a configured model, in
// a fixed order shared by the optimizer, checkpoints and gradient checks.
struct TensorRef {
  std::string name;
  Matrix* tensor = nullptr;
};
std::vector<TensorRef> tensor_refs(ModelParameters& params);

// Topologies derived from N; built once per model, shared across snapshots.
struct ModelWorkspace {
  HypergraphTopology hyper_topo;
  PairGraphTopology pair_topo;
};
ModelWorkspace build_workspace(const ModelConfig& config);

// All parameters and topology constants bound onto one tape. `ordered` is
// aligned with tensor_refs().
struct BoundModel {
  EncoderNodes encoder;
  HyperStreamNodes hyper;
  FreqStreamNodes freq;
  HeadNodes head;
  std::vector<Value> ordered;
  HyperTopoBinding hyper_topo;
  PairTopoBinding pair_topo;
};
BoundModel bind_model(Tape& t, ModelParameters& params, const ModelWorkspace& ws);

struct ForwardOptions {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;  // dropout masks
};

struct SnapshotOutput {
  std::vector<Value> probability_rows;  // one 1xC row per student, index order
  std::vector<int> predictions;
  std::vector<int> labels;
};

// Full forward pass over one snapshot: encode all students, run the enabled
// streams, fuse and classify each student.
SnapshotOutput snapshot_forward(Tape& t, const BoundModel& bound, const ModelConfig& config,
                                const FeatureSnapshot& snapshot, const ForwardOptions& opts);

}  // namespace engage
