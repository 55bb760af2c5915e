#include "engage/model.hpp"

#include <optional>
#include <string>

#include "engage/errors.hpp"

namespace engage {

namespace {

const char* kAblationNames[] = {"none",           "no_multivariate", "no_multifrequency",
                                "no_attention",   "drop_emotional",  "drop_attentional",
                                "drop_upper_body", "no_graph"};

}  // namespace

const char* ablation_name(Ablation a) { return kAblationNames[static_cast<int>(a)]; }

Ablation parse_ablation(const std::string& name) {
  for (int i = 0; i < 8; ++i)
    if (name == kAblationNames[i]) return static_cast<Ablation>(i);
  throw ValidationError("unknown ablation '" + name +
                        "' (expected none, no_multivariate, no_multifrequency, "
                        "no_attention, drop_emotional, drop_attentional, "
                        "drop_upper_body or no_graph)");
}

std::array<bool, kNumFeatureTypes> ModelConfig::enabled_types() const {
  std::array<bool, kNumFeatureTypes> enabled = {true, true, true};
  if (ablation == Ablation::drop_emotional) enabled[0] = false;
  if (ablation == Ablation::drop_attentional) enabled[1] = false;
  if (ablation == Ablation::drop_upper_body) enabled[2] = false;
  return enabled;
}

int ModelConfig::fused_length() const {
  if (ablation == Ablation::no_graph) return 3 * hidden_dim;
  return hidden_dim * (3 * (uses_hyper() ? 1 : 0) + 3 * (uses_freq() ? 1 : 0));
}

void ModelConfig::validate() const {
  if (hidden_dim < 1) throw ValidationError("model: hidden_dim must be >= 1");
  if (n_classes < 2) throw ValidationError("model: n_classes must be >= 2");
  if (n_students < 1) throw ValidationError("model: n_students must be >= 1");
  if (max_students < n_students)
    throw ValidationError("model: max_students " + std::to_string(max_students) +
                          " below n_students " + std::to_string(n_students));
  if (hyper_layers < 1 || graph_layers < 1)
    throw ValidationError("model: layer counts must be >= 1");
  const auto enabled = enabled_types();
  for (int t = 0; t < kNumFeatureTypes; ++t)
    if (enabled[t] && feature_dims[t] < 1)
      throw ValidationError(std::string("model: dimension for ") + feature_type_name(t) +
                            " must be >= 1");
}

ModelParameters ModelParameters::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParameters p;
  p.config = config;
  Rng rng(seed);
  p.encoder.init(config.feature_dims, config.hidden_dim, config.max_students,
                 config.enabled_types(), rng);
  if (config.uses_hyper()) {
    p.hyper.init(config.n_students + kNumFeatureTypes, config.hidden_dim,
                 config.hyper_layers, config.uses_attention(), rng);
  }
  if (config.uses_freq()) {
    p.freq.init(config.hidden_dim, config.graph_layers, rng);
  }
  p.head.init(config.fused_length(), config.n_classes, rng);
  return p;
}

std::vector<TensorRef> tensor_refs(ModelParameters& p) {
  const ModelConfig& c = p.config;
  std::vector<TensorRef> refs;
  const auto enabled = c.enabled_types();
  for (int t = 0; t < kNumFeatureTypes; ++t) {
    if (!enabled[t]) continue;
    const std::string base = std::string("encoder.") + feature_type_name(t);
    refs.push_back({base + ".weight", &p.encoder.projections[t]});
    refs.push_back({base + ".bias", &p.encoder.biases[t]});
  }
  refs.push_back({"encoder.student_table", &p.encoder.student_table});
  if (c.uses_hyper()) {
    refs.push_back({"hyper.edge_weights", &p.hyper.edge_weights});
    if (c.uses_attention()) refs.push_back({"hyper.attention", &p.hyper.attention});
    for (int l = 0; l < c.hyper_layers; ++l)
      refs.push_back({"hyper.transform_" + std::to_string(l), &p.hyper.layer_transforms[l]});
  }
  if (c.uses_freq()) {
    for (int k = 0; k < c.graph_layers; ++k) {
      refs.push_back({"freq.low_" + std::to_string(k), &p.freq.low_transforms[k]});
      refs.push_back({"freq.high_" + std::to_string(k), &p.freq.high_transforms[k]});
    }
  }
  refs.push_back({"head.weight", &p.head.weights});
  refs.push_back({"head.bias", &p.head.bias});
  return refs;
}

long long ModelParameters::parameter_count() const {
  long long total = 0;
  for (const TensorRef& r : tensor_refs(const_cast<ModelParameters&>(*this)))
    total += r.tensor->size();
  return total;
}

ModelWorkspace build_workspace(const ModelConfig& config) {
  ModelWorkspace ws;
  if (config.uses_hyper()) ws.hyper_topo = build_topology(config.n_students);
  if (config.uses_freq()) ws.pair_topo = build_pair_graph(config.n_students);
  return ws;
}

BoundModel bind_model(Tape& t, ModelParameters& p, const ModelWorkspace& ws) {
  const ModelConfig& c = p.config;
  BoundModel b;
  const auto enabled = c.enabled_types();
  for (int type = 0; type < kNumFeatureTypes; ++type) {
    if (!enabled[type]) continue;
    b.encoder.projections[type] = t.param(p.encoder.projections[type]);
    b.ordered.push_back(b.encoder.projections[type]);
    b.encoder.biases[type] = t.param(p.encoder.biases[type]);
    b.ordered.push_back(b.encoder.biases[type]);
  }
  b.encoder.student_table = t.param(p.encoder.student_table);
  b.ordered.push_back(b.encoder.student_table);
  if (c.uses_hyper()) {
    b.hyper.edge_weights = t.param(p.hyper.edge_weights);
    b.ordered.push_back(b.hyper.edge_weights);
    if (c.uses_attention()) {
      b.hyper.attention = t.param(p.hyper.attention);
      b.ordered.push_back(b.hyper.attention);
    }
    for (int l = 0; l < c.hyper_layers; ++l) {
      b.hyper.layer_transforms.push_back(t.param(p.hyper.layer_transforms[l]));
      b.ordered.push_back(b.hyper.layer_transforms.back());
    }
    b.hyper_topo = bind_topology(t, ws.hyper_topo);
  }
  if (c.uses_freq()) {
    for (int k = 0; k < c.graph_layers; ++k) {
      b.freq.low_transforms.push_back(t.param(p.freq.low_transforms[k]));
      b.ordered.push_back(b.freq.low_transforms.back());
      b.freq.high_transforms.push_back(t.param(p.freq.high_transforms[k]));
      b.ordered.push_back(b.freq.high_transforms.back());
    }
    b.pair_topo = bind_pair_topology(t, ws.pair_topo);
  }
  b.head.weights = t.param(p.head.weights);
  b.ordered.push_back(b.head.weights);
  b.head.bias = t.param(p.head.bias);
  b.ordered.push_back(b.head.bias);
  return b;
}

SnapshotOutput snapshot_forward(Tape& t, const BoundModel& bound, const ModelConfig& config,
                                const FeatureSnapshot& snapshot, const ForwardOptions& opts) {
  const int n = config.n_students;
  if (static_cast<int>(snapshot.students.size()) != n)
    throw ValidationError("forward: snapshot " + snapshot.snapshot_id + " has " +
                          std::to_string(snapshot.students.size()) + " students, model expects " +
                          std::to_string(n));
  // Students may be stored in any order; address them by ordinal index.
  std::vector<const StudentRecord*> by_index(n, nullptr);
  for (const StudentRecord& s : snapshot.students) {
    if (s.index < 0 || s.index >= n || by_index[s.index] != nullptr)
      throw ValidationError("forward: snapshot " + snapshot.snapshot_id +
                            " has invalid or duplicate student index " +
                            std::to_string(s.index));
    by_index[s.index] = &s;
  }
  const auto enabled = config.enabled_types();
  for (int i = 0; i < n; ++i)
    for (int type = 0; type < kNumFeatureTypes; ++type)
      if (enabled[type] &&
          static_cast<int>(by_index[i]->features[type].size()) != config.feature_dims[type])
        throw ValidationError(
            "forward: snapshot " + snapshot.snapshot_id + " student " + std::to_string(i) +
            " field '" + feature_type_name(type) + "' has length " +
            std::to_string(by_index[i]->features[type].size()) + ", model expects " +
            std::to_string(config.feature_dims[type]));

  // Encode every student and stack into the 3N x D_h node-feature matrix.
  std::vector<Value> node_rows;
  node_rows.reserve(3 * n);
  for (int i = 0; i < n; ++i) {
    std::array<Value, kNumFeatureTypes> raw;
    for (int type = 0; type < kNumFeatureTypes; ++type)
      if (enabled[type]) raw[type] = t.constant(Matrix::row(by_index[i]->features[type]));
    auto encoded = encode_student(t, raw, i, bound.encoder, enabled);
    for (int type = 0; type < kNumFeatureTypes; ++type) node_rows.push_back(encoded[type]);
  }
  Value encoded = t.stack_rows(node_rows);

  std::optional<Value> hyper_out, freq_out;
  if (config.ablation == Ablation::no_graph) {
    hyper_out = encoded;  // classifier sees the encoded features directly
  } else {
    if (config.uses_hyper()) {
      HyperForwardOptions ho;
      ho.layers = config.hyper_layers;
      ho.attention_enabled = config.uses_attention();
      ho.attention_per_layer = config.attention_per_layer;
      ho.dropout = opts.dropout;
      ho.training = opts.training;
      ho.rng = opts.rng;
      hyper_out = multivariate_forward(t, encoded, bound.hyper_topo, bound.hyper, ho);
    }
    if (config.uses_freq()) {
      FreqForwardOptions fo;
      fo.layers = config.graph_layers;
      fo.dropout = opts.dropout;
      fo.training = opts.training;
      fo.rng = opts.rng;
      freq_out = multifrequency_forward(t, encoded, bound.pair_topo, bound.freq, fo);
    }
  }

  SnapshotOutput out;
  for (int i = 0; i < n; ++i) {
    Value mu = fuse(t, hyper_out, freq_out, i);
    Classification c = classify(t, mu, bound.head);
    out.probability_rows.push_back(c.probabilities);
    out.predictions.push_back(c.predicted);
    out.labels.push_back(by_index[i]->label);
  }
  return out;
}

}  // namespace engage
