#include "engage/gradcheck.hpp"

#include <cmath>
#include <map>

#include "engage/errors.hpp"
#include "engage/head.hpp"

namespace engage {

namespace {

std::string group_of(const std::string& tensor_name) {
  if (tensor_name == "encoder.student_table") return "student_embedding";
  if (tensor_name.rfind("encoder.", 0) == 0) return "encoder";
  if (tensor_name == "hyper.edge_weights") return "hyperedge_weights";
  if (tensor_name == "hyper.attention") return "attention";
  if (tensor_name.rfind("hyper.transform_", 0) == 0) return "hyper_transforms";
  if (tensor_name.rfind("freq.", 0) == 0) return "freq_transforms";
  return "head";
}

const char* kGroupOrder[] = {"encoder",         "student_embedding", "hyperedge_weights",
                             "attention",       "hyper_transforms",  "freq_transforms",
                             "head"};

}  // namespace

std::vector<GradCheckGroup> run_gradcheck(const GradCheckConfig& config) {
  SynthConfig synth;
  synth.n_students = config.n_students;
  synth.n_snapshots = config.n_snapshots;
  synth.n_classes = config.n_classes;
  synth.seed = config.seed;
  synth.feature_dims = config.feature_dims;
  Dataset data = generate_synthetic(synth);

  ModelConfig mc;
  mc.feature_dims = config.feature_dims;
  mc.hidden_dim = config.hidden_dim;
  mc.n_classes = config.n_classes;
  mc.n_students = config.n_students;
  mc.max_students = config.n_students;
  mc.hyper_layers = config.hyper_layers;
  mc.graph_layers = config.graph_layers;
  mc.attention_enabled = config.attention_enabled;
  ModelParameters params = ModelParameters::init(mc, config.seed);
  ModelWorkspace ws = build_workspace(mc);
  const std::vector<double> unit_weights(config.n_classes, 1.0);

  auto loss_at = [&](std::vector<Matrix>* grads_out) -> double {
    Tape t;
    BoundModel bound = bind_model(t, params, ws);
    ForwardOptions opts;  // inference mode: the check needs a deterministic loss
    std::vector<Value> rows;
    std::vector<int> labels;
    for (const FeatureSnapshot& snap : data.snapshots) {
      SnapshotOutput out = snapshot_forward(t, bound, mc, snap, opts);
      rows.insert(rows.end(), out.probability_rows.begin(), out.probability_rows.end());
      labels.insert(labels.end(), out.labels.begin(), out.labels.end());
    }
    Value loss = weighted_loss(t, rows, labels, unit_weights, bound.ordered, config.lambda);
    if (grads_out != nullptr) {
      t.backward(loss);
      for (Value v : bound.ordered) grads_out->push_back(t.grad(v));
    }
    return t.value(loss).at(0, 0);
  };

  std::vector<Matrix> analytic;
  loss_at(&analytic);

  std::vector<TensorRef> refs = tensor_refs(params);
  if (!config.corrupt_group.empty()) {
    bool found = false;
    for (size_t i = 0; i < refs.size(); ++i) {
      if (group_of(refs[i].name) == config.corrupt_group) {
        analytic[i].data[0] += config.corrupt_delta;
        found = true;
        break;
      }
    }
    if (!found)
      throw ValidationError("gradcheck: no tensors in group '" + config.corrupt_group + "'");
  }

  std::map<std::string, GradCheckGroup> by_group;
  for (const char* name : kGroupOrder) {
    GradCheckGroup g;
    g.name = name;
    g.applicable = false;
    by_group[name] = g;
  }
  for (size_t i = 0; i < refs.size(); ++i) {
    GradCheckGroup& g = by_group[group_of(refs[i].name)];
    g.applicable = true;
    ++g.tensors;
    Matrix& theta = *refs[i].tensor;
    for (int j = 0; j < theta.size(); ++j) {
      const double saved = theta.data[j];
      theta.data[j] = saved + config.epsilon;
      const double up = loss_at(nullptr);
      theta.data[j] = saved - config.epsilon;
      const double down = loss_at(nullptr);
      theta.data[j] = saved;
      const double numeric = (up - down) / (2.0 * config.epsilon);
      const double err =
          std::fabs(analytic[i].data[j] - numeric) / std::max(1.0, std::fabs(numeric));
      g.max_rel_error = std::max(g.max_rel_error, err);
    }
  }

  std::vector<GradCheckGroup> out;
  for (const char* name : kGroupOrder) out.push_back(by_group[name]);
  return out;
}

}  // namespace engage
