#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "engage/errors.hpp"
#include "engage/model.hpp"
#include "test_util.hpp"

using namespace engage;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.feature_dims = {2, 3, 4};
  c.hidden_dim = 2;
  c.n_classes = 2;
  c.n_students = 2;
  c.max_students = 3;
  c.hyper_layers = 2;
  c.graph_layers = 2;
  return c;
}

Dataset small_dataset(int n_snapshots = 2, std::uint64_t seed = 5) {
  SynthConfig s;
  s.n_students = 2;
  s.n_snapshots = n_snapshots;
  s.feature_dims = {2, 3, 4};
  s.seed = seed;
  return generate_synthetic(s);
}

std::vector<std::string> ref_names(ModelParameters& p) {
  std::vector<std::string> names;
  for (const TensorRef& r : tensor_refs(p)) names.push_back(r.name);
  return names;
}

// Forward one snapshot in evaluation mode and return the probability rows.
std::vector<Matrix> eval_probabilities(ModelParameters& params, const FeatureSnapshot& snap) {
  ModelWorkspace ws = build_workspace(params.config);
  Tape t;
  BoundModel bound = bind_model(t, params, ws);
  SnapshotOutput out = snapshot_forward(t, bound, params.config, snap, {});
  std::vector<Matrix> rows;
  for (Value v : out.probability_rows) rows.push_back(t.value(v));
  return rows;
}

}  // namespace

TEST_CASE("ablation names parse and round-trip; unknown names rejected") {
  for (int i = 0; i < 8; ++i) {
    const Ablation a = static_cast<Ablation>(i);
    CHECK(parse_ablation(ablation_name(a)) == a);
  }
  CHECK_THROWS_AS(parse_ablation("nope"), ValidationError);
}

TEST_CASE("fused vector length per variant") {
  ModelConfig c = small_config();
  CHECK(c.fused_length() == 12);  // both streams: 6 blocks of D_h = 2
  c.ablation = Ablation::no_multivariate;
  CHECK(c.fused_length() == 6);
  c.ablation = Ablation::no_multifrequency;
  CHECK(c.fused_length() == 6);
  c.ablation = Ablation::no_attention;
  CHECK(c.fused_length() == 12);
  c.ablation = Ablation::no_graph;
  CHECK(c.fused_length() == 6);  // 3 * D_h straight off the encoder
}

TEST_CASE("tensor enumeration: full model names, in declaration order") {
  ModelParameters p = ModelParameters::init(small_config(), 0);
  const std::vector<std::string> want = {
      "encoder.emotional.weight",  "encoder.emotional.bias", "encoder.attentional.weight",
      "encoder.attentional.bias",  "encoder.upper_body.weight", "encoder.upper_body.bias",
      "encoder.student_table",     "hyper.edge_weights",     "hyper.attention",
      "hyper.transform_0",         "hyper.transform_1",      "freq.low_0",
      "freq.high_0",               "freq.low_1",             "freq.high_1",
      "head.weight",               "head.bias"};
  CHECK(ref_names(p) == want);
}

TEST_CASE("tensor enumeration tracks the ablation") {
  ModelConfig c = small_config();

  c.ablation = Ablation::no_attention;
  ModelParameters p = ModelParameters::init(c, 0);
  for (const std::string& n : ref_names(p)) CHECK(n != "hyper.attention");

  c.ablation = Ablation::no_multivariate;
  p = ModelParameters::init(c, 0);
  for (const std::string& n : ref_names(p)) CHECK(n.rfind("hyper.", 0) != 0);

  c.ablation = Ablation::drop_emotional;
  p = ModelParameters::init(c, 0);
  for (const std::string& n : ref_names(p)) CHECK(n.rfind("encoder.emotional", 0) != 0);
  CHECK(p.encoder.projections[0].size() == 0);  // never allocated

  c.ablation = Ablation::no_graph;
  p = ModelParameters::init(c, 0);
  for (const std::string& n : ref_names(p)) {
    CHECK(n.rfind("hyper.", 0) != 0);
    CHECK(n.rfind("freq.", 0) != 0);
  }
}

TEST_CASE("parameter count matches the hand total for the small model") {
  ModelParameters p = ModelParameters::init(small_config(), 0);
  // encoder: (2*2 + 3*2 + 4*2) weights + 3 biases of 2 + table 3x2 = 18+6+6
  // hyper:   edge weights 1x5 + attention 4x1 + two 2x2 transforms = 5+4+8
  // freq:    two layers of (2x2 + 2x2)                             = 16
  // head:    12x2 + 1x2                                            = 26
  CHECK(p.parameter_count() == 30 + 17 + 16 + 26);
}

TEST_CASE("initialization is seed-deterministic") {
  ModelParameters a = ModelParameters::init(small_config(), 42);
  ModelParameters b = ModelParameters::init(small_config(), 42);
  ModelParameters c = ModelParameters::init(small_config(), 43);
  auto ra = tensor_refs(a), rb = tensor_refs(b), rc = tensor_refs(c);
  double diff_c = 0.0;
  for (size_t i = 0; i < ra.size(); ++i) {
    CHECK(max_abs_diff(*ra[i].tensor, *rb[i].tensor) == 0.0);
    diff_c += max_abs_diff(*ra[i].tensor, *rc[i].tensor);
  }
  CHECK(diff_c > 0.0);
}

TEST_CASE("config validation rejects inconsistent settings") {
  ModelConfig c = small_config();
  c.max_students = 1;  // below n_students
  CHECK_THROWS_AS(ModelParameters::init(c, 0), ValidationError);
  c = small_config();
  c.hyper_layers = 0;
  CHECK_THROWS_AS(ModelParameters::init(c, 0), ValidationError);
  c = small_config();
  c.feature_dims[1] = 0;
  CHECK_THROWS_AS(ModelParameters::init(c, 0), ValidationError);
  // A dropped type's dimension is allowed to be absent.
  c.ablation = Ablation::drop_attentional;
  CHECK_NOTHROW(ModelParameters::init(c, 0));
}

TEST_CASE("forward: shapes, probability rows, and label passthrough") {
  Dataset ds = small_dataset();
  ModelParameters p = ModelParameters::init(small_config(), 1);
  ModelWorkspace ws = build_workspace(p.config);
  Tape t;
  BoundModel bound = bind_model(t, p, ws);
  SnapshotOutput out = snapshot_forward(t, bound, p.config, ds.snapshots[0], {});
  REQUIRE(out.probability_rows.size() == 2);
  REQUIRE(out.predictions.size() == 2);
  for (int i = 0; i < 2; ++i) {
    const Matrix& row = t.value(out.probability_rows[i]);
    CHECK(row.rows == 1);
    CHECK(row.cols == 2);
    CHECK(row.at(0, 0) + row.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.predictions[i] >= 0);
    CHECK(out.predictions[i] < 2);
    CHECK(out.labels[i] == ds.snapshots[0].students[i].label);
  }
}

TEST_CASE("forward: evaluation mode is bit-deterministic across tapes") {
  Dataset ds = small_dataset();
  ModelParameters p = ModelParameters::init(small_config(), 2);
  const auto a = eval_probabilities(p, ds.snapshots[0]);
  const auto b = eval_probabilities(p, ds.snapshots[0]);
  for (size_t i = 0; i < a.size(); ++i) CHECK(max_abs_diff(a[i], b[i]) == 0.0);
}

TEST_CASE("forward: student storage order within a snapshot does not matter") {
  Dataset ds = small_dataset();
  ModelParameters p = ModelParameters::init(small_config(), 3);
  FeatureSnapshot swapped = ds.snapshots[0];
  std::swap(swapped.students[0], swapped.students[1]);
  const auto a = eval_probabilities(p, ds.snapshots[0]);
  const auto b = eval_probabilities(p, swapped);
  for (size_t i = 0; i < a.size(); ++i) CHECK(max_abs_diff(a[i], b[i]) == 0.0);
}

TEST_CASE("forward: malformed snapshots are rejected with context") {
  Dataset ds = small_dataset();
  ModelParameters p = ModelParameters::init(small_config(), 1);
  ModelWorkspace ws = build_workspace(p.config);

  FeatureSnapshot missing = ds.snapshots[0];
  missing.students.pop_back();
  {
    Tape t;
    BoundModel bound = bind_model(t, p, ws);
    CHECK_THROWS_AS(snapshot_forward(t, bound, p.config, missing, {}), ValidationError);
  }

  FeatureSnapshot duplicate = ds.snapshots[0];
  duplicate.students[1].index = 0;
  {
    Tape t;
    BoundModel bound = bind_model(t, p, ws);
    CHECK_THROWS_AS(snapshot_forward(t, bound, p.config, duplicate, {}), ValidationError);
  }

  FeatureSnapshot badlen = ds.snapshots[0];
  badlen.students[0].features[2].push_back(0.0);
  {
    Tape t;
    BoundModel bound = bind_model(t, p, ws);
    try {
      snapshot_forward(t, bound, p.config, badlen, {});
      FAIL("expected rejection");
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      CHECK(msg.find(badlen.snapshot_id) != std::string::npos);
      CHECK(msg.find("upper_body") != std::string::npos);
    }
  }
}

TEST_CASE("drop_emotional: emotional features are out of the model entirely") {
  Dataset ds = small_dataset();
  ModelConfig c = small_config();
  c.ablation = Ablation::drop_emotional;
  ModelParameters p = ModelParameters::init(c, 4);
  FeatureSnapshot perturbed = ds.snapshots[0];
  for (double& x : perturbed.students[0].features[0]) x += 100.0;
  const auto a = eval_probabilities(p, ds.snapshots[0]);
  const auto b = eval_probabilities(p, perturbed);
  for (size_t i = 0; i < a.size(); ++i) CHECK(max_abs_diff(a[i], b[i]) == 0.0);
}

TEST_CASE("cross-student influence: present with graphs, absent for no_graph") {
  Dataset ds = small_dataset();
  FeatureSnapshot perturbed = ds.snapshots[0];
  for (int t = 0; t < kNumFeatureTypes; ++t)
    for (double& x : perturbed.students[1].features[t]) x += 3.0;

  ModelConfig c = small_config();
  ModelParameters full = ModelParameters::init(c, 6);
  const Matrix before = eval_probabilities(full, ds.snapshots[0])[0];
  const Matrix after = eval_probabilities(full, perturbed)[0];
  CHECK(max_abs_diff(before, after) > 0.0);  // student 1 reaches student 0

  c.ablation = Ablation::no_graph;
  ModelParameters baseline = ModelParameters::init(c, 6);
  const Matrix nb = eval_probabilities(baseline, ds.snapshots[0])[0];
  const Matrix na = eval_probabilities(baseline, perturbed)[0];
  CHECK(max_abs_diff(nb, na) == 0.0);  // no cross-student path
}

TEST_CASE("uniform attention with unit edge weights reproduces the binary path bitwise") {
  // With the attention vector zeroed, every node splits 0.5/0.5 over its two
  // incident edges; with unit edge weights that path must coincide exactly
  // with the attention-free convolution, because all factors involved are
  // powers of two.
  Dataset ds = small_dataset(1, 9);
  ModelConfig with = small_config();
  ModelParameters pa = ModelParameters::init(with, 7);
  pa.hyper.attention = Matrix::zeros(pa.hyper.attention.rows, pa.hyper.attention.cols);
  for (int i = 0; i < pa.hyper.edge_weights.size(); ++i) pa.hyper.edge_weights.data[i] = 1.0;

  ModelConfig without = small_config();
  without.ablation = Ablation::no_attention;
  ModelParameters pb = ModelParameters::init(without, 0);
  pb.encoder = pa.encoder;
  pb.hyper.edge_weights = pa.hyper.edge_weights;
  pb.hyper.layer_transforms = pa.hyper.layer_transforms;
  pb.freq = pa.freq;
  pb.head = pa.head;

  const auto a = eval_probabilities(pa, ds.snapshots[0]);
  const auto b = eval_probabilities(pb, ds.snapshots[0]);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(max_abs_diff(a[i], b[i]) == 0.0);
}

TEST_CASE("every enabled parameter tensor receives a gradient from the loss") {
  Dataset ds = small_dataset(1, 12);
  for (Ablation ab : {Ablation::none, Ablation::no_multivariate, Ablation::no_multifrequency,
                      Ablation::no_attention, Ablation::drop_attentional, Ablation::no_graph}) {
    CAPTURE(ablation_name(ab));
    ModelConfig c = small_config();
    c.ablation = ab;
    // Positive-regime parameters keep every activation live; a zero gradient
    // would then mean broken plumbing rather than a clipped unit.
    ModelParameters p = ModelParameters::init(c, 8);
    Rng rng(77);
    for (TensorRef r : tensor_refs(p))
      for (int i = 0; i < r.tensor->size(); ++i)
        r.tensor->data[i] = 0.05 + 0.4 * rng.uniform();
    FeatureSnapshot snap = ds.snapshots[0];
    for (auto& s : snap.students)
      for (int t = 0; t < kNumFeatureTypes; ++t)
        for (double& x : s.features[t]) x = 0.1 + 0.5 * std::abs(x);

    ModelWorkspace ws = build_workspace(c);
    Tape t;
    BoundModel bound = bind_model(t, p, ws);
    SnapshotOutput out = snapshot_forward(t, bound, c, snap, {});
    // lambda = 0 so gradients can only arrive through the data path; the L2
    // term would otherwise hand every tensor a nonzero gradient for free.
    Value loss =
        weighted_loss(t, out.probability_rows, out.labels, {1.0, 1.0}, bound.ordered, 0.0);
    t.backward(loss);
    auto refs = tensor_refs(p);
    REQUIRE(refs.size() == bound.ordered.size());
    for (size_t i = 0; i < refs.size(); ++i) {
      const Matrix& g = t.grad(bound.ordered[i]);
      double norm = 0.0;
      for (int k = 0; k < g.size(); ++k) norm += g.data[k] * g.data[k];
      CAPTURE(refs[i].name);
      CHECK(norm > 0.0);
    }
  }
}
