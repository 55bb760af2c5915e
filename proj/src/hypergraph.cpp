#include "engage/hypergraph.hpp"

#include <string>

#include "engage/errors.hpp"

namespace engage {

HypergraphTopology build_topology(int n_students) {
  if (n_students < 1) {
    throw ValidationError("build_topology: n_students must be >= 1, got " +
                          std::to_string(n_students));
  }
  HypergraphTopology topo;
  topo.n_students = n_students;
  topo.n_nodes = kNumFeatureTypes * n_students;
  topo.n_edges = n_students + kNumFeatureTypes;
  topo.incidence = Matrix::zeros(topo.n_nodes, topo.n_edges);
  for (int i = 0; i < n_students; ++i) {
    for (int t = 0; t < kNumFeatureTypes; ++t) {
      const int v = node_id(i, t);
      topo.incidence.at(v, i) = 1.0;               // student edge i
      topo.incidence.at(v, n_students + t) = 1.0;  // group edge for type t
    }
  }
  // Row e of edge_mean averages the member nodes of hyperedge e.
  topo.edge_mean = Matrix::zeros(topo.n_edges, topo.n_nodes);
  for (int e = 0; e < topo.n_edges; ++e) {
    int members = 0;
    for (int v = 0; v < topo.n_nodes; ++v) {
      if (topo.incidence.at(v, e) != 0.0) ++members;
    }
    for (int v = 0; v < topo.n_nodes; ++v) {
      if (topo.incidence.at(v, e) != 0.0) topo.edge_mean.at(e, v) = 1.0 / members;
    }
  }
  return topo;
}

void HyperStreamParams::init(int n_edges, int hidden_dim, int layers,
                             bool with_attention, Rng& rng) {
  edge_weights = Matrix::filled(1, n_edges, 1.0);
  if (with_attention) {
    attention = init_linear(2 * hidden_dim, 1, rng);
  } else {
    attention = Matrix();
  }
  layer_transforms.clear();
  for (int l = 0; l < layers; ++l) {
    layer_transforms.push_back(init_linear(hidden_dim, hidden_dim, rng));
  }
}

HyperTopoBinding bind_topology(Tape& t, const HypergraphTopology& topo) {
  HyperTopoBinding b;
  b.topo = &topo;
  b.incidence = t.constant(topo.incidence);
  b.edge_mean = t.constant(topo.edge_mean);
  return b;
}

Value attention_weights(Tape& t, Value features, const HyperTopoBinding& topo,
                        const HyperStreamNodes& params, int layer) {
  const int dh = t.value(params.layer_transforms[layer]).cols;
  const int n_nodes = topo.topo->n_nodes;
  const int n_edges = topo.topo->n_edges;

  Value node_proj = t.matmul(features, params.layer_transforms[layer]);  // 3N x Dh
  Value edge_proj = t.matmul(topo.edge_mean, node_proj);                 // E x Dh

  Value a_node = t.slice_rows(params.attention, 0, dh);   // Dh x 1
  Value a_edge = t.slice_rows(params.attention, dh, dh);  // Dh x 1
  Value node_score = t.matmul(node_proj, a_node);         // 3N x 1
  Value edge_score = t.matmul(edge_proj, a_edge);         // E x 1

  // Broadcast node_score down columns and edge_score across rows.
  Value scores = t.add(
      t.matmul(node_score, t.constant(Matrix::filled(1, n_edges, 1.0))),
      t.matmul(t.constant(Matrix::filled(n_nodes, 1, 1.0)), t.transpose(edge_score)));
  scores = t.leaky_relu(scores, 0.2);
  return t.masked_row_softmax(scores, topo.topo->incidence);
}

Value hyperconv_layer(Tape& t, Value features, Value effective_incidence,
                      const HyperStreamNodes& params, int layer) {
  Value edge_degree = t.col_sums(effective_incidence);  // 1 x E
  Value node_degree = t.row_sums(effective_incidence);  // 3N x 1
  const Matrix& ed = t.value(edge_degree);
  for (int e = 0; e < ed.cols; ++e) {
    if (ed.at(0, e) <= 0.0) {
      throw ValidationError("hyperconv_layer: hyperedge " + std::to_string(e) +
                            " has non-positive degree " + std::to_string(ed.at(0, e)));
    }
  }
  const Matrix& nd = t.value(node_degree);
  for (int v = 0; v < nd.rows; ++v) {
    if (nd.at(v, 0) <= 0.0) {
      throw ValidationError("hyperconv_layer: node " + std::to_string(v) +
                            " has non-positive degree " + std::to_string(nd.at(v, 0)));
    }
  }
  // H W_e B^-1 applied as a column scaling of H, then the two-stage
  // aggregation H (.) (H^T Q), row-normalised by node degree.
  Value col_scale = t.hadamard(params.edge_weights, t.reciprocal(edge_degree));
  Value weighted = t.scale_cols(effective_incidence, col_scale);       // 3N x E
  Value edge_feats = t.matmul(t.transpose(effective_incidence), features);  // E x Dh
  Value gathered = t.matmul(weighted, edge_feats);                     // 3N x Dh
  gathered = t.scale_rows(gathered, t.reciprocal(node_degree));
  return t.relu(t.matmul(gathered, params.layer_transforms[layer]));
}

Value multivariate_forward(Tape& t, Value encoded, const HyperTopoBinding& topo,
                           const HyperStreamNodes& params,
                           const HyperForwardOptions& opts) {
  if (opts.layers < 1) {
    throw ValidationError("multivariate_forward: layers must be >= 1, got " +
                          std::to_string(opts.layers));
  }
  if (static_cast<int>(params.layer_transforms.size()) < opts.layers) {
    throw ValidationError("multivariate_forward: have " +
                          std::to_string(params.layer_transforms.size()) +
                          " layer transforms for " + std::to_string(opts.layers) +
                          " layers");
  }
  Value q = encoded;
  Value cached_attention;
  bool have_cached = false;
  for (int l = 0; l < opts.layers; ++l) {
    Value h_eff;
    if (opts.attention_enabled) {
      if (opts.attention_per_layer || !have_cached) {
        cached_attention = attention_weights(t, q, topo, params, l);
        have_cached = true;
      }
      h_eff = cached_attention;
    } else {
      h_eff = topo.incidence;
    }
    q = hyperconv_layer(t, q, h_eff, params, l);
    if (opts.training && opts.dropout > 0.0) {
      if (opts.rng == nullptr) {
        throw ValidationError("multivariate_forward: dropout requires an rng");
      }
      q = apply_dropout(t, q, opts.dropout, *opts.rng);
    }
  }
  return q;
}

}  // namespace engage
