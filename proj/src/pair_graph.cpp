#include "engage/pair_graph.hpp"

#include <cmath>
#include <string>

#include "engage/errors.hpp"

namespace engage {

PairGraphTopology build_pair_graph(int n_students) {
  if (n_students < 1) {
    throw ValidationError("build_pair_graph: n_students must be >= 1, got " +
                          std::to_string(n_students));
  }
  PairGraphTopology topo;
  topo.n_students = n_students;
  topo.n_nodes = kNumFeatureTypes * n_students;
  const int n = topo.n_nodes;
  topo.adjacency = Matrix::zeros(n, n);
  for (int i = 0; i < n_students; ++i) {
    for (int s = 0; s < kNumFeatureTypes; ++s) {
      for (int j = 0; j < n_students; ++j) {
        for (int u = 0; u < kNumFeatureTypes; ++u) {
          const bool same_student = i == j;
          const bool same_type = s == u;
          if ((same_student && !same_type) || (!same_student && same_type)) {
            topo.adjacency.at(node_id(i, s), node_id(j, u)) = 1.0;
          }
        }
      }
    }
  }
  // Symmetric normalised Laplacian and the derived low/high-pass filters.
  std::vector<double> inv_sqrt_degree(n);
  for (int v = 0; v < n; ++v) {
    double d = 0.0;
    for (int w = 0; w < n; ++w) d += topo.adjacency.at(v, w);
    if (d <= 0.0) {
      throw ValidationError("build_pair_graph: node " + std::to_string(v) +
                            " has degree 0");
    }
    inv_sqrt_degree[v] = 1.0 / std::sqrt(d);
  }
  topo.laplacian = Matrix::identity(n);
  for (int v = 0; v < n; ++v) {
    for (int w = 0; w < n; ++w) {
      topo.laplacian.at(v, w) -=
          inv_sqrt_degree[v] * topo.adjacency.at(v, w) * inv_sqrt_degree[w];
    }
  }
  // filter_low + filter_high = 2I holds exactly by construction.
  topo.filter_high = topo.laplacian;
  topo.filter_low = Matrix::zeros(n, n);
  for (int v = 0; v < n; ++v) {
    for (int w = 0; w < n; ++w) {
      const double eye = v == w ? 2.0 : 0.0;
      topo.filter_low.at(v, w) = eye - topo.laplacian.at(v, w);
    }
  }
  return topo;
}

void FreqStreamParams::init(int hidden_dim, int layers, Rng& rng) {
  low_transforms.clear();
  high_transforms.clear();
  for (int k = 0; k < layers; ++k) {
    low_transforms.push_back(init_linear(hidden_dim, hidden_dim, rng));
    high_transforms.push_back(init_linear(hidden_dim, hidden_dim, rng));
  }
}

PairTopoBinding bind_pair_topology(Tape& t, const PairGraphTopology& topo) {
  PairTopoBinding b;
  b.topo = &topo;
  b.filter_low = t.constant(topo.filter_low);
  b.filter_high = t.constant(topo.filter_high);
  return b;
}

Value freq_layer(Tape& t, Value features, const PairTopoBinding& topo,
                 const FreqStreamNodes& params, int layer) {
  Value low = t.matmul(t.matmul(topo.filter_low, features), params.low_transforms[layer]);
  Value high =
      t.matmul(t.matmul(topo.filter_high, features), params.high_transforms[layer]);
  return t.relu(t.add(low, high));
}

Value multifrequency_forward(Tape& t, Value encoded, const PairTopoBinding& topo,
                             const FreqStreamNodes& params,
                             const FreqForwardOptions& opts) {
  if (opts.layers < 1) {
    throw ValidationError("multifrequency_forward: layers must be >= 1, got " +
                          std::to_string(opts.layers));
  }
  if (static_cast<int>(params.low_transforms.size()) < opts.layers ||
      static_cast<int>(params.high_transforms.size()) < opts.layers) {
    throw ValidationError("multifrequency_forward: not enough layer transforms for " +
                          std::to_string(opts.layers) + " layers");
  }
  Value f = encoded;
  for (int k = 0; k < opts.layers; ++k) {
    f = freq_layer(t, f, topo, params, k);
    if (opts.training && opts.dropout > 0.0) {
      if (opts.rng == nullptr) {
        throw ValidationError("multifrequency_forward: dropout requires an rng");
      }
      f = apply_dropout(t, f, opts.dropout, *opts.rng);
    }
  }
  return f;
}

}  // namespace engage
