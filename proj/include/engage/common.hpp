#pragma once

#include "engage/rng.hpp"
#include "engage/tape.hpp"

namespace engage {

// Per-student feature types, in fixed order. Node ids are student-major:
// node_id(i, t) = 3*i + t.
inline constexpr int kNumFeatureTypes = 3;

enum class FeatureType { emotional = 0, attentional = 1, upper_body = 2 };

inline const char* feature_type_name(int t) {
  static const char* names[kNumFeatureTypes] = {"emotional", "attentional", "upper_body"};
  return names[t];
}

inline int node_id(int student, int type) { return student * kNumFeatureTypes + type; }

// Inverted-scaling dropout: keeps entries with probability 1-rate, scaled by
// 1/(1-rate). The mask is a fresh constant drawn from `rng`, so gradients
// flow through the kept entries only.
inline Value apply_dropout(Tape& t, Value x, double rate, Rng& rng) {
  const Matrix& v = t.value(x);
  const double inv_keep = 1.0 / (1.0 - rate);
  Matrix mask(v.rows, v.cols);
  for (double& m : mask.data) m = rng.uniform() < rate ? 0.0 : inv_keep;
  return t.hadamard(x, t.constant(mask));
}

// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))
inline Matrix init_linear(int fan_in, int fan_out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(fan_in, fan_out);
  for (double& x : m.data) x = rng.uniform(-bound, bound);
  return m;
}

}  // namespace engage
