#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "engage/model.hpp"

namespace engage {

// End-to-end analytic-vs-central-difference check over a small synthetic
// batch, reported per parameter group. Relative error uses
// |analytic - numeric| / max(1, |numeric|).
struct GradCheckConfig {
  int n_students = 3;
  int hidden_dim = 8;
  int hyper_layers = 2;
  int graph_layers = 2;
  int n_classes = 2;
  bool attention_enabled = true;
  std::uint64_t seed = 0;
  std::array<int, kNumFeatureTypes> feature_dims = {7, 5, 4};
  int n_snapshots = 2;
  double lambda = 1e-3;
  double epsilon = 1e-4;  // central-difference step
  // Test hook: adds `corrupt_delta` to the analytic gradient of the named
  // group's first tensor, which the check must then flag.
  std::string corrupt_group;
  double corrupt_delta = 0.0;
};

struct GradCheckGroup {
  std::string name;
  bool applicable = true;
  double max_rel_error = 0.0;
  int tensors = 0;
};

std::vector<GradCheckGroup> run_gradcheck(const GradCheckConfig& config);

inline bool gradcheck_passed(const std::vector<GradCheckGroup>& groups,
                             double tolerance = 1e-4) {
  for (const GradCheckGroup& g : groups)
    if (g.applicable && g.max_rel_error > tolerance) return false;
  return true;
}

}  // namespace engage
