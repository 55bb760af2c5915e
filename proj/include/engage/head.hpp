#pragma once

#include <optional>
#include <vector>

#include "engage/common.hpp"
#include "engage/matrix.hpp"
#include "engage/rng.hpp"
#include "engage/tape.hpp"

namespace engage {

struct HeadParams {
  Matrix weights;  // fused_len x classes
  Matrix bias;     // 1 x classes

  void init(int fused_len, int classes, Rng& rng);
};

struct HeadNodes {
  Value weights;
  Value bias;
};

// Concatenate one student's per-type rows from the available stream outputs,
// interleaved type-major: hyper_e, freq_e, hyper_a, freq_a, hyper_u, freq_u.
// Either stream may be absent (ablations); at least one must be present.
Value fuse(Tape& t, std::optional<Value> hyper_out, std::optional<Value> freq_out,
           int student);

struct Classification {
  Value probabilities;  // 1 x classes tape value
  int predicted = -1;   // argmax, lowest index wins ties
};

// ReLU on the fused row, linear layer, softmax. The prediction is read off
// the forward values.
Classification classify(Tape& t, Value fused, const HeadNodes& head);

// Class-weighted cross-entropy averaged over the batch rows, plus lambda
// times the squared L2 norm of every parameter tensor in `params`.
Value weighted_loss(Tape& t, const std::vector<Value>& probability_rows,
                    const std::vector<int>& labels,
                    const std::vector<double>& class_weights,
                    const std::vector<Value>& params, double lambda);

}  // namespace engage
