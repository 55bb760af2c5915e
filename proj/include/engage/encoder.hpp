#pragma once

#include <array>

#include "engage/common.hpp"
#include "engage/matrix.hpp"
#include "engage/rng.hpp"
#include "engage/tape.hpp"

namespace engage {

// Per-type linear projections into the shared hidden space, plus a learnable
// per-student identity embedding table. A disabled type (feature ablation)
// keeps empty projection tensors; its node feature is the identity embedding
// alone.
struct EncoderParams {
  std::array<Matrix, kNumFeatureTypes> projections;  // d_t x Dh (empty if disabled)
  std::array<Matrix, kNumFeatureTypes> biases;       // 1 x Dh (empty if disabled)
  Matrix student_table;                              // max_students x Dh

  void init(const std::array<int, kNumFeatureTypes>& feature_dims, int hidden_dim,
            int max_students, const std::array<bool, kNumFeatureTypes>& type_enabled,
            Rng& rng);
};

struct EncoderNodes {
  std::array<Value, kNumFeatureTypes> projections;
  std::array<Value, kNumFeatureTypes> biases;
  Value student_table;
};

// Linear projection of one raw feature row (1 x d_t) into the hidden space.
Value project(Tape& t, Value raw_row, const EncoderNodes& enc, int type);

// Row lookup into the identity embedding table; gradients land in that row only.
Value student_embedding(Tape& t, const EncoderNodes& enc, int student_index);

// Encode one student's three raw feature rows: each enabled type gets its
// projection, and the same identity embedding is added to all three types.
// A disabled type's node feature is the embedding alone.
std::array<Value, kNumFeatureTypes> encode_student(
    Tape& t, const std::array<Value, kNumFeatureTypes>& raw_rows, int student_index,
    const EncoderNodes& enc, const std::array<bool, kNumFeatureTypes>& type_enabled);

}  // namespace engage
