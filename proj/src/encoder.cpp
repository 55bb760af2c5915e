#include "engage/encoder.hpp"

#include <string>

#include "engage/errors.hpp"

namespace engage {

void EncoderParams::init(const std::array<int, kNumFeatureTypes>& feature_dims,
                         int hidden_dim, int max_students,
                         const std::array<bool, kNumFeatureTypes>& type_enabled,
                         Rng& rng) {
  for (int t = 0; t < kNumFeatureTypes; ++t) {
    if (!type_enabled[t]) {
      projections[t] = Matrix();
      biases[t] = Matrix();
      continue;
    }
    if (feature_dims[t] < 1) {
      throw ValidationError(std::string("EncoderParams: dimension for ") +
                            feature_type_name(t) + " must be >= 1, got " +
                            std::to_string(feature_dims[t]));
    }
    projections[t] = init_linear(feature_dims[t], hidden_dim, rng);
    biases[t] = Matrix::zeros(1, hidden_dim);
  }
  student_table = Matrix(max_students, hidden_dim);
  for (double& x : student_table.data) x = rng.normal(0.0, 0.02);
}

Value project(Tape& t, Value raw_row, const EncoderNodes& enc, int type) {
  return t.add(t.matmul(raw_row, enc.projections[type]), enc.biases[type]);
}

Value student_embedding(Tape& t, const EncoderNodes& enc, int student_index) {
  const Matrix& table = t.value(enc.student_table);
  if (student_index < 0 || student_index >= table.rows) {
    throw ValidationError("student_embedding: index " + std::to_string(student_index) +
                          " out of range for table with " + std::to_string(table.rows) +
                          " rows");
  }
  return t.slice_rows(enc.student_table, student_index, 1);
}

std::array<Value, kNumFeatureTypes> encode_student(
    Tape& t, const std::array<Value, kNumFeatureTypes>& raw_rows, int student_index,
    const EncoderNodes& enc, const std::array<bool, kNumFeatureTypes>& type_enabled) {
  Value embedding = student_embedding(t, enc, student_index);
  std::array<Value, kNumFeatureTypes> out;
  for (int type = 0; type < kNumFeatureTypes; ++type) {
    if (type_enabled[type]) {
      out[type] = t.add(project(t, raw_rows[type], enc, type), embedding);
    } else {
      out[type] = embedding;
    }
  }
  return out;
}

}  // namespace engage
