#pragma once

#include <vector>

#include "engage/matrix.hpp"

namespace engage {

// Handle to a node on a Tape. Only valid for the tape that produced it.
struct Value {
  int id = -1;
};

// Reverse-mode autodiff over dense matrices. Operations append nodes in
// topological order; backward() walks the list once in reverse, accumulating
// adjoints. Single-threaded; independent tapes may run concurrently.
class Tape {
 public:
  // log(x) is clamped below at this floor (slope zero in the clamped region).
  static constexpr double kLogFloor = 1e-12;

  // Leaves. Both receive adjoints; "param" is purely a naming convenience for
  // leaves whose gradient the caller intends to read.
  Value param(const Matrix& m) { return leaf(m); }
  Value constant(const Matrix& m) { return leaf(m); }

  Value matmul(Value a, Value b);
  Value transpose(Value a);
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value hadamard(Value a, Value b);
  Value scale(Value a, double c);
  Value relu(Value a);
  Value leaky_relu(Value a, double slope);

  // Row-wise softmax of a 1xN row vector, max-subtracted for stability.
  Value softmax_row(Value a);
  // Per-row softmax restricted to mask!=0 entries; zeros elsewhere. The mask
  // is a fixed matrix (no gradient through it).
  Value masked_row_softmax(Value a, const Matrix& mask);

  // Horizontal concat of 1xK row vectors into one 1x(sum K) row.
  Value concat_row_vectors(const std::vector<Value>& parts);
  // Vertical stack of 1xD rows into an NxD matrix.
  Value stack_rows(const std::vector<Value>& parts);
  // Rows [first, first+count) as a count x cols block.
  Value slice_rows(Value a, int first, int count);
  // Single entry as a 1x1 matrix.
  Value pick(Value a, int r, int c);

  Value log_clamped(Value a);
  Value sum(Value a);       // 1x1
  Value row_sums(Value a);  // rows x 1
  Value col_sums(Value a);  // 1 x cols
  Value reciprocal(Value a);
  // Multiply row i of a by v[i] (v is rows x 1) / column j by v[j] (1 x cols).
  Value scale_rows(Value a, Value v);
  Value scale_cols(Value a, Value v);

  const Matrix& value(Value v) const { return nodes_[v.id].value; }
  // Adjoint of v; valid after backward().
  const Matrix& grad(Value v) const { return nodes_[v.id].grad; }

  // Seeds the 1x1 loss node with adjoint 1 and sweeps the tape in reverse.
  // Re-runnable: adjoints are zeroed on every call.
  void backward(Value loss);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  enum class Op {
    kLeaf,
    kMatMul,
    kTranspose,
    kAdd,
    kSub,
    kHadamard,
    kScale,
    kRelu,
    kLeakyRelu,
    kSoftmaxRow,
    kMaskedRowSoftmax,
    kConcatRowVecs,
    kStackRows,
    kSliceRows,
    kPick,
    kLogClamped,
    kSum,
    kRowSums,
    kColSums,
    kReciprocal,
    kScaleRows,
    kScaleCols,
  };

  struct Node {
    Op op = Op::kLeaf;
    Matrix value;
    Matrix grad;
    int a = -1;
    int b = -1;
    std::vector<int> parts;  // concat / stack operands
    double aux = 0.0;        // scale factor or leaky slope
    int i0 = 0;              // slice first / pick row
    int i1 = 0;              // slice count / pick col
    Matrix mask;             // masked softmax support
  };

  Value leaf(const Matrix& m);
  Value push(Node n);
  Node& at(Value v) { return nodes_[v.id]; }
  const Node& at(Value v) const { return nodes_[v.id]; }
  void backward_node(Node& n);

  std::vector<Node> nodes_;
};

}  // namespace engage
