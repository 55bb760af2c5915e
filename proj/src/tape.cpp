#include "engage/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "engage/errors.hpp"

namespace engage {

namespace {

// C += A * B
void matmul_nn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* crow = c.row_ptr(i);
    for (int k = 0; k < a.cols; ++k) {
      const double av = arow[k];
      const double* brow = b.row_ptr(k);
      for (int j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
    }
  }
}

// C += A * B^T
void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* crow = c.row_ptr(i);
    for (int j = 0; j < b.rows; ++j) {
      const double* brow = b.row_ptr(j);
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
      crow[j] += acc;
    }
  }
}

// C += A^T * B
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    const double* brow = b.row_ptr(i);
    for (int k = 0; k < a.cols; ++k) {
      const double av = arow[k];
      double* crow = c.row_ptr(k);
      for (int j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
    }
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

}  // namespace

Value Tape::leaf(const Matrix& m) {
  Node n;
  n.op = Op::kLeaf;
  n.value = m;
  return push(std::move(n));
}

Value Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Value{static_cast<int>(nodes_.size()) - 1};
}

Value Tape::matmul(Value a, Value b) {
  const Matrix& ma = value(a);
  const Matrix& mb = value(b);
  require(ma.cols == mb.rows,
          "matmul: inner dimensions differ, lhs " + ma.shape_str() + " vs rhs " + mb.shape_str());
  Node n;
  n.op = Op::kMatMul;
  n.a = a.id;
  n.b = b.id;
  n.value = Matrix(ma.rows, mb.cols);
  matmul_nn_acc(ma, mb, n.value);
  return push(std::move(n));
}

Value Tape::transpose(Value a) {
  const Matrix& ma = value(a);
  Node n;
  n.op = Op::kTranspose;
  n.a = a.id;
  n.value = Matrix(ma.cols, ma.rows);
  for (int i = 0; i < ma.rows; ++i)
    for (int j = 0; j < ma.cols; ++j) n.value.at(j, i) = ma.at(i, j);
  return push(std::move(n));
}

Value Tape::add(Value a, Value b) {
  const Matrix& ma = value(a);
  const Matrix& mb = value(b);
  require(ma.same_shape(mb), "add: shape mismatch " + ma.shape_str() + " vs " + mb.shape_str());
  Node n;
  n.op = Op::kAdd;
  n.a = a.id;
  n.b = b.id;
  n.value = ma;
  for (size_t i = 0; i < mb.data.size(); ++i) n.value.data[i] += mb.data[i];
  return push(std::move(n));
}

Value Tape::sub(Value a, Value b) {
  const Matrix& ma = value(a);
  const Matrix& mb = value(b);
  require(ma.same_shape(mb), "sub: shape mismatch " + ma.shape_str() + " vs " + mb.shape_str());
  Node n;
  n.op = Op::kSub;
  n.a = a.id;
  n.b = b.id;
  n.value = ma;
  for (size_t i = 0; i < mb.data.size(); ++i) n.value.data[i] -= mb.data[i];
  return push(std::move(n));
}

Value Tape::hadamard(Value a, Value b) {
  const Matrix& ma = value(a);
  const Matrix& mb = value(b);
  require(ma.same_shape(mb), "hadamard: shape mismatch " + ma.shape_str() + " vs " + mb.shape_str());
  Node n;
  n.op = Op::kHadamard;
  n.a = a.id;
  n.b = b.id;
  n.value = ma;
  for (size_t i = 0; i < mb.data.size(); ++i) n.value.data[i] *= mb.data[i];
  return push(std::move(n));
}

Value Tape::scale(Value a, double c) {
  Node n;
  n.op = Op::kScale;
  n.a = a.id;
  n.aux = c;
  n.value = value(a);
  for (double& x : n.value.data) x *= c;
  return push(std::move(n));
}

Value Tape::relu(Value a) {
  Node n;
  n.op = Op::kRelu;
  n.a = a.id;
  n.value = value(a);
  for (double& x : n.value.data) x = std::max(0.0, x);
  return push(std::move(n));
}

Value Tape::leaky_relu(Value a, double slope) {
  Node n;
  n.op = Op::kLeakyRelu;
  n.a = a.id;
  n.aux = slope;
  n.value = value(a);
  for (double& x : n.value.data)
    if (x < 0.0) x *= slope;
  return push(std::move(n));
}

Value Tape::softmax_row(Value a) {
  const Matrix& ma = value(a);
  require(ma.rows == 1, "softmax_row: expected a 1xN row vector, got " + ma.shape_str());
  Node n;
  n.op = Op::kSoftmaxRow;
  n.a = a.id;
  n.value = Matrix(1, ma.cols);
  double mx = ma.data[0];
  for (double x : ma.data) mx = std::max(mx, x);
  double total = 0.0;
  for (int j = 0; j < ma.cols; ++j) {
    const double e = std::exp(ma.data[j] - mx);
    n.value.data[j] = e;
    total += e;
  }
  for (double& x : n.value.data) x /= total;
  return push(std::move(n));
}

Value Tape::masked_row_softmax(Value a, const Matrix& mask) {
  const Matrix& ma = value(a);
  require(ma.same_shape(mask),
          "masked_row_softmax: mask shape " + mask.shape_str() + " vs input " + ma.shape_str());
  Node n;
  n.op = Op::kMaskedRowSoftmax;
  n.a = a.id;
  n.mask = mask;
  n.value = Matrix(ma.rows, ma.cols);
  for (int i = 0; i < ma.rows; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < ma.cols; ++j)
      if (mask.at(i, j) != 0.0) mx = std::max(mx, ma.at(i, j));
    if (!std::isfinite(mx)) continue;  // empty support row stays all-zero
    double total = 0.0;
    for (int j = 0; j < ma.cols; ++j) {
      if (mask.at(i, j) == 0.0) continue;
      const double e = std::exp(ma.at(i, j) - mx);
      n.value.at(i, j) = e;
      total += e;
    }
    for (int j = 0; j < ma.cols; ++j)
      if (mask.at(i, j) != 0.0) n.value.at(i, j) /= total;
  }
  return push(std::move(n));
}

Value Tape::concat_row_vectors(const std::vector<Value>& parts) {
  require(!parts.empty(), "concat_row_vectors: empty part list");
  int total = 0;
  for (Value p : parts) {
    const Matrix& m = value(p);
    require(m.rows == 1, "concat_row_vectors: part is " + m.shape_str() + ", expected a row vector");
    total += m.cols;
  }
  Node n;
  n.op = Op::kConcatRowVecs;
  n.value = Matrix(1, total);
  int off = 0;
  for (Value p : parts) {
    const Matrix& m = value(p);
    std::copy(m.data.begin(), m.data.end(), n.value.data.begin() + off);
    off += m.cols;
    n.parts.push_back(p.id);
  }
  return push(std::move(n));
}

Value Tape::stack_rows(const std::vector<Value>& parts) {
  require(!parts.empty(), "stack_rows: empty part list");
  const int cols = value(parts[0]).cols;
  for (Value p : parts) {
    const Matrix& m = value(p);
    require(m.rows == 1 && m.cols == cols,
            "stack_rows: part is " + m.shape_str() + ", expected 1x" + std::to_string(cols));
  }
  Node n;
  n.op = Op::kStackRows;
  n.value = Matrix(static_cast<int>(parts.size()), cols);
  for (size_t i = 0; i < parts.size(); ++i) {
    const Matrix& m = value(parts[i]);
    std::copy(m.data.begin(), m.data.end(), n.value.row_ptr(static_cast<int>(i)));
    n.parts.push_back(parts[i].id);
  }
  return push(std::move(n));
}

Value Tape::slice_rows(Value a, int first, int count) {
  const Matrix& ma = value(a);
  require(first >= 0 && count >= 1 && first + count <= ma.rows,
          "slice_rows: rows [" + std::to_string(first) + ", " + std::to_string(first + count) +
              ") out of range for " + ma.shape_str());
  Node n;
  n.op = Op::kSliceRows;
  n.a = a.id;
  n.i0 = first;
  n.i1 = count;
  n.value = Matrix(count, ma.cols);
  std::copy(ma.row_ptr(first), ma.row_ptr(first) + static_cast<size_t>(count) * ma.cols,
            n.value.data.begin());
  return push(std::move(n));
}

Value Tape::pick(Value a, int r, int c) {
  const Matrix& ma = value(a);
  require(r >= 0 && r < ma.rows && c >= 0 && c < ma.cols,
          "pick: entry (" + std::to_string(r) + ", " + std::to_string(c) + ") out of range for " +
              ma.shape_str());
  Node n;
  n.op = Op::kPick;
  n.a = a.id;
  n.i0 = r;
  n.i1 = c;
  n.value = Matrix(1, 1);
  n.value.data[0] = ma.at(r, c);
  return push(std::move(n));
}

Value Tape::log_clamped(Value a) {
  Node n;
  n.op = Op::kLogClamped;
  n.a = a.id;
  n.value = value(a);
  for (double& x : n.value.data) x = std::log(std::max(x, kLogFloor));
  return push(std::move(n));
}

Value Tape::sum(Value a) {
  Node n;
  n.op = Op::kSum;
  n.a = a.id;
  n.value = Matrix(1, 1);
  double acc = 0.0;
  for (double x : value(a).data) acc += x;
  n.value.data[0] = acc;
  return push(std::move(n));
}

Value Tape::row_sums(Value a) {
  const Matrix& ma = value(a);
  Node n;
  n.op = Op::kRowSums;
  n.a = a.id;
  n.value = Matrix(ma.rows, 1);
  for (int i = 0; i < ma.rows; ++i) {
    double acc = 0.0;
    const double* row = ma.row_ptr(i);
    for (int j = 0; j < ma.cols; ++j) acc += row[j];
    n.value.data[i] = acc;
  }
  return push(std::move(n));
}

Value Tape::col_sums(Value a) {
  const Matrix& ma = value(a);
  Node n;
  n.op = Op::kColSums;
  n.a = a.id;
  n.value = Matrix(1, ma.cols);
  for (int i = 0; i < ma.rows; ++i) {
    const double* row = ma.row_ptr(i);
    for (int j = 0; j < ma.cols; ++j) n.value.data[j] += row[j];
  }
  return push(std::move(n));
}

Value Tape::reciprocal(Value a) {
  Node n;
  n.op = Op::kReciprocal;
  n.a = a.id;
  n.value = value(a);
  for (double& x : n.value.data) x = 1.0 / x;
  return push(std::move(n));
}

Value Tape::scale_rows(Value a, Value v) {
  const Matrix& ma = value(a);
  const Matrix& mv = value(v);
  require(mv.rows == ma.rows && mv.cols == 1,
          "scale_rows: scaler " + mv.shape_str() + " does not match " + ma.shape_str());
  Node n;
  n.op = Op::kScaleRows;
  n.a = a.id;
  n.b = v.id;
  n.value = ma;
  for (int i = 0; i < ma.rows; ++i) {
    double* row = n.value.row_ptr(i);
    for (int j = 0; j < ma.cols; ++j) row[j] *= mv.data[i];
  }
  return push(std::move(n));
}

Value Tape::scale_cols(Value a, Value v) {
  const Matrix& ma = value(a);
  const Matrix& mv = value(v);
  require(mv.cols == ma.cols && mv.rows == 1,
          "scale_cols: scaler " + mv.shape_str() + " does not match " + ma.shape_str());
  Node n;
  n.op = Op::kScaleCols;
  n.a = a.id;
  n.b = v.id;
  n.value = ma;
  for (int i = 0; i < ma.rows; ++i) {
    double* row = n.value.row_ptr(i);
    for (int j = 0; j < ma.cols; ++j) row[j] *= mv.data[j];
  }
  return push(std::move(n));
}

void Tape::backward(Value loss) {
  const Matrix& ml = value(loss);
  require(ml.rows == 1 && ml.cols == 1,
          "backward: loss must be a 1x1 scalar, got " + ml.shape_str());
  for (Node& n : nodes_) {
    n.grad = Matrix(n.value.rows, n.value.cols);
  }
  nodes_[loss.id].grad.data[0] = 1.0;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    backward_node(nodes_[i]);
  }
}

void Tape::backward_node(Node& n) {
  const Matrix& g = n.grad;
  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kMatMul: {
      matmul_nt_acc(g, nodes_[n.b].value, nodes_[n.a].grad);
      matmul_tn_acc(nodes_[n.a].value, g, nodes_[n.b].grad);
      break;
    }
    case Op::kTranspose: {
      Matrix& ga = nodes_[n.a].grad;
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) ga.at(j, i) += g.at(i, j);
      break;
    }
    case Op::kAdd: {
      Matrix& ga = nodes_[n.a].grad;
      Matrix& gb = nodes_[n.b].grad;
      for (size_t i = 0; i < g.data.size(); ++i) {
        ga.data[i] += g.data[i];
        gb.data[i] += g.data[i];
      }
      break;
    }
    case Op::kSub: {
      Matrix& ga = nodes_[n.a].grad;
      Matrix& gb = nodes_[n.b].grad;
      for (size_t i = 0; i < g.data.size(); ++i) {
        ga.data[i] += g.data[i];
        gb.data[i] -= g.data[i];
      }
      break;
    }
    case Op::kHadamard: {
      Matrix& ga = nodes_[n.a].grad;
      Matrix& gb = nodes_[n.b].grad;
      const Matrix& va = nodes_[n.a].value;
      const Matrix& vb = nodes_[n.b].value;
      for (size_t i = 0; i < g.data.size(); ++i) {
        ga.data[i] += g.data[i] * vb.data[i];
        gb.data[i] += g.data[i] * va.data[i];
      }
      break;
    }
    case Op::kScale: {
      Matrix& ga = nodes_[n.a].grad;
      for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += n.aux * g.data[i];
      break;
    }
    case Op::kRelu: {
      Matrix& ga = nodes_[n.a].grad;
      const Matrix& va = nodes_[n.a].value;
      // subgradient 0 at exactly 0
      for (size_t i = 0; i < g.data.size(); ++i)
        if (va.data[i] > 0.0) ga.data[i] += g.data[i];
      break;
    }
    case Op::kLeakyRelu: {
      Matrix& ga = nodes_[n.a].grad;
      const Matrix& va = nodes_[n.a].value;
      for (size_t i = 0; i < g.data.size(); ++i)
        ga.data[i] += g.data[i] * (va.data[i] > 0.0 ? 1.0 : n.aux);
      break;
    }
    case Op::kSoftmaxRow: {
      Matrix& ga = nodes_[n.a].grad;
      const Matrix& p = n.value;
      double dot = 0.0;
      for (size_t j = 0; j < p.data.size(); ++j) dot += g.data[j] * p.data[j];
      for (size_t j = 0; j < p.data.size(); ++j) ga.data[j] += p.data[j] * (g.data[j] - dot);
      break;
    }
    case Op::kMaskedRowSoftmax: {
      Matrix& ga = nodes_[n.a].grad;
      const Matrix& p = n.value;
      for (int i = 0; i < p.rows; ++i) {
        double dot = 0.0;
        for (int j = 0; j < p.cols; ++j)
          if (n.mask.at(i, j) != 0.0) dot += g.at(i, j) * p.at(i, j);
        for (int j = 0; j < p.cols; ++j)
          if (n.mask.at(i, j) != 0.0) ga.at(i, j) += p.at(i, j) * (g.at(i, j) - dot);
      }
      break;
    }
    case Op::kConcatRowVecs: {
      int off = 0;
      for (int pid : n.parts) {
        Matrix& gp = nodes_[pid].grad;
        for (int j = 0; j < gp.cols; ++j) gp.data[j] += g.data[off + j];
        off += gp.cols;
      }
      break;
    }
    case Op::kStackRows: {
      for (size_t i = 0; i < n.parts.size(); ++i) {
        Matrix& gp = nodes_[n.parts[i]].grad;
        const double* grow = g.row_ptr(static_cast<int>(i));
        for (int j = 0; j < gp.cols; ++j) gp.data[j] += grow[j];
      }
      break;
    }
    case Op::kSliceRows: {
      Matrix& ga = nodes_[n.a].grad;
      for (int i = 0; i < n.i1; ++i) {
        double* garow = ga.row_ptr(n.i0 + i);
        const double* grow = g.row_ptr(i);
        for (int j = 0; j < g.cols; ++j) garow[j] += grow[j];
      }
      break;
    }
    case Op::kPick: {
      nodes_[n.a].grad.at(n.i0, n.i1) += g.data[0];
      break;
    }
    case Op::kLogClamped: {
      Matrix& ga = nodes_[n.a].grad;
      const Matrix& va = nodes_[n.a].value;
      for (size_t i = 0; i < g.data.size(); ++i)
        if (va.data[i] > kLogFloor) ga.data[i] += g.data[i] / va.data[i];
      break;
    }
    case Op::kSum: {
      Matrix& ga = nodes_[n.a].grad;
      const double gs = g.data[0];
      for (double& x : ga.data) x += gs;
      break;
    }
    case Op::kRowSums: {
      Matrix& ga = nodes_[n.a].grad;
      for (int i = 0; i < ga.rows; ++i) {
        double* garow = ga.row_ptr(i);
        const double gi = g.data[i];
        for (int j = 0; j < ga.cols; ++j) garow[j] += gi;
      }
      break;
    }
    case Op::kColSums: {
      Matrix& ga = nodes_[n.a].grad;
      for (int i = 0; i < ga.rows; ++i) {
        double* garow = ga.row_ptr(i);
        for (int j = 0; j < ga.cols; ++j) garow[j] += g.data[j];
      }
      break;
    }
    case Op::kReciprocal: {
      Matrix& ga = nodes_[n.a].grad;
      const Matrix& y = n.value;
      for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] -= g.data[i] * y.data[i] * y.data[i];
      break;
    }
    case Op::kScaleRows: {
      Matrix& ga = nodes_[n.a].grad;
      Matrix& gv = nodes_[n.b].grad;
      const Matrix& va = nodes_[n.a].value;
      const Matrix& vv = nodes_[n.b].value;
      for (int i = 0; i < g.rows; ++i) {
        const double* grow = g.row_ptr(i);
        const double* varow = va.row_ptr(i);
        double* garow = ga.row_ptr(i);
        double acc = 0.0;
        for (int j = 0; j < g.cols; ++j) {
          garow[j] += grow[j] * vv.data[i];
          acc += grow[j] * varow[j];
        }
        gv.data[i] += acc;
      }
      break;
    }
    case Op::kScaleCols: {
      Matrix& ga = nodes_[n.a].grad;
      Matrix& gv = nodes_[n.b].grad;
      const Matrix& va = nodes_[n.a].value;
      const Matrix& vv = nodes_[n.b].value;
      for (int i = 0; i < g.rows; ++i) {
        const double* grow = g.row_ptr(i);
        const double* varow = va.row_ptr(i);
        double* garow = ga.row_ptr(i);
        for (int j = 0; j < g.cols; ++j) {
          garow[j] += grow[j] * vv.data[j];
          gv.data[j] += grow[j] * varow[j];
        }
      }
      break;
    }
  }
}

}  // namespace engage
