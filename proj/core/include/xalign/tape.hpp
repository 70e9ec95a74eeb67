#pragma once

#include <functional>
#include <span>
#include <vector>

#include "xalign/matrix.hpp"

namespace xalign {

using NodeId = int;

/// Eager reverse-mode tape over Matrix values.
///
/// Ops compute their result immediately (value() is always readable) and
/// record a backward closure. backward(objective) seeds a 1x1 objective
/// with 1 and accumulates gradients into every node that requires grad,
/// in reverse insertion order. A tape belongs to one thread; build a fresh
/// tape per training step.
class Tape {
 public:
  NodeId constant(Matrix value);
  NodeId param(Matrix value);

  // Elementwise, equal shapes.
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId div(NodeId a, NodeId b);

  NodeId add_scalar(NodeId a, double s);
  NodeId mul_scalar(NodeId a, double s);

  // v is 1xC, broadcast over rows of a.
  NodeId add_rowvec(NodeId a, NodeId v);
  NodeId mul_rowvec(NodeId a, NodeId v);
  // u is Rx1, broadcast over columns of a.
  NodeId sub_colvec(NodeId a, NodeId u);
  NodeId mul_colvec(NodeId a, NodeId u);
  NodeId div_colvec(NodeId a, NodeId u);

  NodeId exp(NodeId a);
  NodeId log(NodeId a);
  NodeId sqrt(NodeId a);
  NodeId tanh(NodeId a);
  NodeId gelu(NodeId a);

  NodeId matmul(NodeId a, NodeId b);
  NodeId transpose(NodeId a);
  NodeId slice_rows(NodeId a, int row_begin, int row_end);
  NodeId slice_cols(NodeId a, int col_begin, int col_end);
  NodeId concat_rows(std::span<const NodeId> parts);
  NodeId concat_cols(std::span<const NodeId> parts);
  /// out[i] = a[indices[i]]; indices may repeat.
  NodeId gather_rows(NodeId a, std::vector<int> indices);
  /// Rows of src land at positions[i]; every other row is fill_row (1xC).
  NodeId scatter_rows(int total_rows, std::vector<int> positions, NodeId src, NodeId fill_row);
  /// Main diagonal of a square matrix as Nx1.
  NodeId diag(NodeId a);

  NodeId row_sum(NodeId a);   // Rx1
  NodeId row_mean(NodeId a);  // Rx1
  NodeId sum_all(NodeId a);   // 1x1
  NodeId mean_all(NodeId a);  // 1x1
  NodeId softmax_rows(NodeId a);
  NodeId log_softmax_rows(NodeId a);

  const Matrix& value(NodeId id) const { return nodes_[id].value; }
  double scalar_value(NodeId id) const { return nodes_[id].value.scalar(); }
  /// Valid after backward(); zero matrix for untouched grads.
  const Matrix& grad(NodeId id) const;
  bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }

  /// Reverse pass from a scalar objective. Resets all gradients first.
  void backward(NodeId objective);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::function<void(Tape&)> backprop;
  };

  NodeId push(Matrix value, bool requires_grad);
  void accum(NodeId parent, const Matrix& g);
  void check_id(NodeId id) const;

  std::vector<Node> nodes_;
  bool grads_ready_ = false;
};

/// Rows scaled to unit L2 norm: a / ||a_row||. Composite of tape primitives,
/// so its gradient comes for free. Throws on a zero-norm row.
NodeId l2_normalize_rows(Tape& t, NodeId a);

/// Column mean as a 1xC row: (1/R) * ones(1xR) @ a.
NodeId mean_over_rows(Tape& t, NodeId a);

}  // namespace xalign
