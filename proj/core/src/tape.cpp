#include "xalign/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace xalign {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

NodeId Tape::push(Matrix value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

void Tape::check_id(NodeId id) const {
  if (id < 0 || id >= static_cast<NodeId>(nodes_.size())) {
    throw std::invalid_argument("tape: invalid node id");
  }
}

void Tape::accum(NodeId parent, const Matrix& g) {
  Node& p = nodes_[parent];
  if (!p.requires_grad) return;
  for (size_t i = 0; i < p.grad.data.size(); ++i) p.grad.data[i] += g.data[i];
}

const Matrix& Tape::grad(NodeId id) const {
  check_id(id);
  if (!grads_ready_) throw std::runtime_error("tape: grad read before backward()");
  return nodes_[id].grad;
}

NodeId Tape::constant(Matrix value) {
  require_finite(value, "tape constant");
  return push(std::move(value), false);
}

NodeId Tape::param(Matrix value) {
  require_finite(value, "tape param");
  return push(std::move(value), true);
}

NodeId Tape::add(NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  require_same_shape(value(a), value(b), "tape add");
  Matrix out = xalign::add(value(a), value(b));
  const bool rg = requires_grad(a) || requires_grad(b);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, b, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      t.accum(a, g);
      t.accum(b, g);
    };
  }
  return self;
}

NodeId Tape::sub(NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  require_same_shape(value(a), value(b), "tape sub");
  Matrix out = xalign::sub(value(a), value(b));
  const bool rg = requires_grad(a) || requires_grad(b);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, b, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      t.accum(a, g);
      if (t.nodes_[b].requires_grad) {
        Matrix neg = scale(g, -1.0);
        t.accum(b, neg);
      }
    };
  }
  return self;
}

NodeId Tape::mul(NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  require_same_shape(value(a), value(b), "tape mul");
  Matrix out = hadamard(value(a), value(b));
  const bool rg = requires_grad(a) || requires_grad(b);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, b, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      if (t.nodes_[a].requires_grad) t.accum(a, hadamard(g, t.nodes_[b].value));
      if (t.nodes_[b].requires_grad) t.accum(b, hadamard(g, t.nodes_[a].value));
    };
  }
  return self;
}

NodeId Tape::div(NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  require_same_shape(value(a), value(b), "tape div");
  Matrix out = value(a);
  const Matrix& bv = value(b);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] /= bv.data[i];
  require_finite(out, "tape div");
  const bool rg = requires_grad(a) || requires_grad(b);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, b, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      const Matrix& bv = t.nodes_[b].value;
      const Matrix& ov = t.nodes_[self].value;
      if (t.nodes_[a].requires_grad) {
        Matrix ga = g;
        for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] /= bv.data[i];
        t.accum(a, ga);
      }
      if (t.nodes_[b].requires_grad) {
        Matrix gb = g;
        for (size_t i = 0; i < gb.data.size(); ++i) gb.data[i] *= -ov.data[i] / bv.data[i];
        t.accum(b, gb);
      }
    };
  }
  return self;
}

NodeId Tape::add_scalar(NodeId a, double s) {
  check_id(a);
  Matrix out = value(a);
  for (double& v : out.data) v += s;
  const bool rg = requires_grad(a);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, self](Tape& t) { t.accum(a, t.nodes_[self].grad); };
  }
  return self;
}

NodeId Tape::mul_scalar(NodeId a, double s) {
  check_id(a);
  Matrix out = scale(value(a), s);
  const bool rg = requires_grad(a);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, s, self](Tape& t) { t.accum(a, scale(t.nodes_[self].grad, s)); };
  }
  return self;
}

NodeId Tape::add_rowvec(NodeId a, NodeId v) {
  check_id(a);
  check_id(v);
  const Matrix& av = value(a);
  const Matrix& vv = value(v);
  if (vv.rows != 1 || vv.cols != av.cols) throw std::invalid_argument("add_rowvec: v must be 1 x cols(a)");
  Matrix out = av;
  for (int i = 0; i < out.rows; ++i) {
    double* row = out.row_ptr(i);
    for (int j = 0; j < out.cols; ++j) row[j] += vv.data[j];
  }
  const bool rg = requires_grad(a) || requires_grad(v);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, v, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      t.accum(a, g);
      if (t.nodes_[v].requires_grad) {
        Matrix gv(1, g.cols, 0.0);
        for (int i = 0; i < g.rows; ++i) {
          const double* row = g.row_ptr(i);
          for (int j = 0; j < g.cols; ++j) gv.data[j] += row[j];
        }
        t.accum(v, gv);
      }
    };
  }
  return self;
}

NodeId Tape::mul_rowvec(NodeId a, NodeId v) {
  check_id(a);
  check_id(v);
  const Matrix& av = value(a);
  const Matrix& vv = value(v);
  if (vv.rows != 1 || vv.cols != av.cols) throw std::invalid_argument("mul_rowvec: v must be 1 x cols(a)");
  Matrix out = av;
  for (int i = 0; i < out.rows; ++i) {
    double* row = out.row_ptr(i);
    for (int j = 0; j < out.cols; ++j) row[j] *= vv.data[j];
  }
  const bool rg = requires_grad(a) || requires_grad(v);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, v, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      const Matrix& av = t.nodes_[a].value;
      const Matrix& vv = t.nodes_[v].value;
      if (t.nodes_[a].requires_grad) {
        Matrix ga = g;
        for (int i = 0; i < ga.rows; ++i) {
          double* row = ga.row_ptr(i);
          for (int j = 0; j < ga.cols; ++j) row[j] *= vv.data[j];
        }
        t.accum(a, ga);
      }
      if (t.nodes_[v].requires_grad) {
        Matrix gv(1, g.cols, 0.0);
        for (int i = 0; i < g.rows; ++i) {
          const double* grow = g.row_ptr(i);
          const double* arow = av.row_ptr(i);
          for (int j = 0; j < g.cols; ++j) gv.data[j] += grow[j] * arow[j];
        }
        t.accum(v, gv);
      }
    };
  }
  return self;
}

NodeId Tape::sub_colvec(NodeId a, NodeId u) {
  check_id(a);
  check_id(u);
  const Matrix& av = value(a);
  const Matrix& uv = value(u);
  if (uv.cols != 1 || uv.rows != av.rows) throw std::invalid_argument("sub_colvec: u must be rows(a) x 1");
  Matrix out = av;
  for (int i = 0; i < out.rows; ++i) {
    double* row = out.row_ptr(i);
    const double ui = uv.data[i];
    for (int j = 0; j < out.cols; ++j) row[j] -= ui;
  }
  const bool rg = requires_grad(a) || requires_grad(u);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, u, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      t.accum(a, g);
      if (t.nodes_[u].requires_grad) {
        Matrix gu(g.rows, 1, 0.0);
        for (int i = 0; i < g.rows; ++i) {
          const double* row = g.row_ptr(i);
          double s = 0.0;
          for (int j = 0; j < g.cols; ++j) s += row[j];
          gu.data[i] = -s;
        }
        t.accum(u, gu);
      }
    };
  }
  return self;
}

NodeId Tape::mul_colvec(NodeId a, NodeId u) {
  check_id(a);
  check_id(u);
  const Matrix& av = value(a);
  const Matrix& uv = value(u);
  if (uv.cols != 1 || uv.rows != av.rows) throw std::invalid_argument("mul_colvec: u must be rows(a) x 1");
  Matrix out = av;
  for (int i = 0; i < out.rows; ++i) {
    double* row = out.row_ptr(i);
    const double ui = uv.data[i];
    for (int j = 0; j < out.cols; ++j) row[j] *= ui;
  }
  const bool rg = requires_grad(a) || requires_grad(u);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, u, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      const Matrix& av = t.nodes_[a].value;
      const Matrix& uv = t.nodes_[u].value;
      if (t.nodes_[a].requires_grad) {
        Matrix ga = g;
        for (int i = 0; i < ga.rows; ++i) {
          double* row = ga.row_ptr(i);
          const double ui = uv.data[i];
          for (int j = 0; j < ga.cols; ++j) row[j] *= ui;
        }
        t.accum(a, ga);
      }
      if (t.nodes_[u].requires_grad) {
        Matrix gu(g.rows, 1, 0.0);
        for (int i = 0; i < g.rows; ++i) {
          const double* grow = g.row_ptr(i);
          const double* arow = av.row_ptr(i);
          double s = 0.0;
          for (int j = 0; j < g.cols; ++j) s += grow[j] * arow[j];
          gu.data[i] = s;
        }
        t.accum(u, gu);
      }
    };
  }
  return self;
}

NodeId Tape::div_colvec(NodeId a, NodeId u) {
  check_id(a);
  check_id(u);
  const Matrix& av = value(a);
  const Matrix& uv = value(u);
  if (uv.cols != 1 || uv.rows != av.rows) throw std::invalid_argument("div_colvec: u must be rows(a) x 1");
  Matrix out = av;
  for (int i = 0; i < out.rows; ++i) {
    double* row = out.row_ptr(i);
    const double ui = uv.data[i];
    for (int j = 0; j < out.cols; ++j) row[j] /= ui;
  }
  require_finite(out, "tape div_colvec");
  const bool rg = requires_grad(a) || requires_grad(u);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, u, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      const Matrix& ov = t.nodes_[self].value;
      const Matrix& uv = t.nodes_[u].value;
      if (t.nodes_[a].requires_grad) {
        Matrix ga = g;
        for (int i = 0; i < ga.rows; ++i) {
          double* row = ga.row_ptr(i);
          const double ui = uv.data[i];
          for (int j = 0; j < ga.cols; ++j) row[j] /= ui;
        }
        t.accum(a, ga);
      }
      if (t.nodes_[u].requires_grad) {
        Matrix gu(g.rows, 1, 0.0);
        for (int i = 0; i < g.rows; ++i) {
          const double* grow = g.row_ptr(i);
          const double* orow = ov.row_ptr(i);
          double s = 0.0;
          for (int j = 0; j < g.cols; ++j) s += grow[j] * orow[j];
          gu.data[i] = -s / uv.data[i];
        }
        t.accum(u, gu);
      }
    };
  }
  return self;
}

NodeId Tape::exp(NodeId a) {
  check_id(a);
  Matrix out = value(a);
  for (double& v : out.data) v = std::exp(v);
  require_finite(out, "tape exp");
  const bool rg = requires_grad(a);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, self](Tape& t) {
      t.accum(a, hadamard(t.nodes_[self].grad, t.nodes_[self].value));
    };
  }
  return self;
}

NodeId Tape::log(NodeId a) {
  check_id(a);
  Matrix out = value(a);
  for (double& v : out.data) v = std::log(v);
  require_finite(out, "tape log");
  const bool rg = requires_grad(a);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      const Matrix& av = t.nodes_[a].value;
      Matrix ga = g;
      for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] /= av.data[i];
      t.accum(a, ga);
    };
  }
  return self;
}

NodeId Tape::sqrt(NodeId a) {
  check_id(a);
  Matrix out = value(a);
  for (double& v : out.data) v = std::sqrt(v);
  require_finite(out, "tape sqrt");
  const bool rg = requires_grad(a);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      const Matrix& ov = t.nodes_[self].value;
      Matrix ga = g;
      for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] *= 0.5 / ov.data[i];
      t.accum(a, ga);
    };
  }
  return self;
}

NodeId Tape::tanh(NodeId a) {
  check_id(a);
  Matrix out = value(a);
  for (double& v : out.data) v = std::tanh(v);
  const bool rg = requires_grad(a);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      const Matrix& ov = t.nodes_[self].value;
      Matrix ga = g;
      for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] *= 1.0 - ov.data[i] * ov.data[i];
      t.accum(a, ga);
    };
  }
  return self;
}

NodeId Tape::gelu(NodeId a) {
  check_id(a);
  Matrix out = value(a);
  for (double& v : out.data) v = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
  const bool rg = requires_grad(a);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      const Matrix& av = t.nodes_[a].value;
      Matrix ga = g;
      for (size_t i = 0; i < ga.data.size(); ++i) {
        const double x = av.data[i];
        const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
        ga.data[i] *= cdf + x * pdf;
      }
      t.accum(a, ga);
    };
  }
  return self;
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  check_id(a);
  check_id(b);
  Matrix out = xalign::matmul(value(a), value(b));
  const bool rg = requires_grad(a) || requires_grad(b);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, b, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      if (t.nodes_[a].requires_grad) t.accum(a, xalign::matmul(g, xalign::transpose(t.nodes_[b].value)));
      if (t.nodes_[b].requires_grad) t.accum(b, xalign::matmul(xalign::transpose(t.nodes_[a].value), g));
    };
  }
  return self;
}

NodeId Tape::transpose(NodeId a) {
  check_id(a);
  Matrix out = xalign::transpose(value(a));
  const bool rg = requires_grad(a);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, self](Tape& t) { t.accum(a, xalign::transpose(t.nodes_[self].grad)); };
  }
  return self;
}

NodeId Tape::slice_rows(NodeId a, int row_begin, int row_end) {
  check_id(a);
  const Matrix& av = value(a);
  if (row_begin < 0 || row_end > av.rows || row_begin >= row_end) {
    throw std::invalid_argument("slice_rows: bad range");
  }
  Matrix out(row_end - row_begin, av.cols);
  for (int i = 0; i < out.rows; ++i) {
    const double* src = av.row_ptr(row_begin + i);
    double* dst = out.row_ptr(i);
    for (int j = 0; j < out.cols; ++j) dst[j] = src[j];
  }
  const bool rg = requires_grad(a);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, row_begin, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      Node& p = t.nodes_[a];
      if (!p.requires_grad) return;
      for (int i = 0; i < g.rows; ++i) {
        const double* src = g.row_ptr(i);
        double* dst = p.grad.row_ptr(row_begin + i);
        for (int j = 0; j < g.cols; ++j) dst[j] += src[j];
      }
    };
  }
  return self;
}

NodeId Tape::slice_cols(NodeId a, int col_begin, int col_end) {
  check_id(a);
  const Matrix& av = value(a);
  if (col_begin < 0 || col_end > av.cols || col_begin >= col_end) {
    throw std::invalid_argument("slice_cols: bad range");
  }
  Matrix out(av.rows, col_end - col_begin);
  for (int i = 0; i < out.rows; ++i) {
    const double* src = av.row_ptr(i);
    double* dst = out.row_ptr(i);
    for (int j = 0; j < out.cols; ++j) dst[j] = src[col_begin + j];
  }
  const bool rg = requires_grad(a);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, col_begin, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      Node& p = t.nodes_[a];
      if (!p.requires_grad) return;
      for (int i = 0; i < g.rows; ++i) {
        const double* src = g.row_ptr(i);
        double* dst = p.grad.row_ptr(i);
        for (int j = 0; j < g.cols; ++j) dst[col_begin + j] += src[j];
      }
    };
  }
  return self;
}

NodeId Tape::concat_rows(std::span<const NodeId> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: empty input");
  int total = 0;
  const int cols = value(parts[0]).cols;
  bool rg = false;
  for (NodeId p : parts) {
    check_id(p);
    if (value(p).cols != cols) throw std::invalid_argument("concat_rows: column mismatch");
    total += value(p).rows;
    rg = rg || requires_grad(p);
  }
  Matrix out(total, cols);
  int at = 0;
  for (NodeId p : parts) {
    const Matrix& pv = value(p);
    for (int i = 0; i < pv.rows; ++i) {
      const double* src = pv.row_ptr(i);
      double* dst = out.row_ptr(at + i);
      for (int j = 0; j < cols; ++j) dst[j] = src[j];
    }
    at += pv.rows;
  }
  NodeId self = push(std::move(out), rg);
  if (rg) {
    std::vector<NodeId> ps(parts.begin(), parts.end());
    nodes_[self].backprop = [ps, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      int at = 0;
      for (NodeId p : ps) {
        Node& pn = t.nodes_[p];
        const int rows = pn.value.rows;
        if (pn.requires_grad) {
          for (int i = 0; i < rows; ++i) {
            const double* src = g.row_ptr(at + i);
            double* dst = pn.grad.row_ptr(i);
            for (int j = 0; j < g.cols; ++j) dst[j] += src[j];
          }
        }
        at += rows;
      }
    };
  }
  return self;
}

NodeId Tape::concat_cols(std::span<const NodeId> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty input");
  int total = 0;
  const int rows = value(parts[0]).rows;
  bool rg = false;
  for (NodeId p : parts) {
    check_id(p);
    if (value(p).rows != rows) throw std::invalid_argument("concat_cols: row mismatch");
    total += value(p).cols;
    rg = rg || requires_grad(p);
  }
  Matrix out(rows, total);
  int at = 0;
  for (NodeId p : parts) {
    const Matrix& pv = value(p);
    for (int i = 0; i < rows; ++i) {
      const double* src = pv.row_ptr(i);
      double* dst = out.row_ptr(i);
      for (int j = 0; j < pv.cols; ++j) dst[at + j] = src[j];
    }
    at += pv.cols;
  }
  NodeId self = push(std::move(out), rg);
  if (rg) {
    std::vector<NodeId> ps(parts.begin(), parts.end());
    nodes_[self].backprop = [ps, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      int at = 0;
      for (NodeId p : ps) {
        Node& pn = t.nodes_[p];
        const int cols = pn.value.cols;
        if (pn.requires_grad) {
          for (int i = 0; i < g.rows; ++i) {
            const double* src = g.row_ptr(i);
            double* dst = pn.grad.row_ptr(i);
            for (int j = 0; j < cols; ++j) dst[j] += src[at + j];
          }
        }
        at += cols;
      }
    };
  }
  return self;
}

NodeId Tape::gather_rows(NodeId a, std::vector<int> indices) {
  check_id(a);
  const Matrix& av = value(a);
  for (int idx : indices) {
    if (idx < 0 || idx >= av.rows) throw std::invalid_argument("gather_rows: index out of range");
  }
  Matrix out(static_cast<int>(indices.size()), av.cols);
  for (size_t i = 0; i < indices.size(); ++i) {
    const double* src = av.row_ptr(indices[i]);
    double* dst = out.row_ptr(static_cast<int>(i));
    for (int j = 0; j < av.cols; ++j) dst[j] = src[j];
  }
  const bool rg = requires_grad(a);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, indices = std::move(indices), self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      Node& p = t.nodes_[a];
      if (!p.requires_grad) return;
      for (size_t i = 0; i < indices.size(); ++i) {
        const double* src = g.row_ptr(static_cast<int>(i));
        double* dst = p.grad.row_ptr(indices[i]);
        for (int j = 0; j < g.cols; ++j) dst[j] += src[j];
      }
    };
  }
  return self;
}

NodeId Tape::scatter_rows(int total_rows, std::vector<int> positions, NodeId src, NodeId fill_row) {
  check_id(src);
  check_id(fill_row);
  const Matrix& sv = value(src);
  const Matrix& fv = value(fill_row);
  if (fv.rows != 1 || fv.cols != sv.cols) throw std::invalid_argument("scatter_rows: fill_row must be 1 x cols(src)");
  if (static_cast<int>(positions.size()) != sv.rows) {
    throw std::invalid_argument("scatter_rows: positions length != rows(src)");
  }
  std::vector<char> taken(static_cast<size_t>(total_rows), 0);
  for (int p : positions) {
    if (p < 0 || p >= total_rows) throw std::invalid_argument("scatter_rows: position out of range");
    if (taken[p]) throw std::invalid_argument("scatter_rows: duplicate position");
    taken[p] = 1;
  }
  Matrix out(total_rows, sv.cols);
  for (int i = 0; i < total_rows; ++i) {
    double* dst = out.row_ptr(i);
    if (!taken[i]) {
      for (int j = 0; j < sv.cols; ++j) dst[j] = fv.data[j];
    }
  }
  for (size_t i = 0; i < positions.size(); ++i) {
    const double* s = sv.row_ptr(static_cast<int>(i));
    double* dst = out.row_ptr(positions[i]);
    for (int j = 0; j < sv.cols; ++j) dst[j] = s[j];
  }
  const bool rg = requires_grad(src) || requires_grad(fill_row);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop =
        [src, fill_row, positions = std::move(positions), taken = std::move(taken), self](Tape& t) {
          const Matrix& g = t.nodes_[self].grad;
          Node& sp = t.nodes_[src];
          if (sp.requires_grad) {
            for (size_t i = 0; i < positions.size(); ++i) {
              const double* grow = g.row_ptr(positions[i]);
              double* dst = sp.grad.row_ptr(static_cast<int>(i));
              for (int j = 0; j < g.cols; ++j) dst[j] += grow[j];
            }
          }
          Node& fp = t.nodes_[fill_row];
          if (fp.requires_grad) {
            for (int i = 0; i < g.rows; ++i) {
              if (taken[i]) continue;
              const double* grow = g.row_ptr(i);
              for (int j = 0; j < g.cols; ++j) fp.grad.data[j] += grow[j];
            }
          }
        };
  }
  return self;
}

NodeId Tape::diag(NodeId a) {
  check_id(a);
  const Matrix& av = value(a);
  if (av.rows != av.cols) throw std::invalid_argument("diag: matrix not square");
  Matrix out(av.rows, 1);
  for (int i = 0; i < av.rows; ++i) out.data[i] = av.at(i, i);
  const bool rg = requires_grad(a);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      Node& p = t.nodes_[a];
      if (!p.requires_grad) return;
      for (int i = 0; i < g.rows; ++i) p.grad.at(i, i) += g.data[i];
    };
  }
  return self;
}

NodeId Tape::row_sum(NodeId a) {
  check_id(a);
  const Matrix& av = value(a);
  Matrix out(av.rows, 1);
  for (int i = 0; i < av.rows; ++i) {
    const double* row = av.row_ptr(i);
    double s = 0.0;
    for (int j = 0; j < av.cols; ++j) s += row[j];
    out.data[i] = s;
  }
  const bool rg = requires_grad(a);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      Node& p = t.nodes_[a];
      if (!p.requires_grad) return;
      for (int i = 0; i < p.grad.rows; ++i) {
        double* dst = p.grad.row_ptr(i);
        const double gi = g.data[i];
        for (int j = 0; j < p.grad.cols; ++j) dst[j] += gi;
      }
    };
  }
  return self;
}

NodeId Tape::row_mean(NodeId a) {
  check_id(a);
  const Matrix& av = value(a);
  if (av.cols == 0) throw std::invalid_argument("row_mean: zero columns");
  Matrix out(av.rows, 1);
  for (int i = 0; i < av.rows; ++i) {
    const double* row = av.row_ptr(i);
    double s = 0.0;
    for (int j = 0; j < av.cols; ++j) s += row[j];
    out.data[i] = s / av.cols;
  }
  const bool rg = requires_grad(a);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      Node& p = t.nodes_[a];
      if (!p.requires_grad) return;
      const double inv = 1.0 / p.grad.cols;
      for (int i = 0; i < p.grad.rows; ++i) {
        double* dst = p.grad.row_ptr(i);
        const double gi = g.data[i] * inv;
        for (int j = 0; j < p.grad.cols; ++j) dst[j] += gi;
      }
    };
  }
  return self;
}

NodeId Tape::sum_all(NodeId a) {
  check_id(a);
  const Matrix& av = value(a);
  double s = 0.0;
  for (double v : av.data) s += v;
  Matrix out(1, 1, s);
  const bool rg = requires_grad(a);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, self](Tape& t) {
      const double g = t.nodes_[self].grad.data[0];
      Node& p = t.nodes_[a];
      if (!p.requires_grad) return;
      for (double& v : p.grad.data) v += g;
    };
  }
  return self;
}

NodeId Tape::mean_all(NodeId a) {
  check_id(a);
  const Matrix& av = value(a);
  if (av.size() == 0) throw std::invalid_argument("mean_all: empty matrix");
  double s = 0.0;
  for (double v : av.data) s += v;
  Matrix out(1, 1, s / static_cast<double>(av.size()));
  const bool rg = requires_grad(a);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, self](Tape& t) {
      Node& p = t.nodes_[a];
      if (!p.requires_grad) return;
      const double g = t.nodes_[self].grad.data[0] / static_cast<double>(p.grad.size());
      for (double& v : p.grad.data) v += g;
    };
  }
  return self;
}

NodeId Tape::softmax_rows(NodeId a) {
  check_id(a);
  const Matrix& av = value(a);
  if (av.cols == 0) throw std::invalid_argument("empty input");
  Matrix out = av;
  for (int i = 0; i < out.rows; ++i) {
    double* row = out.row_ptr(i);
    double m = row[0];
    for (int j = 1; j < out.cols; ++j) m = std::max(m, row[j]);
    double sum = 0.0;
    for (int j = 0; j < out.cols; ++j) {
      row[j] = std::exp(row[j] - m);
      sum += row[j];
    }
    for (int j = 0; j < out.cols; ++j) row[j] /= sum;
  }
  require_finite(out, "tape softmax_rows");
  const bool rg = requires_grad(a);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      const Matrix& y = t.nodes_[self].value;
      Node& p = t.nodes_[a];
      if (!p.requires_grad) return;
      for (int i = 0; i < g.rows; ++i) {
        const double* grow = g.row_ptr(i);
        const double* yrow = y.row_ptr(i);
        double inner = 0.0;
        for (int j = 0; j < g.cols; ++j) inner += grow[j] * yrow[j];
        double* dst = p.grad.row_ptr(i);
        for (int j = 0; j < g.cols; ++j) dst[j] += yrow[j] * (grow[j] - inner);
      }
    };
  }
  return self;
}

NodeId Tape::log_softmax_rows(NodeId a) {
  check_id(a);
  const Matrix& av = value(a);
  if (av.cols == 0) throw std::invalid_argument("empty input");
  Matrix out = av;
  for (int i = 0; i < out.rows; ++i) {
    double* row = out.row_ptr(i);
    double m = row[0];
    for (int j = 1; j < out.cols; ++j) m = std::max(m, row[j]);
    double sum = 0.0;
    for (int j = 0; j < out.cols; ++j) sum += std::exp(row[j] - m);
    const double lse = m + std::log(sum);
    for (int j = 0; j < out.cols; ++j) row[j] -= lse;
  }
  require_finite(out, "tape log_softmax_rows");
  const bool rg = requires_grad(a);
  NodeId self = push(std::move(out), rg);
  if (rg) {
    nodes_[self].backprop = [a, self](Tape& t) {
      const Matrix& g = t.nodes_[self].grad;
      const Matrix& y = t.nodes_[self].value;
      Node& p = t.nodes_[a];
      if (!p.requires_grad) return;
      for (int i = 0; i < g.rows; ++i) {
        const double* grow = g.row_ptr(i);
        const double* yrow = y.row_ptr(i);
        double gsum = 0.0;
        for (int j = 0; j < g.cols; ++j) gsum += grow[j];
        double* dst = p.grad.row_ptr(i);
        for (int j = 0; j < g.cols; ++j) dst[j] += grow[j] - std::exp(yrow[j]) * gsum;
      }
    };
  }
  return self;
}

void Tape::backward(NodeId objective) {
  check_id(objective);
  const Node& obj = nodes_[objective];
  if (!obj.value.is_scalar()) throw std::invalid_argument("backward: objective must be 1x1");
  if (!std::isfinite(obj.value.data[0])) throw std::runtime_error("objective not finite");
  if (!obj.requires_grad) throw std::invalid_argument("backward: objective does not require grad");

  for (Node& n : nodes_) {
    if (n.requires_grad) {
      n.grad = Matrix(n.value.rows, n.value.cols, 0.0);
    } else {
      n.grad = Matrix();
    }
  }
  nodes_[objective].grad.data[0] = 1.0;
  grads_ready_ = true;
  for (NodeId id = objective; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.requires_grad && n.backprop) n.backprop(*this);
  }
}

NodeId l2_normalize_rows(Tape& t, NodeId a) {
  const Matrix& av = t.value(a);
  NodeId sq = t.mul(a, a);
  NodeId norms2 = t.row_sum(sq);
  for (int i = 0; i < av.rows; ++i) {
    if (t.value(norms2).data[i] == 0.0) {
      throw std::invalid_argument("zero-norm row " + std::to_string(i));
    }
  }
  NodeId norms = t.sqrt(norms2);
  return t.div_colvec(a, norms);
}

NodeId mean_over_rows(Tape& t, NodeId a) {
  const Matrix& av = t.value(a);
  if (av.rows == 0) throw std::invalid_argument("mean_over_rows: empty matrix");
  Matrix w(1, av.rows, 1.0 / av.rows);
  NodeId wn = t.constant(std::move(w));
  return t.matmul(wn, a);
}

}  // namespace xalign
