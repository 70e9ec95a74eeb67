#include "xalign/ot.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

#include "xalign/mathops.hpp"

namespace xalign {

SentenceSegments::SentenceSegments(std::vector<std::pair<int, int>> bounds, int num_tokens)
    : boundaries(std::move(bounds)) {
  int prev_end = 0;
  for (const auto& [start, end] : boundaries) {
    if (start < 0 || end > num_tokens) throw std::invalid_argument("sentence segment out of range");
    if (start >= end) throw std::invalid_argument("empty segment");
    if (start < prev_end) throw std::invalid_argument("sentence segments overlap or are unordered");
    prev_end = end;
  }
}

double TransportPlan::objective(const Matrix& cost) const {
  require_same_shape(gamma, cost, "TransportPlan::objective");
  double acc = 0.0;
  for (size_t i = 0; i < gamma.data.size(); ++i) acc += gamma.data[i] * cost.data[i];
  return acc;
}

Matrix aggregate_sentences(const Matrix& token_features, const SentenceSegments& segments) {
  if (segments.count() == 0) throw std::invalid_argument("aggregate_sentences: no segments");
  Matrix out(segments.count(), token_features.cols, 0.0);
  for (int k = 0; k < segments.count(); ++k) {
    const auto [start, end] = segments.boundaries[k];
    if (start >= end) throw std::invalid_argument("empty segment");
    if (end > token_features.rows) throw std::invalid_argument("sentence segment out of range");
    double* dst = out.row_ptr(k);
    for (int tkn = start; tkn < end; ++tkn) {
      const double* src = token_features.row_ptr(tkn);
      for (int j = 0; j < token_features.cols; ++j) dst[j] += src[j];
    }
    const double inv = 1.0 / (end - start);
    for (int j = 0; j < token_features.cols; ++j) dst[j] *= inv;
  }
  return out;
}

NodeId aggregate_sentences_node(Tape& t, NodeId token_features, const SentenceSegments& segments) {
  const Matrix& tok = t.value(token_features);
  if (segments.count() == 0) throw std::invalid_argument("aggregate_sentences: no segments");
  Matrix avg(segments.count(), tok.rows, 0.0);
  for (int k = 0; k < segments.count(); ++k) {
    const auto [start, end] = segments.boundaries[k];
    if (start >= end) throw std::invalid_argument("empty segment");
    if (end > tok.rows) throw std::invalid_argument("sentence segment out of range");
    const double inv = 1.0 / (end - start);
    for (int tkn = start; tkn < end; ++tkn) avg.at(k, tkn) = inv;
  }
  return t.matmul(t.constant(std::move(avg)), token_features);
}

CostMatrix cost_matrix(const Matrix& patch_features, const Matrix& sentence_features) {
  if (patch_features.cols != sentence_features.cols) {
    throw std::invalid_argument("cost_matrix: feature dimensions differ");
  }
  for (int i = 0; i < patch_features.rows; ++i) {
    const double* row = patch_features.row_ptr(i);
    if (l2_norm(std::vector<double>(row, row + patch_features.cols)) == 0.0) {
      throw std::invalid_argument("cost_matrix: zero-norm patch row " + std::to_string(i));
    }
  }
  for (int k = 0; k < sentence_features.rows; ++k) {
    const double* row = sentence_features.row_ptr(k);
    if (l2_norm(std::vector<double>(row, row + sentence_features.cols)) == 0.0) {
      throw std::invalid_argument("cost_matrix: zero-norm sentence row " + std::to_string(k));
    }
  }
  CostMatrix cm;
  cm.c = Matrix(patch_features.rows, sentence_features.rows);
  const int d = patch_features.cols;
  for (int j = 0; j < patch_features.rows; ++j) {
    std::span<const double> a(patch_features.row_ptr(j), static_cast<size_t>(d));
    for (int k = 0; k < sentence_features.rows; ++k) {
      std::span<const double> b(sentence_features.row_ptr(k), static_cast<size_t>(d));
      cm.c.at(j, k) = 1.0 - cosine_similarity(a, b);
    }
  }
  return cm;
}

NodeId cost_matrix_node(Tape& t, NodeId patch_features, NodeId sentence_features) {
  NodeId vn = l2_normalize_rows(t, patch_features);
  NodeId tn = l2_normalize_rows(t, sentence_features);
  NodeId cos = t.matmul(vn, t.transpose(tn));
  return t.add_scalar(t.mul_scalar(cos, -1.0), 1.0);
}

namespace {

double marginal_l1_error(const Matrix& gamma, const std::vector<double>& mu,
                         const std::vector<double>& nu) {
  double err = 0.0;
  for (int i = 0; i < gamma.rows; ++i) {
    double s = 0.0;
    const double* row = gamma.row_ptr(i);
    for (int j = 0; j < gamma.cols; ++j) s += row[j];
    err += std::fabs(s - mu[i]);
  }
  for (int j = 0; j < gamma.cols; ++j) {
    double s = 0.0;
    for (int i = 0; i < gamma.rows; ++i) s += gamma.at(i, j);
    err += std::fabs(s - nu[j]);
  }
  return err;
}

void require_finite_or_beta_hint(const Matrix& m) {
  if (!m.all_finite()) {
    throw std::runtime_error("ipot: non-finite intermediate; increase beta");
  }
}

}  // namespace

TransportPlan ipot(const Matrix& cost, const IpotOptions& opts) {
  std::vector<double> mu(static_cast<size_t>(cost.rows), 1.0 / cost.rows);
  std::vector<double> nu(static_cast<size_t>(cost.cols), 1.0 / cost.cols);
  return ipot(cost, std::move(mu), std::move(nu), opts);
}

TransportPlan ipot(const Matrix& cost, std::vector<double> mu, std::vector<double> nu,
                   const IpotOptions& opts) {
  if (opts.beta <= 0.0) throw std::invalid_argument("ipot: beta must be positive");
  if (opts.outer_iters < 1 || opts.inner_iters < 1) {
    throw std::invalid_argument("ipot: iteration counts must be positive");
  }
  if (cost.rows < 1 || cost.cols < 1) throw std::invalid_argument("ipot: empty cost matrix");
  require_finite(cost, "ipot cost");
  const int rows = cost.rows;
  const int cols = cost.cols;
  if (static_cast<int>(mu.size()) != rows || static_cast<int>(nu.size()) != cols) {
    throw std::invalid_argument("ipot: marginal length mismatch");
  }
  double mu_sum = 0.0, nu_sum = 0.0;
  for (double v : mu) {
    if (v <= 0.0) throw std::invalid_argument("ipot: marginals must be positive");
    mu_sum += v;
  }
  for (double v : nu) {
    if (v <= 0.0) throw std::invalid_argument("ipot: marginals must be positive");
    nu_sum += v;
  }
  if (std::fabs(mu_sum - nu_sum) > 1e-9) {
    throw std::invalid_argument("ipot: marginal masses differ");
  }

  Matrix kernel = cost;
  for (double& v : kernel.data) v = std::exp(-v / opts.beta);
  require_finite_or_beta_hint(kernel);

  TransportPlan plan;
  plan.mu = mu;
  plan.nu = nu;
  plan.gamma = Matrix(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) plan.gamma.at(i, j) = mu[i] * nu[j];
  }

  Matrix q(rows, cols);
  std::vector<double> a(static_cast<size_t>(rows));
  std::vector<double> b(static_cast<size_t>(cols));
  int outer = 0;
  while (outer < opts.outer_iters) {
    ++outer;
    // Proximal smoothing of the kernel by the current plan.
    for (size_t k = 0; k < q.data.size(); ++k) q.data[k] = kernel.data[k] * plan.gamma.data[k];
    for (double& v : a) v = 1.0 / rows;
    for (int inner = 0; inner < opts.inner_iters; ++inner) {
      for (int j = 0; j < cols; ++j) {
        double s = 0.0;
        for (int i = 0; i < rows; ++i) s += q.at(i, j) * a[i];
        b[j] = nu[j] / s;
      }
      for (int i = 0; i < rows; ++i) {
        double s = 0.0;
        const double* qrow = q.row_ptr(i);
        for (int j = 0; j < cols; ++j) s += qrow[j] * b[j];
        a[i] = mu[i] / s;
      }
    }
    for (int i = 0; i < rows; ++i) {
      const double* qrow = q.row_ptr(i);
      double* grow = plan.gamma.row_ptr(i);
      for (int j = 0; j < cols; ++j) grow[j] = a[i] * qrow[j] * b[j];
    }
    require_finite_or_beta_hint(plan.gamma);
    plan.marginal_error = marginal_l1_error(plan.gamma, mu, nu);
    if (plan.marginal_error < opts.tol) break;
  }
  plan.iterations_used = outer;
  return plan;
}

double spm_loss(const CostMatrix& cost, const TransportPlan& plan) {
  if (!cost.c.same_shape(plan.gamma)) throw std::invalid_argument("spm_loss: shape mismatch");
  return plan.objective(cost.c);
}

NodeId spm_loss_node(Tape& t, NodeId cost, const Matrix& gamma) {
  if (!t.value(cost).same_shape(gamma)) throw std::invalid_argument("spm_loss: shape mismatch");
  return t.sum_all(t.mul(cost, t.constant(gamma)));
}

}  // namespace xalign
