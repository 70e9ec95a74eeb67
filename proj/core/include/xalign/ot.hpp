#pragma once

#include <vector>

#include "xalign/tape.hpp"

namespace xalign {

/// Token index ranges [start, end) of each sentence in a report; disjoint,
/// ordered, nonempty.
struct SentenceSegments {
  std::vector<std::pair<int, int>> boundaries;

  SentenceSegments() = default;
  /// Validates ranges against num_tokens; throws on overlap, emptiness or
  /// out-of-range boundaries.
  SentenceSegments(std::vector<std::pair<int, int>> bounds, int num_tokens);

  int count() const { return static_cast<int>(boundaries.size()); }
};

/// Pairwise cosine distances 1 - cos(v_j, t_k), entries in [0, 2].
struct CostMatrix {
  Matrix c;  // L x S
};

/// Coupling of patch mass to sentence mass plus solver diagnostics.
struct TransportPlan {
  Matrix gamma;                // L x S, nonnegative
  std::vector<double> mu;      // row marginal, length L
  std::vector<double> nu;      // column marginal, length S
  int iterations_used = 0;
  double marginal_error = 0.0;  // L1 row violation + L1 column violation

  double objective(const Matrix& cost) const;
};

struct IpotOptions {
  double beta = 0.5;
  int outer_iters = 50;
  int inner_iters = 1;
  double tol = 1e-4;
};

/// Mean of token rows per sentence segment -> S x D.
Matrix aggregate_sentences(const Matrix& token_features, const SentenceSegments& segments);
NodeId aggregate_sentences_node(Tape& t, NodeId token_features, const SentenceSegments& segments);

/// Throws naming the offending row when a feature row has zero norm.
CostMatrix cost_matrix(const Matrix& patch_features, const Matrix& sentence_features);
NodeId cost_matrix_node(Tape& t, NodeId patch_features, NodeId sentence_features);

/// Inexact proximal point iteration for optimal transport. Marginals default
/// to uniform. Each outer step smooths the kernel with the current plan and
/// runs inner Sinkhorn-style scaling passes; the plan approaches the exact
/// unregularized optimum as outer iterations grow.
TransportPlan ipot(const Matrix& cost, const IpotOptions& opts = {});
TransportPlan ipot(const Matrix& cost, std::vector<double> mu, std::vector<double> nu,
                   const IpotOptions& opts = {});

/// Total transport cost sum_jk C_jk * Gamma_jk. The plan is a constant for
/// differentiation; gradients flow only through the cost.
double spm_loss(const CostMatrix& cost, const TransportPlan& plan);
NodeId spm_loss_node(Tape& t, NodeId cost, const Matrix& gamma);

}  // namespace xalign
