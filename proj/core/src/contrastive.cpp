#include "xalign/contrastive.hpp"

#include <stdexcept>

namespace xalign {

namespace {

/// Mean over anchors of -log softmax(logits)_ii.
NodeId anchor_cross_entropy(Tape& t, NodeId logits) {
  NodeId log_probs = t.log_softmax_rows(logits);
  NodeId matched = t.diag(log_probs);
  return t.mul_scalar(t.mean_all(matched), -1.0);
}

void validate_batch(const GlobalBatch& batch, bool need_weights) {
  if (batch.tau <= 0.0) throw std::invalid_argument("contrastive: tau must be positive");
  if (!batch.image_embeddings.same_shape(batch.text_embeddings)) {
    throw std::invalid_argument("contrastive: embedding shapes differ");
  }
  if (batch.image_embeddings.rows < 1) throw std::invalid_argument("contrastive: empty batch");
  require_finite(batch.image_embeddings, "contrastive image embeddings");
  require_finite(batch.text_embeddings, "contrastive text embeddings");
  if (need_weights) {
    if (!batch.weights) throw std::invalid_argument("weighted contrastive: weights missing");
    if (static_cast<int>(batch.weights->size()) != batch.image_embeddings.rows) {
      throw std::invalid_argument("weighted contrastive: weight length mismatch");
    }
    for (double w : *batch.weights) {
      if (!(w > 0.0)) throw std::invalid_argument("weighted contrastive: weights must be positive");
    }
  }
}

}  // namespace

ContrastivePair contrastive_from_similarities(Tape& t, NodeId similarities, double tau,
                                              std::optional<NodeId> weights) {
  if (tau <= 0.0) throw std::invalid_argument("contrastive: tau must be positive");
  const Matrix& s = t.value(similarities);
  if (s.rows != s.cols) throw std::invalid_argument("contrastive: similarity matrix not square");
  if (weights) {
    const Matrix& w = t.value(*weights);
    if (w.cols != 1 || w.rows != s.rows) {
      throw std::invalid_argument("contrastive: weights must be N x 1");
    }
    for (double v : w.data) {
      if (!(v > 0.0)) throw std::invalid_argument("weighted contrastive: weights must be positive");
    }
  }

  auto direction = [&](NodeId sims) {
    NodeId scaled = t.mul_scalar(sims, 1.0 / tau);
    if (weights) scaled = t.mul_colvec(scaled, *weights);
    return anchor_cross_entropy(t, scaled);
  };
  ContrastivePair out;
  out.v2t = direction(similarities);
  out.t2v = direction(t.transpose(similarities));
  return out;
}

ContrastivePair contrastive_losses(Tape& t, NodeId v, NodeId t_emb, double tau,
                                   std::optional<NodeId> weights) {
  const Matrix& vv = t.value(v);
  const Matrix& tv = t.value(t_emb);
  if (vv.rows != tv.rows || vv.cols != tv.cols) {
    throw std::invalid_argument("contrastive: embedding shapes differ");
  }
  NodeId vn = l2_normalize_rows(t, v);
  NodeId tn = l2_normalize_rows(t, t_emb);
  NodeId sims = t.matmul(vn, t.transpose(tn));
  return contrastive_from_similarities(t, sims, tau, weights);
}

std::pair<double, double> info_nce(const GlobalBatch& batch) {
  validate_batch(batch, false);
  // Same code path as the weighted loss, with unit weights.
  Tape t;
  NodeId v = t.constant(batch.image_embeddings);
  NodeId te = t.constant(batch.text_embeddings);
  NodeId ones = t.constant(Matrix(batch.image_embeddings.rows, 1, 1.0));
  ContrastivePair pair = contrastive_losses(t, v, te, batch.tau, ones);
  return {t.scalar_value(pair.v2t), t.scalar_value(pair.t2v)};
}

std::pair<double, double> weighted_info_nce(const GlobalBatch& batch) {
  validate_batch(batch, true);
  Tape t;
  NodeId v = t.constant(batch.image_embeddings);
  NodeId te = t.constant(batch.text_embeddings);
  NodeId w = t.constant(Matrix::col_vector(*batch.weights));
  ContrastivePair pair = contrastive_losses(t, v, te, batch.tau, w);
  return {t.scalar_value(pair.v2t), t.scalar_value(pair.t2v)};
}

}  // namespace xalign
