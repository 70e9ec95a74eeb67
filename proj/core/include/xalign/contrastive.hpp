#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "xalign/tape.hpp"

namespace xalign {

/// Pooled image/text embeddings for one batch, plus the temperature and the
/// optional per-sample integrity weights.
struct GlobalBatch {
  Matrix image_embeddings;  // N x D
  Matrix text_embeddings;   // N x D
  double tau = 0.4;
  std::optional<std::vector<double>> weights;
};

struct ContrastivePair {
  NodeId v2t;
  NodeId t2v;
};

/// Both directions of the batch contrastive loss on the tape. Rows of v and t
/// are L2-normalized internally; similarities are cosine. When weights is
/// set (an Nx1 column node), anchor i's logits are scaled by w_i in both the
/// matched and mismatched terms, so the weight acts as a per-anchor inverse
/// temperature.
ContrastivePair contrastive_losses(Tape& t, NodeId v, NodeId t_emb, double tau,
                                   std::optional<NodeId> weights = std::nullopt);

/// Same, starting from a precomputed similarity matrix S with S_ij =
/// sim(v_i, t_j). Exposed for tests that drive similarities directly.
ContrastivePair contrastive_from_similarities(Tape& t, NodeId similarities, double tau,
                                              std::optional<NodeId> weights = std::nullopt);

/// Value-level wrappers returning (L_v2t, L_t2v); means over anchors.
std::pair<double, double> info_nce(const GlobalBatch& batch);
std::pair<double, double> weighted_info_nce(const GlobalBatch& batch);

}  // namespace xalign
