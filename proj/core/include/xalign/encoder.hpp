#pragma once

#include <string>
#include <vector>

#include "xalign/ot.hpp"
#include "xalign/params.hpp"
#include "xalign/patching.hpp"
#include "xalign/rng.hpp"
#include "xalign/tape.hpp"

namespace xalign {

enum class Modality { image, text };

/// Sizes of the tiny pre-norm transformer encoders.
struct EncoderConfig {
  int dim = 64;
  int depth = 2;
  int heads = 2;
  double mlp_ratio = 4.0;
  int num_patches = 16;   // P, fixes the image position table and phi
  int patch_dim = 64;     // patch_size^2 * channels
  int vocab_size = 128;
  int max_text_len = 64;
  int decoder_depth = 1;

  void validate() const;
  int head_dim() const { return dim / heads; }
  int mlp_hidden() const { return static_cast<int>(dim * mlp_ratio); }
};

/// Encoder output: per-token rows with a leading [CLS] row.
struct FeatureSet {
  Matrix tokens;  // (n+1) x D, row 0 is [CLS]
  Modality modality = Modality::image;
  std::vector<int> index_map;  // original positions of the non-CLS rows
  SentenceSegments segments;   // text only; carried through for alignment
};

/// Tape-resident variant of FeatureSet.
struct FeatureNodes {
  NodeId tokens = -1;
  Modality modality = Modality::image;
  std::vector<int> index_map;
};

/// Image and text towers plus the text pooler and the image decoder.
/// Weights live in a ParamStore and are bound to a tape per forward pass,
/// so forward passes are pure given the store.
class DualEncoder {
 public:
  explicit DualEncoder(EncoderConfig cfg);

  const EncoderConfig& config() const { return cfg_; }

  /// Registers every weight tensor (including the integrity vector phi) in a
  /// fixed order.
  void init_params(ParamStore& store, Rng& rng) const;

  FeatureNodes encode_image(Tape& t, const ParamNodes& p, const Matrix& visible_patches,
                            const std::vector<int>& positions) const;
  FeatureNodes encode_text(Tape& t, const ParamNodes& p, const std::vector<int>& token_ids) const;

  /// Image global embedding: mean over all rows including [CLS]. 1 x D.
  NodeId pool_image(Tape& t, const FeatureNodes& f) const;
  /// Text global embedding: tanh([CLS] W + b). 1 x D.
  NodeId pool_text(Tape& t, const ParamNodes& p, const FeatureNodes& f) const;

  /// Non-CLS rows, the inputs to local alignment.
  NodeId local_features(Tape& t, const FeatureNodes& f) const;

  /// Reconstruct all P patches from visible features and mask tokens.
  /// P x patch_dim.
  NodeId decode_image(Tape& t, const ParamNodes& p, const FeatureNodes& f,
                      const MaskMatrix& mask) const;

 private:
  NodeId transformer_stack(Tape& t, const ParamNodes& p, const std::string& prefix, NodeId x,
                           int depth) const;
  EncoderConfig cfg_;
};

// Value-level entry points used by tests and evaluation; each builds a
// throwaway tape internally.
FeatureSet encode_image(const DualEncoder& model, const ParamStore& store,
                        const PatchGrid& visible, const std::vector<int>& positions);
FeatureSet encode_text(const DualEncoder& model, const ParamStore& store,
                       const std::vector<int>& token_ids, const SentenceSegments& segments);
std::vector<double> pool_global(const DualEncoder& model, const ParamStore& store,
                                const FeatureSet& features);
PatchGrid decode_image(const DualEncoder& model, const ParamStore& store, const FeatureSet& features,
                       const MaskMatrix& mask, const PatchGrid& geometry);

}  // namespace xalign
