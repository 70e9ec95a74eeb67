#pragma once

#include <cstdint>
#include <vector>

#include "xalign/params.hpp"
#include "xalign/tape.hpp"

namespace xalign {

/// H x W x C image, row-major with channel innermost.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c), data(static_cast<size_t>(h) * w * c, fill) {}

  double& at(int y, int x, int ch = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + ch];
  }
  double at(int y, int x, int ch = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + ch];
  }
};

/// Non-overlapping square patches of one image, one flattened patch per row,
/// in row-major scan order over the patch grid.
struct PatchGrid {
  int num_patches = 0;
  int patch_dim = 0;
  Matrix data;  // num_patches x patch_dim

  // Geometry, kept so unpatchify can invert patchify.
  int grid_rows = 0;
  int grid_cols = 0;
  int patch_size = 0;
  int channels = 1;
};

/// Binary per-patch mask; 1 = masked (hidden from the encoder).
struct MaskMatrix {
  std::vector<uint8_t> entries;
  uint64_t seed = 0;

  int size() const { return static_cast<int>(entries.size()); }
  int popcount() const;
};

struct VisiblePatches {
  PatchGrid patches;           // the L visible rows, original scan order
  std::vector<int> index_map;  // row i of patches came from grid row index_map[i]
};

/// Learnable per-position importance vector; scores a mask via dot(phi, M).
struct IntegrityEstimator {
  Matrix phi;  // 1 x P

  explicit IntegrityEstimator(int num_patches) : phi(1, num_patches, 0.0) {}
  explicit IntegrityEstimator(Matrix phi_) : phi(std::move(phi_)) {}
  int num_patches() const { return phi.cols; }
};

/// Shift image values to zero mean, unit variance. Constant images are only
/// centered.
Image standardize_image(const Image& img);

/// Throws "image not divisible by patch size" when sizes do not divide.
PatchGrid patchify(const Image& img, int patch_size);
Image unpatchify(const PatchGrid& grid);

/// Exactly round(r*P) masked positions, uniform without replacement,
/// deterministic in the seed.
MaskMatrix sample_mask(int num_patches, double ratio, uint64_t seed);

VisiblePatches apply_mask(const PatchGrid& grid, const MaskMatrix& mask);

/// Per-sample weights w_i = exp(softmax(dot(phi, M_i))_i) over a batch.
std::vector<double> integrity_weights(const IntegrityEstimator& est,
                                      const std::vector<MaskMatrix>& masks);

/// Tape version: returns an Nx1 column differentiable w.r.t. phi.
NodeId integrity_weights_node(Tape& t, NodeId phi, const std::vector<MaskMatrix>& masks);

}  // namespace xalign
