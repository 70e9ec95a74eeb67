#include "xalign/patching.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "xalign/mathops.hpp"
#include "xalign/rng.hpp"

namespace xalign {

int MaskMatrix::popcount() const {
  int n = 0;
  for (uint8_t e : entries) n += e;
  return n;
}

Image standardize_image(const Image& img) {
  if (img.data.empty()) throw std::invalid_argument("standardize_image: empty image");
  const double n = static_cast<double>(img.data.size());
  double mean = 0.0;
  for (double v : img.data) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : img.data) var += (v - mean) * (v - mean);
  var /= n;
  const double sd = std::sqrt(var);
  Image out = img;
  if (sd < 1e-12) {
    for (double& v : out.data) v -= mean;
  } else {
    for (double& v : out.data) v = (v - mean) / sd;
  }
  return out;
}

PatchGrid patchify(const Image& img, int patch_size) {
  if (patch_size <= 0) throw std::invalid_argument("patchify: patch size must be positive");
  if (img.height % patch_size != 0 || img.width % patch_size != 0) {
    throw std::invalid_argument("image not divisible by patch size");
  }
  PatchGrid grid;
  grid.grid_rows = img.height / patch_size;
  grid.grid_cols = img.width / patch_size;
  grid.patch_size = patch_size;
  grid.channels = img.channels;
  grid.num_patches = grid.grid_rows * grid.grid_cols;
  grid.patch_dim = patch_size * patch_size * img.channels;
  grid.data = Matrix(grid.num_patches, grid.patch_dim);
  for (int pr = 0; pr < grid.grid_rows; ++pr) {
    for (int pc = 0; pc < grid.grid_cols; ++pc) {
      double* row = grid.data.row_ptr(pr * grid.grid_cols + pc);
      int k = 0;
      for (int y = 0; y < patch_size; ++y) {
        for (int x = 0; x < patch_size; ++x) {
          for (int ch = 0; ch < img.channels; ++ch) {
            row[k++] = img.at(pr * patch_size + y, pc * patch_size + x, ch);
          }
        }
      }
    }
  }
  return grid;
}

Image unpatchify(const PatchGrid& grid) {
  if (grid.data.rows != grid.num_patches || grid.data.cols != grid.patch_dim) {
    throw std::invalid_argument("unpatchify: inconsistent grid");
  }
  Image img(grid.grid_rows * grid.patch_size, grid.grid_cols * grid.patch_size, grid.channels);
  for (int pr = 0; pr < grid.grid_rows; ++pr) {
    for (int pc = 0; pc < grid.grid_cols; ++pc) {
      const double* row = grid.data.row_ptr(pr * grid.grid_cols + pc);
      int k = 0;
      for (int y = 0; y < grid.patch_size; ++y) {
        for (int x = 0; x < grid.patch_size; ++x) {
          for (int ch = 0; ch < grid.channels; ++ch) {
            img.at(pr * grid.patch_size + y, pc * grid.patch_size + x, ch) = row[k++];
          }
        }
      }
    }
  }
  return img;
}

MaskMatrix sample_mask(int num_patches, double ratio, uint64_t seed) {
  if (num_patches <= 0) throw std::invalid_argument("sample_mask: P must be positive");
  if (ratio < 0.0 || ratio > 1.0) throw std::invalid_argument("sample_mask: ratio outside [0,1]");
  const int k = static_cast<int>(std::lround(ratio * num_patches));
  MaskMatrix mask;
  mask.seed = seed;
  mask.entries.assign(static_cast<size_t>(num_patches), 0);
  // Partial Fisher-Yates; the first k slots of the shuffle are masked.
  std::vector<int> idx(static_cast<size_t>(num_patches));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(rng.bounded(static_cast<uint64_t>(num_patches - i)));
    std::swap(idx[i], idx[j]);
    mask.entries[idx[i]] = 1;
  }
  return mask;
}

VisiblePatches apply_mask(const PatchGrid& grid, const MaskMatrix& mask) {
  if (mask.size() != grid.num_patches) {
    throw std::invalid_argument("apply_mask: mask length != number of patches");
  }
  VisiblePatches out;
  const int visible = grid.num_patches - mask.popcount();
  out.patches.num_patches = visible;
  out.patches.patch_dim = grid.patch_dim;
  out.patches.grid_rows = grid.grid_rows;
  out.patches.grid_cols = grid.grid_cols;
  out.patches.patch_size = grid.patch_size;
  out.patches.channels = grid.channels;
  out.patches.data = Matrix(visible, grid.patch_dim);
  out.index_map.reserve(static_cast<size_t>(visible));
  int at = 0;
  for (int i = 0; i < grid.num_patches; ++i) {
    if (mask.entries[i]) continue;
    const double* src = grid.data.row_ptr(i);
    double* dst = out.patches.data.row_ptr(at++);
    for (int j = 0; j < grid.patch_dim; ++j) dst[j] = src[j];
    out.index_map.push_back(i);
  }
  return out;
}

namespace {

Matrix mask_batch_matrix(int num_patches, const std::vector<MaskMatrix>& masks) {
  if (masks.empty()) throw std::invalid_argument("empty batch");
  Matrix m(static_cast<int>(masks.size()), num_patches);
  for (size_t i = 0; i < masks.size(); ++i) {
    if (masks[i].size() != num_patches) {
      throw std::invalid_argument("integrity_weights: mask length mismatch");
    }
    double* row = m.row_ptr(static_cast<int>(i));
    for (int p = 0; p < num_patches; ++p) row[p] = masks[i].entries[p];
  }
  return m;
}

}  // namespace

std::vector<double> integrity_weights(const IntegrityEstimator& est,
                                      const std::vector<MaskMatrix>& masks) {
  if (masks.empty()) throw std::invalid_argument("empty batch");
  std::vector<double> scores(masks.size());
  for (size_t i = 0; i < masks.size(); ++i) {
    if (masks[i].size() != est.num_patches()) {
      throw std::invalid_argument("integrity_weights: mask length mismatch");
    }
    double s = 0.0;
    for (int p = 0; p < est.num_patches(); ++p) s += est.phi.data[p] * masks[i].entries[p];
    scores[i] = s;
  }
  std::vector<double> w = softmax(scores);
  for (double& v : w) v = std::exp(v);
  return w;
}

NodeId integrity_weights_node(Tape& t, NodeId phi, const std::vector<MaskMatrix>& masks) {
  const Matrix& phi_v = t.value(phi);
  if (phi_v.rows != 1) throw std::invalid_argument("integrity_weights: phi must be 1 x P");
  NodeId mask_mat = t.constant(mask_batch_matrix(phi_v.cols, masks));
  NodeId raw = t.matmul(mask_mat, t.transpose(phi));       // N x 1
  NodeId probs = t.softmax_rows(t.transpose(raw));         // 1 x N
  return t.transpose(t.exp(probs));                        // N x 1
}

}  // namespace xalign
