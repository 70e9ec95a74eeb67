#include "xalign/mip.hpp"

#include <stdexcept>

namespace xalign {

double mip_loss(const ReconstructionPair& pair) {
  const Matrix& x = pair.original.data;
  const Matrix& xr = pair.reconstructed.data;
  if (!x.same_shape(xr)) throw std::invalid_argument("mip_loss: shape mismatch");
  if (pair.mask.size() != x.rows) throw std::invalid_argument("mip_loss: mask length mismatch");
  const int masked = pair.mask.popcount();
  if (masked == 0) return 0.0;
  double acc = 0.0;
  for (int i = 0; i < x.rows; ++i) {
    if (!pair.mask.entries[i]) continue;
    const double* a = x.row_ptr(i);
    const double* b = xr.row_ptr(i);
    for (int j = 0; j < x.cols; ++j) {
      const double d = a[j] - b[j];
      acc += d * d;
    }
  }
  return acc / (static_cast<double>(masked) * x.cols);
}

NodeId mip_loss_node(Tape& t, NodeId reconstructed, const Matrix& original, const MaskMatrix& mask) {
  const Matrix& rv = t.value(reconstructed);
  if (!rv.same_shape(original)) throw std::invalid_argument("mip_loss: shape mismatch");
  if (mask.size() != original.rows) throw std::invalid_argument("mip_loss: mask length mismatch");
  const int masked = mask.popcount();
  if (masked == 0) {
    // Nothing hidden: the loss is identically zero and carries no gradient.
    return t.mul_scalar(t.sum_all(reconstructed), 0.0);
  }
  Matrix mask_col(original.rows, 1, 0.0);
  for (int i = 0; i < original.rows; ++i) mask_col.data[i] = mask.entries[i];
  NodeId diff = t.sub(reconstructed, t.constant(original));
  NodeId masked_diff = t.mul_colvec(diff, t.constant(std::move(mask_col)));
  NodeId sq_sum = t.sum_all(t.mul(masked_diff, masked_diff));
  return t.mul_scalar(sq_sum, 1.0 / (static_cast<double>(masked) * original.cols));
}

}  // namespace xalign
