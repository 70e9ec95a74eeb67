#pragma once

#include "xalign/patching.hpp"
#include "xalign/tape.hpp"

namespace xalign {

struct ReconstructionPair {
  const PatchGrid& original;
  const PatchGrid& reconstructed;
  const MaskMatrix& mask;
};

/// Mean squared error over masked patch entries only; 0 when nothing is
/// masked. Visible positions never contribute.
double mip_loss(const ReconstructionPair& pair);

/// Tape version; `reconstructed` is a P x patch_dim node, target and mask are
/// constants.
NodeId mip_loss_node(Tape& t, NodeId reconstructed, const Matrix& original, const MaskMatrix& mask);

}  // namespace xalign
