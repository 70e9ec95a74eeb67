#pragma once

#include <vector>

#include "xalign/params.hpp"

namespace xalign {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers are laid out in ParamStore
/// order, so the same store must be passed on every step.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  /// grads[i] pairs with params.items()[i].
  void step(ParamStore& params, const std::vector<const Matrix*>& grads, double lr);

  int64_t steps_taken() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  int64_t t_ = 0;
};

/// Per-epoch linear decay: lr0 * (1 - 0.9 * epoch / total_epochs).
/// Reaches lr0/10 after the final epoch.
double linear_decay_lr(double lr0, int epoch, int total_epochs);

}  // namespace xalign
