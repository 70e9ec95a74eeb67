#include "xalign/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace xalign {

void Adam::step(ParamStore& params, const std::vector<const Matrix*>& grads, double lr) {
  auto& items = params.items();
  if (grads.size() != items.size()) throw std::invalid_argument("Adam::step: gradient count mismatch");
  if (m_.empty()) {
    m_.reserve(items.size());
    v_.reserve(items.size());
    for (const auto& [name, p] : items) {
      m_.emplace_back(p.rows, p.cols, 0.0);
      v_.emplace_back(p.rows, p.cols, 0.0);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < items.size(); ++i) {
    Matrix& p = items[i].second;
    const Matrix& g = *grads[i];
    if (!g.same_shape(p)) throw std::invalid_argument("Adam::step: gradient shape mismatch for " + items[i].first);
    Matrix& m = m_[i];
    Matrix& v = v_[i];
    for (size_t k = 0; k < p.data.size(); ++k) {
      const double gk = g.data[k];
      m.data[k] = cfg_.beta1 * m.data[k] + (1.0 - cfg_.beta1) * gk;
      v.data[k] = cfg_.beta2 * v.data[k] + (1.0 - cfg_.beta2) * gk * gk;
      const double mhat = m.data[k] / bc1;
      const double vhat = v.data[k] / bc2;
      p.data[k] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

double linear_decay_lr(double lr0, int epoch, int total_epochs) {
  if (total_epochs <= 0) throw std::invalid_argument("linear_decay_lr: total_epochs must be positive");
  return lr0 * (1.0 - 0.9 * static_cast<double>(epoch) / static_cast<double>(total_epochs));
}

}  // namespace xalign
