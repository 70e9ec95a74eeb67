#include "xalign/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace xalign {

GradCheckReport finite_diff_check(const CheckedObjective& objective, ParamStore params, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("finite_diff_check: eps must be positive");

  std::map<std::string, Matrix> analytic;
  const double base = objective(params, &analytic);
  if (!std::isfinite(base)) throw std::runtime_error("objective not finite");

  GradCheckReport report;
  for (auto& [name, theta] : params.items()) {
    auto it = analytic.find(name);
    if (it == analytic.end()) throw std::runtime_error("finite_diff_check: no analytic gradient for " + name);
    const Matrix& g = it->second;
    if (!g.same_shape(theta)) throw std::runtime_error("finite_diff_check: gradient shape mismatch for " + name);

    GradCheckEntry entry;
    entry.name = name;
    for (size_t k = 0; k < theta.data.size(); ++k) {
      const double orig = theta.data[k];
      theta.data[k] = orig + eps;
      const double f_plus = objective(params, nullptr);
      theta.data[k] = orig - eps;
      const double f_minus = objective(params, nullptr);
      theta.data[k] = orig;
      if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) throw std::runtime_error("objective not finite");

      const double numeric = (f_plus - f_minus) / (2.0 * eps);
      const double a = g.data[k];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      const double rel = std::fabs(a - numeric) / denom;
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
      entry.max_abs_diff = std::max(entry.max_abs_diff, std::fabs(a - numeric));
    }
    if (entry.max_rel_err >= report.max_rel_err) {
      report.max_rel_err = entry.max_rel_err;
      report.worst_param = name;
    }
    report.params.push_back(std::move(entry));
  }
  return report;
}

}  // namespace xalign
