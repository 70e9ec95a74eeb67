#pragma once

#include <functional>
#include <map>
#include <string>

#include "xalign/params.hpp"

namespace xalign {

/// Scalar objective over a parameter store. When grads is non-null the
/// callee must also fill the analytic gradient for every parameter.
using CheckedObjective = std::function<double(const ParamStore&, std::map<std::string, Matrix>* grads)>;

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  double max_abs_diff = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> params;
  double max_rel_err = 0.0;
  std::string worst_param;

  bool passes(double tol) const { return max_rel_err < tol; }
};

/// Central-difference check of analytic gradients, entry by entry.
/// Relative error uses denominator max(|analytic|, |numeric|, 1e-8).
/// Throws "objective not finite" if any evaluation is non-finite.
GradCheckReport finite_diff_check(const CheckedObjective& objective, ParamStore params, double eps);

}  // namespace xalign
