#include "xalign/mathops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace xalign {

std::vector<double> softmax(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("empty input");
  const double m = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(m)) throw std::invalid_argument("softmax: non-finite input");
  std::vector<double> out(x.size());
  double sum = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b, bool safe) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: length mismatch");
  if (a.empty()) throw std::invalid_argument("empty input");
  double aa = 0.0, bb = 0.0, ab = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    aa += a[i] * a[i];
    bb += b[i] * b[i];
    ab += a[i] * b[i];
  }
  double na = std::sqrt(aa);
  double nb = std::sqrt(bb);
  if (safe) {
    na += 1e-12;
    nb += 1e-12;
  } else if (na == 0.0 || nb == 0.0) {
    throw std::invalid_argument("zero-norm vector");
  }
  return std::clamp(ab / (na * nb), -1.0, 1.0);
}

double mean_squared_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("mean_squared_error: length mismatch");
  if (a.empty()) throw std::invalid_argument("empty input");
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

}  // namespace xalign
