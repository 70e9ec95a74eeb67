#pragma once

#include <span>
#include <vector>

namespace xalign {

/// Numerically stable softmax. Entries are positive and sum to 1.
/// Throws std::invalid_argument("empty input") on an empty vector.
std::vector<double> softmax(std::span<const double> x);

/// Cosine of the angle between a and b, clamped to [-1, 1].
/// By default a zero-norm input is a hard error ("zero-norm vector");
/// safe=true instead adds 1e-12 to each norm before dividing.
double cosine_similarity(std::span<const double> a, std::span<const double> b, bool safe = false);

/// Mean squared error over two equal-length vectors.
double mean_squared_error(std::span<const double> a, std::span<const double> b);

}  // namespace xalign
