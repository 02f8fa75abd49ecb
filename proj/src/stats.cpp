#include "prosign/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "prosign/error.hpp"

namespace prosign {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ValidationError("length mismatch: " + std::to_string(x.size()) + " vs " +
                          std::to_string(y.size()));
  if (x.size() < 3) throw ValidationError("correlation needs at least 3 pairs");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw ValidationError("non-finite value at index " + std::to_string(i));
}

std::optional<double> pearson_unchecked(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) hold ranks i+1..j+1.
    const double r = 0.5 * static_cast<double>(i + j + 2);
    for (auto k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  return pearson_unchecked(x, y);
}

std::optional<double> spearman_rho(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  auto rx = midranks(x);
  auto ry = midranks(y);
  return pearson_unchecked(rx, ry);
}

double rmse(std::span<const double> pred, std::span<const double> ref) {
  if (pred.size() != ref.size())
    throw ValidationError("length mismatch: " + std::to_string(pred.size()) + " vs " +
                          std::to_string(ref.size()));
  if (pred.empty()) throw ValidationError("rmse of empty sequences");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - ref[i]) * (pred[i] - ref[i]);
  return std::sqrt(s / static_cast<double>(pred.size()));
}

}  // namespace prosign
