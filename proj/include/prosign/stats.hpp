#pragma once

#include <optional>
#include <span>
#include <vector>

namespace prosign {

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> midranks(std::span<const double> values);

// Product-moment correlation, clamped to [-1, 1]. Requires equal lengths of
// at least 3 and finite values (ValidationError otherwise). Empty when
// either side has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// Pearson correlation of midranks, same contract as pearson().
std::optional<double> spearman_rho(std::span<const double> x, std::span<const double> y);

// sqrt(mean((pred - ref)^2)). Requires equal, non-zero lengths.
double rmse(std::span<const double> pred, std::span<const double> ref);

}  // namespace prosign
