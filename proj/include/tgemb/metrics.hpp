#pragma once

#include <span>

namespace tgemb {

// Rank-statistic AUC over positive vs negative scores; tied pairs count half.
double auc_score(std::span<const double> positives, std::span<const double> negatives);

// Average precision as precision-weighted recall increments over the
// distinct descending score thresholds (tied scores form one group).
double average_precision(std::span<const double> positives, std::span<const double> negatives);

}  // namespace tgemb
