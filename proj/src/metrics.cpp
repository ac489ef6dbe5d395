#include "tgemb/metrics.hpp"

#include <algorithm>
#include <vector>

#include "tgemb/errors.hpp"

namespace tgemb {

namespace {

struct Scored {
  double score;
  bool positive;
};

std::vector<Scored> pool(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty())
    throw DataError("metrics need at least one positive and one negative score");
  std::vector<Scored> all;
  all.reserve(positives.size() + negatives.size());
  for (double s : positives) all.push_back({s, true});
  for (double s : negatives) all.push_back({s, false});
  return all;
}

}  // namespace

double auc_score(std::span<const double> positives, std::span<const double> negatives) {
  std::vector<Scored> all = pool(positives, negatives);
  std::stable_sort(all.begin(), all.end(),
                   [](const Scored& a, const Scored& b) { return a.score < b.score; });

  // Average ranks across ties, then the Mann-Whitney statistic.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k)
      if (all[k].positive) rank_sum_pos += avg_rank;
    i = j;
  }
  const auto p = static_cast<double>(positives.size());
  const auto n = static_cast<double>(negatives.size());
  return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n);
}

double average_precision(std::span<const double> positives, std::span<const double> negatives) {
  std::vector<Scored> all = pool(positives, negatives);
  std::stable_sort(all.begin(), all.end(),
                   [](const Scored& a, const Scored& b) { return a.score > b.score; });

  const auto p = static_cast<double>(positives.size());
  double tp = 0.0, fp = 0.0, ap = 0.0, prev_recall = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    for (std::size_t k = i; k < j; ++k) (all[k].positive ? tp : fp) += 1.0;
    const double precision = tp / (tp + fp);
    const double recall = tp / p;
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

}  // namespace tgemb
