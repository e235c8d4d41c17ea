// Brute-force reference implementations used only by tests; they stay
// independent of the library code paths they check.
#ifndef CTR_TESTS_ORACLES_HPP_
#define CTR_TESTS_ORACLES_HPP_

#include <algorithm>
#include <set>
#include <span>
#include <vector>

namespace oracles {

// O(n^2) pairwise concordance, ties 1/2.
inline double auc_bruteforce(std::span<const double> scores,
                             std::span<const int> labels) {
  double concordant = 0.0;
  long pairs = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        concordant += 1.0;
      } else if (scores[i] == scores[j]) {
        concordant += 0.5;
      }
    }
  }
  return concordant / static_cast<double>(pairs);
}

// Threshold sweep over distinct scores, descending; average precision as the
// sum of precision * recall-increment.
inline double pr_auc_bruteforce(std::span<const double> scores,
                                std::span<const int> labels) {
  std::set<double, std::greater<double>> thresholds(scores.begin(),
                                                    scores.end());
  long total_pos = 0;
  for (int y : labels) total_pos += (y == 1);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (double tau : thresholds) {
    long tp = 0, fp = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= tau) {
        if (labels[i] == 1) {
          ++tp;
        } else {
          ++fp;
        }
      }
    }
    const double precision = static_cast<double>(tp) /
                             static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) /
                          static_cast<double>(total_pos);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

}  // namespace oracles

#endif  // CTR_TESTS_ORACLES_HPP_
