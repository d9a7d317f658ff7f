#pragma once

#include <string>
#include <vector>

namespace mvdsc {

/// Joint counts between truth classes and predicted clusters. Label values
/// may be arbitrary integers; they are reindexed by first appearance.
struct ContingencyTable {
  std::vector<std::vector<long long>> counts;  // r x s
  std::vector<long long> truth_sizes;          // a_i
  std::vector<long long> pred_sizes;           // b_j
  long long total = 0;

  static ContingencyTable from_labels(const std::vector<int>& truth,
                                      const std::vector<int>& pred);
};

/// Maximum-weight row-to-column assignment on a rectangular weight matrix
/// (Kuhn-Munkres, O(m^3) after square zero padding). Returns the matched
/// column per row, -1 for rows matched to padding.
std::vector<int> max_weight_assignment(const std::vector<std::vector<long long>>& weights);

/// Normalized mutual information I(l;c)/max{H(l),H(c)} with natural-log
/// entropies. When both entropies vanish (both partitions are a single
/// cluster) the partitions coincide and the value is 1.
double nmi(const std::vector<int>& truth, const std::vector<int>& pred);

/// Best-map clustering accuracy: the cluster-to-class assignment is solved
/// exactly on the contingency table.
double acc(const std::vector<int>& truth, const std::vector<int>& pred);

/// Harmonic mean of pairwise precision and recall over all sample pairs;
/// a pair counts as positive when co-clustered. Returns 0 and sets
/// *degenerate when either partition has no co-clustered pair.
double f_measure(const std::vector<int>& truth, const std::vector<int>& pred,
                 bool* degenerate = nullptr);

/// Adjusted Rand index. Degenerate instances (both partitions all
/// singletons or both a single cluster) score 1 when the partitions are
/// identical and 0 otherwise.
double ari(const std::vector<int>& truth, const std::vector<int>& pred);

struct MetricReport {
  double nmi = 0;
  double acc = 0;
  double ari = 0;
  double f_measure = 0;
};

MetricReport evaluate(const std::vector<int>& truth, const std::vector<int>& pred);

/// JSON text with keys {nmi, acc, ar, f_measure}.
std::string metric_report_json(const MetricReport& report);

}  // namespace mvdsc
