#include "mvdsc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace mvdsc {

namespace {

void check_lengths(const std::vector<int>& truth, const std::vector<int>& pred) {
  if (truth.size() != pred.size())
    throw std::invalid_argument("label vectors have different lengths: " +
                                std::to_string(truth.size()) + " vs " + std::to_string(pred.size()));
  if (truth.empty()) throw std::invalid_argument("label vectors must be non-empty");
}

std::vector<int> reindex(const std::vector<int>& labels) {
  std::unordered_map<int, int> ids;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = ids.try_emplace(labels[i], static_cast<int>(ids.size()));
    out[i] = it->second;
  }
  return out;
}

long long pairs2(long long m) { return m * (m - 1) / 2; }

bool partitions_identical(const std::vector<int>& a, const std::vector<int>& b) {
  return reindex(a) == reindex(b);
}

}  // namespace

ContingencyTable ContingencyTable::from_labels(const std::vector<int>& truth,
                                               const std::vector<int>& pred) {
  check_lengths(truth, pred);
  const auto t = reindex(truth);
  const auto p = reindex(pred);
  const int r = *std::max_element(t.begin(), t.end()) + 1;
  const int s = *std::max_element(p.begin(), p.end()) + 1;

  ContingencyTable table;
  table.counts.assign(static_cast<std::size_t>(r), std::vector<long long>(static_cast<std::size_t>(s), 0));
  table.truth_sizes.assign(static_cast<std::size_t>(r), 0);
  table.pred_sizes.assign(static_cast<std::size_t>(s), 0);
  table.total = static_cast<long long>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    ++table.counts[static_cast<std::size_t>(t[i])][static_cast<std::size_t>(p[i])];
    ++table.truth_sizes[static_cast<std::size_t>(t[i])];
    ++table.pred_sizes[static_cast<std::size_t>(p[i])];
  }
  return table;
}

std::vector<int> max_weight_assignment(const std::vector<std::vector<long long>>& weights) {
  if (weights.empty()) return {};
  const int r = static_cast<int>(weights.size());
  const int s = static_cast<int>(weights.front().size());
  const int m = std::max(r, s);

  // Square cost matrix for minimization; zero padding keeps the optimum.
  std::vector<std::vector<long long>> cost(static_cast<std::size_t>(m + 1),
                                           std::vector<long long>(static_cast<std::size_t>(m + 1), 0));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < s; ++j) cost[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(j + 1)] = -weights[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];

  const long long kInf = std::numeric_limits<long long>::max() / 4;
  std::vector<long long> u(static_cast<std::size_t>(m + 1), 0), v(static_cast<std::size_t>(m + 1), 0);
  std::vector<int> p(static_cast<std::size_t>(m + 1), 0), way(static_cast<std::size_t>(m + 1), 0);

  for (int i = 1; i <= m; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<long long> minv(static_cast<std::size_t>(m + 1), kInf);
    std::vector<bool> used(static_cast<std::size_t>(m + 1), false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = -1;
      long long delta = kInf;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const long long cur = cost[static_cast<std::size_t>(i0)][static_cast<std::size_t>(j)] - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> match(static_cast<std::size_t>(r), -1);
  for (int j = 1; j <= m; ++j) {
    const int i = p[static_cast<std::size_t>(j)];
    if (i >= 1 && i <= r && j <= s) match[static_cast<std::size_t>(i - 1)] = j - 1;
  }
  return match;
}

double nmi(const std::vector<int>& truth, const std::vector<int>& pred) {
  const auto table = ContingencyTable::from_labels(truth, pred);
  const double n = static_cast<double>(table.total);

  double h_truth = 0, h_pred = 0, mi = 0;
  for (long long a : table.truth_sizes)
    if (a > 0) h_truth -= (a / n) * std::log(a / n);
  for (long long b : table.pred_sizes)
    if (b > 0) h_pred -= (b / n) * std::log(b / n);
  for (std::size_t i = 0; i < table.counts.size(); ++i)
    for (std::size_t j = 0; j < table.counts[i].size(); ++j) {
      const long long nij = table.counts[i][j];
      if (nij > 0)
        mi += (nij / n) * std::log((nij * n) / (static_cast<double>(table.truth_sizes[i]) * static_cast<double>(table.pred_sizes[j])));
    }

  const double denom = std::max(h_truth, h_pred);
  if (denom == 0.0) return 1.0;  // both single-cluster: identical partitions
  return mi / denom;
}

double acc(const std::vector<int>& truth, const std::vector<int>& pred) {
  // Assignment runs clusters -> classes, per the contingency transpose.
  const auto table = ContingencyTable::from_labels(pred, truth);
  const auto match = max_weight_assignment(table.counts);
  long long hit = 0;
  for (std::size_t i = 0; i < match.size(); ++i)
    if (match[i] >= 0) hit += table.counts[i][static_cast<std::size_t>(match[i])];
  return static_cast<double>(hit) / static_cast<double>(table.total);
}

double f_measure(const std::vector<int>& truth, const std::vector<int>& pred, bool* degenerate) {
  const auto table = ContingencyTable::from_labels(truth, pred);
  if (table.total < 2) throw std::invalid_argument("f_measure needs at least 2 samples");
  if (degenerate) *degenerate = false;

  long long same_truth = 0, same_pred = 0, same_both = 0;
  for (long long a : table.truth_sizes) same_truth += pairs2(a);
  for (long long b : table.pred_sizes) same_pred += pairs2(b);
  for (const auto& row : table.counts)
    for (long long nij : row) same_both += pairs2(nij);

  if (same_truth == 0 || same_pred == 0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  const double precision = static_cast<double>(same_both) / static_cast<double>(same_pred);
  const double recall = static_cast<double>(same_both) / static_cast<double>(same_truth);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double ari(const std::vector<int>& truth, const std::vector<int>& pred) {
  const auto table = ContingencyTable::from_labels(truth, pred);
  if (table.total < 2) throw std::invalid_argument("ari needs at least 2 samples");

  double index = 0, sum_a = 0, sum_b = 0;
  for (const auto& row : table.counts)
    for (long long nij : row) index += static_cast<double>(pairs2(nij));
  for (long long a : table.truth_sizes) sum_a += static_cast<double>(pairs2(a));
  for (long long b : table.pred_sizes) sum_b += static_cast<double>(pairs2(b));

  const double all_pairs = static_cast<double>(pairs2(table.total));
  const double expected = sum_a * sum_b / all_pairs;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return partitions_identical(truth, pred) ? 1.0 : 0.0;
  return (index - expected) / (max_index - expected);
}

MetricReport evaluate(const std::vector<int>& truth, const std::vector<int>& pred) {
  MetricReport r;
  r.nmi = nmi(truth, pred);
  r.acc = acc(truth, pred);
  r.ari = ari(truth, pred);
  r.f_measure = f_measure(truth, pred);
  return r;
}

std::string metric_report_json(const MetricReport& report) {
  nlohmann::json j;
  j["nmi"] = report.nmi;
  j["acc"] = report.acc;
  j["ar"] = report.ari;
  j["f_measure"] = report.f_measure;
  return j.dump();
}

}  // namespace mvdsc
