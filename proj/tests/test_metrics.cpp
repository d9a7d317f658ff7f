#include <doctest.h>

#include <algorithm>
#include <random>

#include "mvdsc/metrics.hpp"
#include "testutil.hpp"

using namespace mvdsc;
using doctest::Approx;

TEST_CASE("identical partitions score perfectly") {
  const std::vector<int> l{0, 0, 1, 1, 2, 2};
  CHECK(nmi(l, l) == Approx(1.0));
  CHECK(acc(l, l) == Approx(1.0));
  CHECK(ari(l, l) == Approx(1.0));
  CHECK(f_measure(l, l) == Approx(1.0));

  const std::vector<int> renamed{2, 2, 0, 0, 1, 1};
  CHECK(acc(l, renamed) == Approx(1.0));
  CHECK(nmi(l, renamed) == Approx(1.0));
}

TEST_CASE("the crossed 2x2 instance") {
  const std::vector<int> truth{0, 0, 1, 1};
  const std::vector<int> pred{0, 1, 0, 1};

  CHECK(nmi(truth, pred) == Approx(0.0).epsilon(1e-12));
  CHECK(acc(truth, pred) == Approx(0.5));
  CHECK(f_measure(truth, pred) == Approx(0.0));

  // Contingency formula: all n_ij = 1 so the index term is 0, the expected
  // index is 2*2/6 and the maximum is 2, giving (0 - 2/3)/(2 - 2/3) = -1/2.
  CHECK(ari(truth, pred) == Approx(-0.5));
  CHECK(ari(truth, pred) == Approx(testutil::oracle_ari(truth, pred)));
  // Cross-check against the pair-counting form 2(ad-bc)/((a+b)(b+d)+(a+c)(c+d)).
  const auto pc = testutil::oracle_pairs(truth, pred);
  const double a = static_cast<double>(pc.both), b = static_cast<double>(pc.truth_only);
  const double c = static_cast<double>(pc.pred_only), d = static_cast<double>(pc.neither);
  CHECK(ari(truth, pred) == Approx(2 * (a * d - b * c) / ((a + b) * (b + d) + (a + c) * (c + d))));
}

TEST_CASE("nmi matches the entropy oracle on an uneven table") {
  const std::vector<int> truth{0, 0, 1, 1, 2, 2};
  const std::vector<int> pred{0, 0, 1, 1, 1, 1};
  CHECK(nmi(truth, pred) == Approx(testutil::oracle_nmi(truth, pred)).epsilon(1e-12));
}

TEST_CASE("acc collapses gracefully when prediction is one cluster") {
  const std::vector<int> truth{0, 1, 2};
  const std::vector<int> pred{0, 0, 0};
  CHECK(acc(truth, pred) == Approx(1.0 / 3.0));
  CHECK(nmi(truth, pred) == Approx(0.0).epsilon(1e-12));
}

TEST_CASE("f_measure matches the pair oracle") {
  const std::vector<int> truth{0, 0, 0, 1, 1};
  const std::vector<int> pred{0, 0, 1, 1, 1};
  CHECK(f_measure(truth, pred) == Approx(0.5));
  CHECK(f_measure(truth, pred) == Approx(testutil::oracle_f_measure(truth, pred)));
}

TEST_CASE("f_measure flags partitions without positive pairs") {
  const std::vector<int> truth{0, 1, 2, 3};
  const std::vector<int> pred{0, 0, 1, 1};
  bool degenerate = false;
  CHECK(f_measure(truth, pred, &degenerate) == Approx(0.0));
  CHECK(degenerate);
}

TEST_CASE("ari degenerate conventions") {
  const std::vector<int> singletons{0, 1, 2, 3};
  CHECK(ari(singletons, singletons) == Approx(1.0));
  const std::vector<int> one_cluster{0, 0, 0, 0};
  CHECK(ari(one_cluster, one_cluster) == Approx(1.0));
  // singletons vs one cluster: expected index equals the index, scoring 0
  CHECK(ari(singletons, one_cluster) == Approx(0.0));
}

TEST_CASE("random instances match the oracles exactly") {
  std::mt19937 gen(11);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 5 + static_cast<int>(gen() % 40);
    const int kt = 2 + static_cast<int>(gen() % 5);
    const int kp = 2 + static_cast<int>(gen() % 5);
    const auto truth = testutil::random_labels(n, kt, gen);
    const auto pred = testutil::random_labels(n, kp, gen);

    CHECK(acc(truth, pred) == Approx(testutil::oracle_acc_exhaustive(truth, pred)).epsilon(1e-14));
    CHECK(nmi(truth, pred) == Approx(testutil::oracle_nmi(truth, pred)).epsilon(1e-12));
    CHECK(ari(truth, pred) == Approx(testutil::oracle_ari(truth, pred)).epsilon(1e-12));
    CHECK(f_measure(truth, pred) == Approx(testutil::oracle_f_measure(truth, pred)).epsilon(1e-12));

    CHECK(nmi(truth, pred) >= 0.0);
    CHECK(nmi(truth, pred) <= 1.0 + 1e-12);
    CHECK(f_measure(truth, pred) >= 0.0);
    CHECK(f_measure(truth, pred) <= 1.0 + 1e-12);
    CHECK(ari(truth, pred) <= 1.0 + 1e-12);
  }
}

TEST_CASE("metrics are invariant under relabeling and sample permutation") {
  std::mt19937 gen(23);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 30;
    auto truth = testutil::random_labels(n, 4, gen);
    auto pred = testutil::random_labels(n, 3, gen);
    const MetricReport base = evaluate(truth, pred);

    // relabel both sides
    std::vector<int> tmap{2, 0, 3, 1}, pmap{1, 2, 0};
    std::vector<int> truth2(truth), pred2(pred);
    for (auto& v : truth2) v = tmap[static_cast<std::size_t>(v)];
    for (auto& v : pred2) v = pmap[static_cast<std::size_t>(v)];
    MetricReport relabeled = evaluate(truth2, pred2);
    CHECK(relabeled.nmi == Approx(base.nmi).epsilon(1e-12));
    CHECK(relabeled.acc == Approx(base.acc).epsilon(1e-12));
    CHECK(relabeled.ari == Approx(base.ari).epsilon(1e-12));
    CHECK(relabeled.f_measure == Approx(base.f_measure).epsilon(1e-12));

    // common permutation of the sample order
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), gen);
    std::vector<int> truth3(truth), pred3(pred);
    for (int i = 0; i < n; ++i) {
      truth3[static_cast<std::size_t>(i)] = truth[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
      pred3[static_cast<std::size_t>(i)] = pred[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    }
    MetricReport permuted = evaluate(truth3, pred3);
    CHECK(permuted.nmi == Approx(base.nmi).epsilon(1e-12));
    CHECK(permuted.acc == Approx(base.acc).epsilon(1e-12));
    CHECK(permuted.ari == Approx(base.ari).epsilon(1e-12));
    CHECK(permuted.f_measure == Approx(base.f_measure).epsilon(1e-12));
  }
}

TEST_CASE("ari is centered near zero for random labelings") {
  std::mt19937 gen(31);
  double sum = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const auto truth = testutil::random_labels(50, 3, gen);
    const auto pred = testutil::random_labels(50, 4, gen);
    sum += ari(truth, pred);
  }
  CHECK(std::abs(sum / trials) < 0.05);
}

TEST_CASE("length mismatches are rejected") {
  const std::vector<int> a{0, 1}, b{0, 1, 2};
  CHECK_THROWS_AS(nmi(a, b), std::invalid_argument);
  CHECK_THROWS_AS(acc(a, b), std::invalid_argument);
  CHECK_THROWS_AS(ari(a, b), std::invalid_argument);
  CHECK_THROWS_AS(f_measure(a, b), std::invalid_argument);
}

TEST_CASE("report json carries the table column names") {
  const std::vector<int> l{0, 0, 1, 1};
  const std::string json = metric_report_json(evaluate(l, l));
  CHECK(json.find("\"nmi\"") != std::string::npos);
  CHECK(json.find("\"acc\"") != std::string::npos);
  CHECK(json.find("\"ar\"") != std::string::npos);
  CHECK(json.find("\"f_measure\"") != std::string::npos);
}
