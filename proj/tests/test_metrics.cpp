#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hmdetect/errors.hpp"
#include "hmdetect/metrics.hpp"
#include "hmdetect/rng.hpp"
#include "oracles.hpp"

using namespace hmdetect;

namespace {

ScoreTable make(const std::vector<double>& clean, const std::vector<double>& adv) {
  ScoreTable t;
  for (std::size_t i = 0; i < clean.size(); ++i) t.entries.push_back({"c" + std::to_string(i), clean[i], false});
  for (std::size_t i = 0; i < adv.size(); ++i) t.entries.push_back({"a" + std::to_string(i), adv[i], true});
  return t;
}

ScoreTable random_table(Rng& rng, bool heavy_ties) {
  ScoreTable t;
  const auto n = 2 + rng.below(99);
  for (std::uint64_t i = 0; i < n; ++i) {
    const double s = heavy_ties ? static_cast<double>(rng.below(4)) : rng.normal();
    t.entries.push_back({"e" + std::to_string(i), s, rng.below(2) == 1});
  }
  t.entries[0].is_adversarial = true;
  t.entries[1].is_adversarial = false;
  return t;
}

}  // namespace

TEST_CASE("AUROC examples") {
  CHECK(auroc(make({0.1, 0.2}, {0.8, 0.9})) == 1.0);
  CHECK(auroc(make({1, 2, 3}, {1, 2, 3})) == 0.5);
  CHECK(auroc(make({0.1, 0.3}, {0.2, 0.4})) == 0.75);
  CHECK(oracle::auroc_pairwise(make({0.1, 0.3}, {0.2, 0.4})) == 0.75);
}

TEST_CASE("AUPR examples") {
  CHECK(aupr(make({0.1, 0.2}, {0.8, 0.9}), PrPositive::adversarial_in) == 1.0);
  CHECK(aupr(make({0.1, 0.2}, {0.8, 0.9}), PrPositive::clean_out) == 1.0);
  const auto t = make({1, 3}, {2, 4});
  CHECK(oracle::aupr_in_sweep(t) == doctest::Approx(5.0 / 6.0));
  CHECK(aupr(t, PrPositive::adversarial_in) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  const auto top = make({1, 2, 3, 4}, {9});
  CHECK(pr_curve(top).front().precision == 1.0);
}

TEST_CASE("FPR at TPR examples") {
  std::vector<double> adv;
  for (int i = 2; i <= 11; ++i) adv.push_back(i);
  std::vector<double> clean(9, 1.0);
  clean.push_back(10.5);
  const auto t = make(clean, adv);
  CHECK(oracle::fpr_at_tpr_sweep(t, 0.9) == 0.1);
  CHECK(fpr_at_tpr(t, 0.9) == 0.1);
  CHECK(fpr_at_tpr(make({0.1, 0.2}, {0.8, 0.9}), 0.9) == 0.0);
  CHECK(fpr_at_tpr(make({0.1, 0.2}, {0.8, 0.9}), 1.0) == 0.0);

  const std::vector<double> same{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto tied = make(same, same);
  CHECK(fpr_at_tpr(tied, 0.9) >= 0.9 - 1.0 / 20);
  CHECK_THROWS_AS(fpr_at_tpr(tied, 0.0), ValidationError);
}

TEST_CASE("Err examples") {
  CHECK(err(make({0.1, 0.2}, {0.8, 0.9})) == 0.0);
  CHECK(err(make({1, 2, 3}, {1, 2, 3})) == 0.5);
  CHECK(err(make({1, 3}, {2, 4})) == 0.25);
}

TEST_CASE("single-class tables are rejected") {
  CHECK_THROWS_AS(auroc(make({1, 2}, {})), ValidationError);
  CHECK_THROWS_AS(aupr(make({}, {1}), PrPositive::clean_out), ValidationError);
  CHECK_THROWS_AS(err(make({}, {1})), ValidationError);
  CHECK_THROWS_AS(full_report(make({1}, {})), ValidationError);
}

TEST_CASE("metrics equal the sweep oracles exactly on random tables") {
  Rng rng(123);
  for (int trial = 0; trial < 200; ++trial) {
    const auto t = random_table(rng, trial % 2 == 0);
    CHECK(auroc(t) == oracle::auroc_pairwise(t));
    CHECK(aupr(t, PrPositive::adversarial_in) == oracle::aupr_in_sweep(t));
    CHECK(aupr(t, PrPositive::clean_out) == oracle::aupr_out_sweep(t));
    CHECK(fpr_at_tpr(t, 0.9) == oracle::fpr_at_tpr_sweep(t, 0.9));
    CHECK(err(t) == oracle::err_sweep(t));
  }
}

TEST_CASE("trapezoidal ROC area equals the pairwise AUROC") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto t = random_table(rng, trial % 3 == 0);
    CHECK(std::abs(roc_trapezoid_area(roc_curve(t)) - oracle::auroc_pairwise(t)) <= 1e-12);
  }
}

TEST_CASE("metrics are invariant under strictly increasing transforms") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = random_table(rng, trial % 2 == 0);
    auto u = t;
    for (auto& e : u.entries) e.score = std::exp(e.score) * 3.0 + 1.0;
    CHECK(auroc(u) == auroc(t));
    CHECK(aupr(u, PrPositive::adversarial_in) == aupr(t, PrPositive::adversarial_in));
    CHECK(aupr(u, PrPositive::clean_out) == aupr(t, PrPositive::clean_out));
    CHECK(fpr_at_tpr(u, 0.9) == fpr_at_tpr(t, 0.9));
    CHECK(err(u) == err(t));
  }
}

TEST_CASE("AUROC is unchanged by flipping labels and negating scores") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = random_table(rng, trial % 2 == 0);
    CHECK(auroc(oracle::flipped(t)) == auroc(t));
  }
}

TEST_CASE("metrics are invariant to entry order") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = random_table(rng, true);
    auto shuffled = t;
    std::reverse(shuffled.entries.begin(), shuffled.entries.end());
    std::rotate(shuffled.entries.begin(), shuffled.entries.begin() + 1, shuffled.entries.end());
    const auto a = full_report(t), b = full_report(shuffled);
    CHECK(a.auroc == b.auroc);
    CHECK(a.aupr_in == b.aupr_in);
    CHECK(a.aupr_out == b.aupr_out);
    CHECK(a.fpr_at_r == b.fpr_at_r);
    CHECK(a.err == b.err);
  }
}

TEST_CASE("full report aggregates the individual metrics") {
  const auto perfect = full_report(make({0.1, 0.2}, {0.8, 0.9}));
  CHECK(perfect.auroc == 1.0);
  CHECK(perfect.fpr_at_r == 0.0);
  CHECK(perfect.aupr_in == 1.0);
  CHECK(perfect.aupr_out == 1.0);
  CHECK(perfect.err == 0.0);

  const std::vector<double> same{1, 2, 3, 4, 5};
  const auto tied = full_report(make(same, same));
  CHECK(tied.auroc == 0.5);
  CHECK(tied.err == 0.5);
  CHECK(tied.fpr_at_r >= 0.9 - 1.0 / 10);

  Rng rng(10);
  const auto t = random_table(rng, true);
  const auto rep = full_report(t, 0.8);
  CHECK(rep.auroc == auroc(t));
  CHECK(rep.fpr_at_r == fpr_at_tpr(t, 0.8));
  CHECK(rep.aupr_in == aupr(t, PrPositive::adversarial_in));
  CHECK(rep.aupr_out == aupr(t, PrPositive::clean_out));
  CHECK(rep.err == err(t));
  CHECK(rep.r == 0.8);
}

TEST_CASE("curves are monotone in threshold and end at full recall") {
  Rng rng(11);
  const auto t = random_table(rng, true);
  const auto roc = roc_curve(t);
  CHECK(std::isinf(roc.front().threshold));
  CHECK(roc.front().fpr == 0.0);
  CHECK(roc.back().fpr == 1.0);
  CHECK(roc.back().tpr == 1.0);
  for (std::size_t i = 1; i < roc.size(); ++i) {
    CHECK(roc[i].threshold < roc[i - 1].threshold);
    CHECK(roc[i].fpr >= roc[i - 1].fpr);
    CHECK(roc[i].tpr >= roc[i - 1].tpr);
  }
  const auto pr = pr_curve(t);
  CHECK(pr.back().recall == 1.0);
  for (std::size_t i = 1; i < pr.size(); ++i) CHECK(pr[i].recall >= pr[i - 1].recall);
}

TEST_CASE("report JSON and table formatting") {
  const auto rep = full_report(make({0.1, 0.3}, {0.2, 0.4}));
  const auto j = to_json(rep);
  CHECK(j["auroc"] == 0.75);
  CHECK(j["roc_points"][0]["threshold"].is_null());
  CHECK(report_from_json(j).auroc == 0.75);
  const auto row = format_table_row("toy", rep);
  CHECK(row.find("75.0") != std::string::npos);
  CHECK(format_table_header().find("AUROC") < format_table_header().find("FPR"));
  CHECK(format_table_header().find("AUPR-OUT") < format_table_header().find("Err"));

  const auto s = summarize_reports({rep, full_report(make({0.1, 0.2}, {0.8, 0.9}))});
  CHECK(s.runs == 2);
  CHECK(s.auroc.mean == doctest::Approx(0.875));
  CHECK(s.auroc.stddev == doctest::Approx(0.125));
}
