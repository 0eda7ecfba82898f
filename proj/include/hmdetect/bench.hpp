#pragma once

// Timing study: halfspace-mass vs Mahalanobis depth of the origin with
// respect to centred Gaussian samples whose covariance is Wishart.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hmdetect/types.hpp"

namespace hmdetect {

struct BenchGrid {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint32_t> sizes;
  std::vector<std::uint32_t> k_values;
  std::uint32_t repeats = 10;
  std::uint64_t seed = 0;
  std::uint32_t n_s = 32;
  double lambda = 0.5;
  unsigned threads = 1;  // internal parallelism of the scorers under test
};

// d in {32, 128, 512}, n in {100, 1000, 10000}, K in {100, 1000, 10000},
// 3 repeats.
BenchGrid desk_grid();
// d in {800, ..., 5000}, n in {100, ..., 10000}, K in {100, 1000, 10000},
// 10 repeats.
BenchGrid paper_grid();

void validate(const BenchGrid& grid);

enum class BenchMethod { hm, mahalanobis };
enum class BenchPhase { fit, score, total };

std::string_view to_string(BenchMethod m);
std::string_view to_string(BenchPhase p);

struct TimingRecord {
  BenchMethod method = BenchMethod::hm;
  std::uint32_t k = 0;  // 0 for Mahalanobis
  BenchPhase phase = BenchPhase::fit;
  std::uint32_t d = 0;
  std::uint32_t n = 0;
  std::uint32_t repeat = 0;
  double seconds = 0.0;
  unsigned threads = 1;
};

struct WishartSample {
  Matrix sigma;   // (1/d) G^T G, G a d x d standard Gaussian matrix
  Points points;  // n draws from N(0, sigma)
};

WishartSample gen_wishart_gaussian(std::uint32_t d, std::uint32_t n, std::uint64_t seed);

struct BenchResult {
  std::vector<TimingRecord> records;
  std::vector<std::string> skipped;  // one reason per skipped cell
};

// Cells run sequentially. Each (d, n, method) cell does one untimed warm-up
// run, then `repeats` timed fit + score-the-origin runs.
BenchResult run_bench(const BenchGrid& grid);

struct CellSummary {
  BenchMethod method;
  std::uint32_t k;
  BenchPhase phase;
  std::uint32_t d;
  std::uint32_t n;
  double mean;
  double q10;
  double q90;
};

// Quantiles by linear interpolation between order statistics.
std::vector<CellSummary> summarize(const std::vector<TimingRecord>& records);

// CSV "method,phase,K,d,n,repeat,seconds" and "method,phase,K,d,n,mean,q10,q90".
std::string encode_timings_csv(const std::vector<TimingRecord>& records);
std::string encode_summary_csv(const std::vector<CellSummary>& summary);

// Complexity checks on recorded timings, each on median seconds:
//  score: HM score time at the largest (K, d) compared between the smallest
//         and largest n; passes when the ratio is within 1.5x.
//  fit:   HM fit time at the largest d and n, K = 1000 over K = 100; passes
//         when within 1.5x of 10.
struct ScalingCheck {
  std::optional<double> score_ratio;  // nullopt when the grid lacks the cells
  std::optional<double> fit_ratio;
  bool score_ok = false;
  bool fit_ok = false;
};

ScalingCheck check_scaling(const std::vector<TimingRecord>& records);

}  // namespace hmdetect
