#include "hmdetect/bench.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <new>
#include <tuple>

#include "hmdetect/depth_hm.hpp"
#include "hmdetect/errors.hpp"
#include "hmdetect/rng.hpp"
#include "hmdetect/scorers.hpp"
#include "hmdetect/util.hpp"

namespace hmdetect {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  const double s = std::chrono::duration<double>(Clock::now() - start).count();
  // Guard the elapsed > 0 invariant against coarse clocks.
  return std::max(s, 1e-9);
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : (xs[m - 1] + xs[m]) / 2.0;
}

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct RunTimes {
  double fit;
  double score;
};

RunTimes time_hm(const Points& data, const Vector& query, const HmHyperParams& params,
                 unsigned threads) {
  auto start = Clock::now();
  const auto model = fit_hm(data, params, HmFitOptions{threads, false});
  const double fit = seconds_since(start);
  start = Clock::now();
  volatile double sink = score_hm(model, query);
  (void)sink;
  return {fit, seconds_since(start)};
}

RunTimes time_mahalanobis(const Points& data, const Vector& query) {
  auto start = Clock::now();
  const auto cls = fit_gaussian(data, std::nullopt);
  const double fit = seconds_since(start);
  start = Clock::now();
  volatile double sink =
      score_mahalanobis(cls, std::span<const double>(query.data(), static_cast<std::size_t>(query.size())));
  (void)sink;
  return {fit, seconds_since(start)};
}

std::vector<double> medians_for(const std::vector<TimingRecord>& records, BenchPhase phase,
                                std::uint32_t k, std::uint32_t d, std::uint32_t n) {
  std::vector<double> xs;
  for (const auto& r : records) {
    if (r.method == BenchMethod::hm && r.phase == phase && r.k == k && r.d == d && r.n == n) {
      xs.push_back(r.seconds);
    }
  }
  return xs;
}

}  // namespace

BenchGrid desk_grid() {
  BenchGrid g;
  g.dims = {32, 128, 512};
  g.sizes = {100, 1000, 10000};
  g.k_values = {100, 1000, 10000};
  g.repeats = 3;
  return g;
}

BenchGrid paper_grid() {
  BenchGrid g;
  g.dims = {800, 1000, 1200, 1500, 2000, 2500, 5000};
  g.sizes = {100, 2500, 5000, 7500, 10000};
  g.k_values = {100, 1000, 10000};
  g.repeats = 10;
  return g;
}

void validate(const BenchGrid& grid) {
  auto positive = [](const std::vector<std::uint32_t>& xs, const char* name) {
    if (xs.empty()) throw_validation(std::string("bench grid: ") + name + " is empty");
    for (auto x : xs) {
      if (x == 0) throw_validation(std::string("bench grid: ") + name + " must be positive");
    }
  };
  positive(grid.dims, "dims");
  positive(grid.sizes, "sizes");
  positive(grid.k_values, "k_values");
  if (grid.repeats < 2) throw_validation("bench grid: repeats must be >= 2");
}

std::string_view to_string(BenchMethod m) {
  return m == BenchMethod::hm ? "hm" : "mahalanobis";
}

std::string_view to_string(BenchPhase p) {
  switch (p) {
    case BenchPhase::fit: return "fit";
    case BenchPhase::score: return "score";
    case BenchPhase::total: return "total";
  }
  return "?";
}

WishartSample gen_wishart_gaussian(std::uint32_t d, std::uint32_t n, std::uint64_t seed) {
  if (d == 0 || n == 0) throw_validation("wishart sample needs d, n >= 1");
  Rng rng(seed);
  Matrix g(d, d);
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.normal();
  }
  WishartSample out;
  out.sigma = (g.transpose() * g) / static_cast<double>(d);
  Eigen::LLT<Matrix> llt(out.sigma);
  if (llt.info() != Eigen::Success) throw_validation("wishart covariance is not positive definite");
  const Matrix factor = llt.matrixL();

  Points z(n, d);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = rng.normal();
  }
  out.points = z * factor.transpose();
  return out;
}

BenchResult run_bench(const BenchGrid& grid) {
  validate(grid);
  BenchResult result;
  for (const auto d : grid.dims) {
    for (const auto n : grid.sizes) {
      const std::string cell = "d=" + std::to_string(d) + " n=" + std::to_string(n);
      WishartSample sample;
      try {
        sample = gen_wishart_gaussian(d, n, derive_seed(grid.seed, (std::uint64_t{d} << 32) | n));
      } catch (const std::bad_alloc&) {
        result.skipped.push_back(cell + ": out of memory generating data");
        log_warn("bench: skipping " + result.skipped.back());
        continue;
      }
      const Vector origin = Vector::Zero(d);

      auto run_cell = [&](BenchMethod method, std::uint32_t k, auto&& timed) {
        const std::string label = cell + " " + std::string(to_string(method)) +
                                  (method == BenchMethod::hm ? " K=" + std::to_string(k) : "");
        try {
          timed();  // warm-up
          for (std::uint32_t rep = 0; rep < grid.repeats; ++rep) {
            const RunTimes t = timed();
            for (auto [phase, secs] : {std::pair{BenchPhase::fit, t.fit},
                                       std::pair{BenchPhase::score, t.score},
                                       std::pair{BenchPhase::total, t.fit + t.score}}) {
              result.records.push_back(TimingRecord{method, k, phase, d, n, rep, secs, grid.threads});
            }
          }
          log_info("bench: " + label + " done");
        } catch (const std::bad_alloc&) {
          result.skipped.push_back(label + ": out of memory");
          log_warn("bench: skipping " + result.skipped.back());
        } catch (const Error& e) {
          result.skipped.push_back(label + ": " + e.what());
          log_warn("bench: skipping " + result.skipped.back());
        }
      };

      for (const auto k : grid.k_values) {
        HmHyperParams params{k, grid.n_s, grid.lambda, derive_seed(grid.seed, k)};
        run_cell(BenchMethod::hm, k,
                 [&] { return time_hm(sample.points, origin, params, grid.threads); });
      }
      run_cell(BenchMethod::mahalanobis, 0, [&] { return time_mahalanobis(sample.points, origin); });
    }
  }
  return result;
}

std::vector<CellSummary> summarize(const std::vector<TimingRecord>& records) {
  using Key = std::tuple<int, std::uint32_t, int, std::uint32_t, std::uint32_t>;
  std::map<Key, std::vector<double>> cells;
  std::vector<Key> order;
  for (const auto& r : records) {
    Key key{static_cast<int>(r.method), r.k, static_cast<int>(r.phase), r.d, r.n};
    auto [it, inserted] = cells.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(r.seconds);
  }
  std::vector<CellSummary> out;
  for (const auto& key : order) {
    auto xs = cells[key];
    std::sort(xs.begin(), xs.end());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    const auto& [method, k, phase, d, n] = key;
    out.push_back(CellSummary{static_cast<BenchMethod>(method), k, static_cast<BenchPhase>(phase),
                              d, n, mean, quantile(xs, 0.1), quantile(xs, 0.9)});
  }
  return out;
}

std::string encode_timings_csv(const std::vector<TimingRecord>& records) {
  std::string out = "method,phase,K,d,n,repeat,seconds\n";
  for (const auto& r : records) {
    out += std::string(to_string(r.method)) + ',' + std::string(to_string(r.phase)) + ',' +
           (r.method == BenchMethod::hm ? std::to_string(r.k) : std::string()) + ',' +
           std::to_string(r.d) + ',' + std::to_string(r.n) + ',' + std::to_string(r.repeat) + ',' +
           format_double(r.seconds) + '\n';
  }
  return out;
}

std::string encode_summary_csv(const std::vector<CellSummary>& summary) {
  std::string out = "method,phase,K,d,n,mean,q10,q90\n";
  for (const auto& s : summary) {
    out += std::string(to_string(s.method)) + ',' + std::string(to_string(s.phase)) + ',' +
           (s.method == BenchMethod::hm ? std::to_string(s.k) : std::string()) + ',' +
           std::to_string(s.d) + ',' + std::to_string(s.n) + ',' + format_double(s.mean) + ',' +
           format_double(s.q10) + ',' + format_double(s.q90) + '\n';
  }
  return out;
}

ScalingCheck check_scaling(const std::vector<TimingRecord>& records) {
  ScalingCheck out;
  std::uint32_t max_k = 0, max_d = 0, min_n = UINT32_MAX, max_n = 0;
  for (const auto& r : records) {
    if (r.method != BenchMethod::hm) continue;
    max_k = std::max(max_k, r.k);
    max_d = std::max(max_d, r.d);
    min_n = std::min(min_n, r.n);
    max_n = std::max(max_n, r.n);
  }
  if (max_k == 0) return out;

  const auto small = medians_for(records, BenchPhase::score, max_k, max_d, min_n);
  const auto large = medians_for(records, BenchPhase::score, max_k, max_d, max_n);
  if (!small.empty() && !large.empty() && min_n != max_n) {
    const double a = median(small), b = median(large);
    out.score_ratio = std::max(a, b) / std::min(a, b);
    out.score_ok = *out.score_ratio <= 1.5;
  }

  const auto k100 = medians_for(records, BenchPhase::fit, 100, max_d, max_n);
  const auto k1000 = medians_for(records, BenchPhase::fit, 1000, max_d, max_n);
  if (!k100.empty() && !k1000.empty()) {
    out.fit_ratio = median(k1000) / median(k100);
    out.fit_ok = *out.fit_ratio >= 10.0 / 1.5 && *out.fit_ratio <= 10.0 * 1.5;
  }
  return out;
}

}  // namespace hmdetect
