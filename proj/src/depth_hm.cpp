#include "hmdetect/depth_hm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "binary_io.hpp"
#include "hmdetect/errors.hpp"
#include "hmdetect/rng.hpp"
#include "hmdetect/util.hpp"

namespace hmdetect {
namespace {

constexpr std::string_view kMagic = "LHM1";
constexpr std::uint32_t kVersion = 1;

void check_finite_query(std::span<const double> x, std::uint32_t d) {
  if (x.size() != d) {
    throw_validation("dimension mismatch: query has " + std::to_string(x.size()) +
                     " coordinates, model expects " + std::to_string(d));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw_validation("non-finite query coordinate");
  }
}

double score_row(const HalfspaceMassModel& model, const double* x) {
  const auto& dirs = model.directions();
  const auto kappa = model.kappa();
  const auto left = model.m_left();
  const auto right = model.m_right();
  const std::size_t d = model.dim();
  double mass = 0.0;
  for (std::uint32_t k = 0; k < model.size(); ++k) {
    const double p = project(dirs.row(k).data(), x, d);
    mass += p < kappa[k] ? left[k] : right[k];
  }
  return mass / static_cast<double>(model.size());
}

}  // namespace

void validate(const HmHyperParams& params) {
  if (params.k < 1) throw_validation("K must be >= 1");
  if (params.n_s < 1) throw_validation("n_s must be >= 1");
  if (!(params.lambda > 0.0) || !(params.lambda <= 2.0)) {
    throw_validation("lambda must lie in (0, 2], got " + format_double(params.lambda));
  }
  if (params.lambda > 1.0) {
    log_warn("lambda > 1 widens thresholds beyond the central half of the projected range");
  }
}

double project(const double* u, const double* x, std::size_t d) {
  double acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) acc += u[j] * x[j];
  return acc;
}

HalfspaceMassModel::HalfspaceMassModel(HmHyperParams params, std::uint64_t fit_size,
                                       Points directions, std::vector<double> kappa,
                                       std::vector<double> m_left, std::vector<double> m_right)
    : params_(params),
      fit_size_(fit_size),
      directions_(std::move(directions)),
      kappa_(std::move(kappa)),
      m_left_(std::move(m_left)),
      m_right_(std::move(m_right)) {
  const auto k = static_cast<std::size_t>(directions_.rows());
  if (kappa_.size() != k || m_left_.size() != k || m_right_.size() != k) {
    throw_validation("halfspace arrays disagree on K");
  }
  if (k != params_.k) throw_validation("model holds " + std::to_string(k) + " halfspaces, K=" +
                                       std::to_string(params_.k));
  if (directions_.cols() < 1) throw_validation("model dimension must be >= 1");
}

Halfspace HalfspaceMassModel::halfspace(std::uint32_t k) const {
  return Halfspace{directions_.row(k).transpose(), kappa_.at(k), m_left_.at(k), m_right_.at(k)};
}

bool HalfspaceMassModel::operator==(const HalfspaceMassModel& other) const {
  return params_ == other.params_ && fit_size_ == other.fit_size_ &&
         directions_.rows() == other.directions_.rows() &&
         directions_.cols() == other.directions_.cols() && directions_ == other.directions_ &&
         kappa_ == other.kappa_ && m_left_ == other.m_left_ && m_right_ == other.m_right_;
}

HalfspaceMassModel fit_hm(const Points& points, const HmHyperParams& params,
                          const HmFitOptions& options) {
  validate(params);
  if (points.rows() == 0) throw_validation("cannot fit halfspace-mass depth on an empty set");
  if (points.cols() == 0) throw_validation("points must have dimension >= 1");
  if (points.rows() > std::numeric_limits<std::uint32_t>::max()) {
    throw_validation("training set too large");
  }

  const auto n = static_cast<std::uint32_t>(points.rows());
  const auto d = static_cast<std::size_t>(points.cols());
  const std::uint32_t n_sub = std::min(params.n_s, n);
  const std::uint32_t big_k = params.k;

  Points directions(big_k, static_cast<Eigen::Index>(d));
  std::vector<double> kappa(big_k), m_left(big_k), m_right(big_k);
  std::vector<std::vector<std::uint32_t>> subsamples(options.keep_subsamples ? big_k : 0);

  // Finiteness is checked on the projections of sampled rows only, so the
  // fit never touches rows it does not use.
  std::atomic<bool> nonfinite{false};
  parallel_for(big_k, options.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint32_t> all(n > n_sub ? 0 : n);
    for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
    std::vector<double> proj(n_sub);
    for (std::size_t k = begin; k < end; ++k) {
      Rng rng(derive_seed(params.seed, k));
      const std::vector<std::uint32_t> sub =
          n > n_sub ? sample_without_replacement(rng, n, n_sub) : all;

      double* u = directions.row(static_cast<Eigen::Index>(k)).data();
      double norm2 = 0.0;
      do {
        norm2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          u[j] = rng.normal();
          norm2 += u[j] * u[j];
        }
      } while (norm2 == 0.0);
      const double inv = 1.0 / std::sqrt(norm2);
      for (std::size_t j = 0; j < d; ++j) u[j] *= inv;

      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (std::uint32_t i = 0; i < n_sub; ++i) {
        proj[i] = project(u, points.row(sub[i]).data(), d);
        if (!std::isfinite(proj[i])) nonfinite.store(true, std::memory_order_relaxed);
        lo = std::min(lo, proj[i]);
        hi = std::max(hi, proj[i]);
      }
      const double mid = (hi + lo) / 2.0;
      const double half_width = params.lambda / 2.0 * (hi - lo);
      const double threshold = rng.uniform(mid - half_width, mid + half_width);

      std::uint32_t below = 0;
      for (std::uint32_t i = 0; i < n_sub; ++i) below += proj[i] < threshold ? 1u : 0u;
      kappa[k] = threshold;
      m_left[k] = static_cast<double>(below) / n_sub;
      m_right[k] = static_cast<double>(n_sub - below) / n_sub;
      if (options.keep_subsamples) subsamples[k] = sub;
    }
  });
  if (nonfinite.load()) throw_validation("non-finite training coordinate");

  HalfspaceMassModel model(params, n, std::move(directions), std::move(kappa), std::move(m_left),
                           std::move(m_right));
  if (options.keep_subsamples) model.set_subsamples(std::move(subsamples));
  return model;
}

double score_hm(const HalfspaceMassModel& model, std::span<const double> x) {
  check_finite_query(x, model.dim());
  return score_row(model, x.data());
}

double score_hm(const HalfspaceMassModel& model, const Vector& x) {
  return score_hm(model, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

std::vector<double> score_hm_batch(const HalfspaceMassModel& model, const Points& xs,
                                   unsigned threads) {
  if (xs.rows() > 0 && xs.cols() != model.dim()) {
    throw_validation("dimension mismatch: queries have " + std::to_string(xs.cols()) +
                     " coordinates, model expects " + std::to_string(model.dim()));
  }
  if (!xs.allFinite()) throw_validation("non-finite query coordinate");
  std::vector<double> out(static_cast<std::size_t>(xs.rows()));
  parallel_for(out.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = score_row(model, xs.row(static_cast<Eigen::Index>(i)).data());
    }
  });
  return out;
}

std::string encode_hm_model(const HalfspaceMassModel& model) {
  detail::ByteWriter w;
  const auto& p = model.params();
  w.put_bytes(kMagic);
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint32_t>(model.dim());
  w.put<std::uint32_t>(p.k);
  w.put<std::uint32_t>(p.n_s);
  w.put<double>(p.lambda);
  w.put<std::uint64_t>(p.seed);
  w.put<std::uint64_t>(model.fit_size());
  for (std::uint32_t k = 0; k < model.size(); ++k) {
    const double* u = model.directions().row(k).data();
    for (std::uint32_t j = 0; j < model.dim(); ++j) w.put<double>(u[j]);
    w.put<double>(model.kappa()[k]);
    w.put<double>(model.m_left()[k]);
    w.put<double>(model.m_right()[k]);
  }
  return w.take();
}

HalfspaceMassModel decode_hm_model(std::string_view bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic(kMagic, "LHM1");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kVersion) throw_format("unsupported LHM1 version " + std::to_string(version));
  const auto d = r.get<std::uint32_t>("dimension");
  HmHyperParams p;
  p.k = r.get<std::uint32_t>("K");
  p.n_s = r.get<std::uint32_t>("n_s");
  p.lambda = r.get<double>("lambda");
  p.seed = r.get<std::uint64_t>("seed");
  const auto fit_size = r.get<std::uint64_t>("fit_size");
  if (d == 0 || p.k == 0) throw_format("LHM1 header declares zero dimension or K");
  const std::size_t block = 8ull * (d + 3);
  if (r.remaining() / block < p.k) {
    throw_format("truncated input at byte offset " + std::to_string(r.offset()) + ": " +
                 std::to_string(p.k) + " halfspace blocks declared");
  }
  Points dirs(p.k, d);
  std::vector<double> kappa(p.k), left(p.k), right(p.k);
  for (std::uint32_t k = 0; k < p.k; ++k) {
    for (std::uint32_t j = 0; j < d; ++j) dirs(k, j) = r.get<double>("direction");
    kappa[k] = r.get<double>("kappa");
    left[k] = r.get<double>("m_left");
    right[k] = r.get<double>("m_right");
  }
  if (!r.at_end()) throw_format("trailing bytes at byte offset " + std::to_string(r.offset()));
  return HalfspaceMassModel(p, fit_size, std::move(dirs), std::move(kappa), std::move(left),
                            std::move(right));
}

void write_hm_model(const HalfspaceMassModel& model, const std::filesystem::path& path) {
  detail::write_file(path, encode_hm_model(model));
}

HalfspaceMassModel read_hm_model(const std::filesystem::path& path) {
  return decode_hm_model(detail::read_file(path));
}

}  // namespace hmdetect
