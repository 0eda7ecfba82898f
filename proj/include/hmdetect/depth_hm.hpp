#pragma once

// Halfspace-mass depth, approximated by Monte Carlo over random halfspaces.
//
// Fitting draws K directions uniformly on the unit sphere. For each
// direction it projects a fresh sub-sample (at most n_s points, without
// replacement) of the training set, picks a threshold kappa uniformly in
// the middle lambda-fraction of the projected range, and records the
// fraction of the sub-sample on either side. A point's depth is the mean,
// over directions, of the mass on the side it falls on: 1 at the centre of
// the data, about 1/2 far away from it.
//
// Tie rule, used identically when fitting and scoring: a projection
// strictly below kappa is "left", anything else is "right".
//
// Direction k draws from its own stream Rng(derive_seed(seed, k)), so a
// model does not depend on the evaluation order or thread count.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hmdetect/types.hpp"

namespace hmdetect {

struct HmHyperParams {
  std::uint32_t k = 10000;   // number of sampled directions
  std::uint32_t n_s = 32;    // sub-sample size per direction
  double lambda = 0.5;       // threshold spread, in (0, 2]
  std::uint64_t seed = 0;

  bool operator==(const HmHyperParams&) const = default;
};

// Throws ValidationError; warns when lambda > 1.
void validate(const HmHyperParams& params);

struct Halfspace {
  Vector u;
  double kappa = 0.0;
  double m_left = 0.0;
  double m_right = 0.0;
};

struct HmFitOptions {
  unsigned threads = 1;
  // Keep each direction's sub-sample indices in the model (debug aid; not
  // serialized).
  bool keep_subsamples = false;
};

class HalfspaceMassModel {
 public:
  HalfspaceMassModel() = default;
  HalfspaceMassModel(HmHyperParams params, std::uint64_t fit_size, Points directions,
                     std::vector<double> kappa, std::vector<double> m_left,
                     std::vector<double> m_right);

  std::uint32_t dim() const { return static_cast<std::uint32_t>(directions_.cols()); }
  std::uint32_t size() const { return static_cast<std::uint32_t>(kappa_.size()); }
  const HmHyperParams& params() const { return params_; }
  std::uint64_t fit_size() const { return fit_size_; }

  Halfspace halfspace(std::uint32_t k) const;
  const Points& directions() const { return directions_; }
  std::span<const double> kappa() const { return kappa_; }
  std::span<const double> m_left() const { return m_left_; }
  std::span<const double> m_right() const { return m_right_; }

  // Empty unless fitted with keep_subsamples.
  const std::vector<std::vector<std::uint32_t>>& subsamples() const { return subsamples_; }
  void set_subsamples(std::vector<std::vector<std::uint32_t>> s) { subsamples_ = std::move(s); }

  bool operator==(const HalfspaceMassModel& other) const;

 private:
  HmHyperParams params_;
  std::uint64_t fit_size_ = 0;
  Points directions_;  // K x d, unit rows
  std::vector<double> kappa_;
  std::vector<double> m_left_;
  std::vector<double> m_right_;
  std::vector<std::vector<std::uint32_t>> subsamples_;
};

HalfspaceMassModel fit_hm(const Points& points, const HmHyperParams& params,
                          const HmFitOptions& options = {});

// Depth in [0, 1]; higher means more central. Cost O(K d).
double score_hm(const HalfspaceMassModel& model, std::span<const double> x);
double score_hm(const HalfspaceMassModel& model, const Vector& x);

// Row i of the result equals score_hm(model, xs.row(i)) bit for bit.
std::vector<double> score_hm_batch(const HalfspaceMassModel& model, const Points& xs,
                                   unsigned threads = 1);

// Dot product in a fixed summation order; the one projection kernel used by
// both fitting and scoring.
double project(const double* u, const double* x, std::size_t d);

// LHM1 codec.
std::string encode_hm_model(const HalfspaceMassModel& model);
HalfspaceMassModel decode_hm_model(std::string_view bytes);
void write_hm_model(const HalfspaceMassModel& model, const std::filesystem::path& path);
HalfspaceMassModel read_hm_model(const std::filesystem::path& path);

}  // namespace hmdetect
