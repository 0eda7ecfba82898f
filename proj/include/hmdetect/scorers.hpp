#pragma once

// Anomaly scorers. All of them return HIGHER = MORE ANOMALOUS:
//   class-conditioned halfspace mass  -depth(emb | class y_hat), in [-1, 0]
//   class-conditioned Mahalanobis     (emb - mu)^T (Sigma + ridge I)^-1 (emb - mu)
//   language-model likelihood         -sum of token log-probabilities

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "hmdetect/depth_hm.hpp"
#include "hmdetect/ingest.hpp"
#include "hmdetect/score_table.hpp"
#include "hmdetect/types.hpp"

namespace hmdetect {

// ---------------------------------------------------------------- Mahalanobis

struct GaussianClass {
  Vector mean;
  Matrix precision;  // (Sigma + ridge I)^-1, symmetric
  double ridge = 0.0;
  std::uint64_t count = 0;
};

struct GaussianClassModel {
  std::uint32_t d = 0;
  std::map<std::int32_t, GaussianClass> classes;
};

// Relative ridge used when none is given: 1e-6 * trace(Sigma) / d.
double default_ridge(const Matrix& covariance);

// Mean and maximum-likelihood covariance (denominator n). Needs >= 2 rows.
// ridge == nullopt selects default_ridge. Throws ValidationError when the
// regularized covariance is not positive definite.
GaussianClass fit_gaussian(const Points& points, std::optional<double> ridge,
                           std::int32_t label = 0);

// One Gaussian per ground-truth class y over all records of ds.
GaussianClassModel fit_mahalanobis(const EmbeddingDataset& ds, std::optional<double> ridge);

double score_mahalanobis(const GaussianClass& cls, std::span<const double> emb);
double score_mahalanobis(const GaussianClassModel& model, std::span<const double> emb,
                         std::int32_t y_hat);

// LGM1: magic "LGM1", version u32, d u32, class count u32, then per class:
// label i32, d x f64 mean, d*d x f64 precision (row-major), ridge f64,
// count u64.
std::string encode_gaussian_model(const GaussianClassModel& model);
GaussianClassModel decode_gaussian_model(std::string_view bytes);
void write_gaussian_model(const GaussianClassModel& model, const std::filesystem::path& path);
GaussianClassModel read_gaussian_model(const std::filesystem::path& path);

// ---------------------------------------------------- class-conditioned HM

struct ClassConditionedHm {
  std::map<std::int32_t, HalfspaceMassModel> classes;

  std::uint32_t dim() const;
};

// One halfspace-mass model per ground-truth class; class y uses seed
// derive_seed(params.seed, y).
ClassConditionedHm fit_class_hm(const EmbeddingDataset& ds, const HmHyperParams& params,
                                const HmFitOptions& options = {});

double score_class_hm(const ClassConditionedHm& model, std::span<const double> emb,
                      std::int32_t y_hat);

// Directory layout: manifest.json plus class_<label>.lhm1 per class.
void write_class_hm(const ClassConditionedHm& model, const std::filesystem::path& dir);
ClassConditionedHm read_class_hm(const std::filesystem::path& dir);

// ------------------------------------------------------------ language model

double score_lm(const TokenLogProbRecord& rec);

// ------------------------------------------------------------- score tables

// Scores every clean/adversarial record (train records are skipped).
ScoreTable score_dataset(const ClassConditionedHm& model, const EmbeddingDataset& ds,
                         unsigned threads = 1);
ScoreTable score_dataset(const GaussianClassModel& model, const EmbeddingDataset& ds);

}  // namespace hmdetect
