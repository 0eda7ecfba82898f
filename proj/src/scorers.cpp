#include "hmdetect/scorers.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "binary_io.hpp"
#include "hmdetect/errors.hpp"
#include "hmdetect/rng.hpp"
#include "hmdetect/util.hpp"

namespace hmdetect {
namespace {

constexpr std::string_view kGaussianMagic = "LGM1";
constexpr std::uint32_t kGaussianVersion = 1;
constexpr int kClassHmVersion = 1;

// Pivots of the LDLT below this fraction of the largest pivot count as zero.
constexpr double kSingularPivot = 1e-12;

std::map<std::int32_t, std::vector<std::size_t>> rows_by_class(const EmbeddingDataset& ds) {
  std::map<std::int32_t, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    if (!r.y) throw_validation("record '" + r.id + "' has no ground-truth label to fit on");
    out[*r.y].push_back(i);
  }
  return out;
}

std::vector<double> as_vector(const std::vector<float>& emb) {
  return std::vector<double>(emb.begin(), emb.end());
}

void check_query(std::span<const double> emb, std::uint32_t d) {
  if (emb.size() != d) {
    throw_validation("dimension mismatch: query has " + std::to_string(emb.size()) +
                     " coordinates, model expects " + std::to_string(d));
  }
  for (double v : emb) {
    if (!std::isfinite(v)) throw_validation("non-finite query coordinate");
  }
}

template <typename Model>
void check_records_scoreable(const Model& classes, std::uint32_t d, const EmbeddingDataset& ds) {
  if (ds.d != d) {
    throw_validation("dimension mismatch: dataset d=" + std::to_string(ds.d) + ", model d=" +
                     std::to_string(d));
  }
  for (const auto& r : ds.records) {
    if (r.tag != Tag::train && !classes.contains(r.y_hat)) {
      throw_validation("record '" + r.id + "': predicted class " + std::to_string(r.y_hat) +
                       " unknown to the model");
    }
  }
}

}  // namespace

double default_ridge(const Matrix& covariance) {
  return 1e-6 * covariance.trace() / static_cast<double>(covariance.rows());
}

GaussianClass fit_gaussian(const Points& points, std::optional<double> ridge, std::int32_t label) {
  const auto n = points.rows();
  const auto d = points.cols();
  if (n < 2) {
    throw_validation("class " + std::to_string(label) + " has " + std::to_string(n) +
                     " samples; Mahalanobis fitting needs at least 2");
  }
  if (!points.allFinite()) throw_validation("non-finite training coordinate");
  if (ridge && !(*ridge >= 0.0 && std::isfinite(*ridge))) {
    throw_validation("ridge must be a finite non-negative number");
  }

  GaussianClass out;
  out.count = static_cast<std::uint64_t>(n);
  out.mean = points.colwise().mean().transpose();
  const Matrix centered = points.rowwise() - out.mean.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(n);
  out.ridge = ridge ? *ridge : default_ridge(cov);
  cov.diagonal().array() += out.ridge;

  Eigen::LDLT<Matrix> ldlt(cov);
  const Vector pivots = ldlt.vectorD();
  const double largest = pivots.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(largest > 0.0) ||
      pivots.minCoeff() <= kSingularPivot * largest) {
    throw_validation("class " + std::to_string(label) +
                     ": covariance is singular at ridge " + format_double(out.ridge) +
                     "; raise the ridge regularizer");
  }
  Matrix precision = ldlt.solve(Matrix::Identity(d, d));
  out.precision = (precision + precision.transpose()) / 2.0;
  return out;
}

GaussianClassModel fit_mahalanobis(const EmbeddingDataset& ds, std::optional<double> ridge) {
  validate(ds);
  GaussianClassModel model;
  model.d = ds.d;
  for (const auto& [label, rows] : rows_by_class(ds)) {
    model.classes.emplace(label, fit_gaussian(to_points(ds, rows), ridge, label));
  }
  return model;
}

double score_mahalanobis(const GaussianClass& cls, std::span<const double> emb) {
  check_query(emb, static_cast<std::uint32_t>(cls.mean.size()));
  const Eigen::Map<const Vector> x(emb.data(), static_cast<Eigen::Index>(emb.size()));
  const Vector diff = x - cls.mean;
  return std::max(0.0, diff.dot(cls.precision * diff));
}

double score_mahalanobis(const GaussianClassModel& model, std::span<const double> emb,
                         std::int32_t y_hat) {
  const auto it = model.classes.find(y_hat);
  if (it == model.classes.end()) {
    throw_validation("predicted class " + std::to_string(y_hat) + " unknown to the model");
  }
  return score_mahalanobis(it->second, emb);
}

std::string encode_gaussian_model(const GaussianClassModel& model) {
  detail::ByteWriter w;
  w.put_bytes(kGaussianMagic);
  w.put<std::uint32_t>(kGaussianVersion);
  w.put<std::uint32_t>(model.d);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.classes.size()));
  for (const auto& [label, cls] : model.classes) {
    w.put<std::int32_t>(label);
    for (Eigen::Index j = 0; j < cls.mean.size(); ++j) w.put<double>(cls.mean[j]);
    for (Eigen::Index r = 0; r < cls.precision.rows(); ++r) {
      for (Eigen::Index c = 0; c < cls.precision.cols(); ++c) w.put<double>(cls.precision(r, c));
    }
    w.put<double>(cls.ridge);
    w.put<std::uint64_t>(cls.count);
  }
  return w.take();
}

GaussianClassModel decode_gaussian_model(std::string_view bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic(kGaussianMagic, "LGM1");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kGaussianVersion) {
    throw_format("unsupported LGM1 version " + std::to_string(version));
  }
  GaussianClassModel model;
  model.d = r.get<std::uint32_t>("dimension");
  const auto classes = r.get<std::uint32_t>("class count");
  const std::size_t d = model.d;
  if (d == 0) throw_format("LGM1 header declares dimension 0");
  if (r.remaining() / (4 + 8 * (d * d + d + 2)) < classes) {
    throw_format("truncated input at byte offset " + std::to_string(r.offset()));
  }
  for (std::uint32_t c = 0; c < classes; ++c) {
    const auto label = r.get<std::int32_t>("label");
    GaussianClass cls;
    cls.mean.resize(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) cls.mean[static_cast<Eigen::Index>(j)] = r.get<double>("mean");
    cls.precision.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        cls.precision(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            r.get<double>("precision");
      }
    }
    cls.ridge = r.get<double>("ridge");
    cls.count = r.get<std::uint64_t>("count");
    if (!model.classes.emplace(label, std::move(cls)).second) {
      throw_format("duplicate class label " + std::to_string(label) + " in LGM1 file");
    }
  }
  if (!r.at_end()) throw_format("trailing bytes at byte offset " + std::to_string(r.offset()));
  return model;
}

void write_gaussian_model(const GaussianClassModel& model, const std::filesystem::path& path) {
  detail::write_file(path, encode_gaussian_model(model));
}

GaussianClassModel read_gaussian_model(const std::filesystem::path& path) {
  return decode_gaussian_model(detail::read_file(path));
}

std::uint32_t ClassConditionedHm::dim() const {
  return classes.empty() ? 0 : classes.begin()->second.dim();
}

ClassConditionedHm fit_class_hm(const EmbeddingDataset& ds, const HmHyperParams& params,
                                const HmFitOptions& options) {
  validate(ds);
  validate(params);
  ClassConditionedHm model;
  for (const auto& [label, rows] : rows_by_class(ds)) {
    HmHyperParams per_class = params;
    per_class.seed = derive_seed(params.seed, static_cast<std::uint64_t>(label));
    model.classes.emplace(label, fit_hm(to_points(ds, rows), per_class, options));
  }
  if (model.classes.empty()) throw_validation("no classes to fit");
  return model;
}

double score_class_hm(const ClassConditionedHm& model, std::span<const double> emb,
                      std::int32_t y_hat) {
  const auto it = model.classes.find(y_hat);
  if (it == model.classes.end()) {
    throw_validation("predicted class " + std::to_string(y_hat) + " unknown to the model");
  }
  return 0.0 - score_hm(it->second, emb);
}

void write_class_hm(const ClassConditionedHm& model, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw_io("cannot create model directory " + dir.string() + ": " + ec.message());
  nlohmann::json manifest;
  manifest["format"] = "class-conditioned-lhm1";
  manifest["version"] = kClassHmVersion;
  manifest["d"] = model.dim();
  manifest["classes"] = nlohmann::json::array();
  for (const auto& [label, hm] : model.classes) {
    const std::string file = "class_" + std::to_string(label) + ".lhm1";
    write_hm_model(hm, dir / file);
    manifest["classes"].push_back({{"label", label}, {"file", file}, {"fit_size", hm.fit_size()}});
  }
  detail::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

ClassConditionedHm read_class_hm(const std::filesystem::path& dir) {
  const auto text = detail::read_file(dir / "manifest.json");
  const auto manifest = nlohmann::json::parse(text, nullptr, false);
  if (manifest.is_discarded() || !manifest.is_object() || !manifest.contains("classes") ||
      manifest.value("format", "") != "class-conditioned-lhm1") {
    throw_format("malformed class model manifest in " + dir.string());
  }
  ClassConditionedHm model;
  for (const auto& entry : manifest["classes"]) {
    const auto label = entry.at("label").get<std::int32_t>();
    auto hm = read_hm_model(dir / entry.at("file").get<std::string>());
    if (!model.classes.empty() && hm.dim() != model.dim()) {
      throw_format("class models in " + dir.string() + " disagree on dimension");
    }
    model.classes.emplace(label, std::move(hm));
  }
  if (model.classes.empty()) throw_format("class model manifest lists no classes");
  return model;
}

double score_lm(const TokenLogProbRecord& rec) {
  double total = 0.0;
  for (double lp : rec.logps) total += lp;
  return 0.0 - total;
}

ScoreTable score_dataset(const ClassConditionedHm& model, const EmbeddingDataset& ds,
                         unsigned threads) {
  check_records_scoreable(model.classes, model.dim(), ds);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    if (ds.records[i].tag != Tag::train) rows.push_back(i);
  }
  ScoreTable table;
  table.entries.resize(rows.size());
  parallel_for(rows.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& r = ds.records[rows[i]];
      table.entries[i] = ScoreEntry{r.id, score_class_hm(model, as_vector(r.emb), r.y_hat),
                                    r.tag == Tag::adversarial};
    }
  });
  return table;
}

ScoreTable score_dataset(const GaussianClassModel& model, const EmbeddingDataset& ds) {
  check_records_scoreable(model.classes, model.d, ds);
  ScoreTable table;
  for (const auto& r : ds.records) {
    if (r.tag == Tag::train) continue;
    table.entries.push_back(ScoreEntry{r.id, score_mahalanobis(model, as_vector(r.emb), r.y_hat),
                                       r.tag == Tag::adversarial});
  }
  return table;
}

}  // namespace hmdetect
