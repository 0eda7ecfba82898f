#pragma once

#include <filesystem>
#include <string>

#include "hmdetect/ingest.hpp"
#include "hmdetect/rng.hpp"
#include "hmdetect/types.hpp"

namespace fixtures {

inline hmdetect::Points gaussian(std::size_t n, std::size_t d, std::uint64_t seed,
                                 double shift = 0.0, double scale = 1.0) {
  hmdetect::Rng rng(seed);
  hmdetect::Points p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) p(i, j) = shift + scale * rng.normal();
  }
  return p;
}

inline hmdetect::EmbeddingDataset random_dataset(std::size_t n, std::uint32_t d, std::uint64_t seed,
                                                 int classes = 2) {
  hmdetect::Rng rng(seed);
  hmdetect::EmbeddingDataset ds;
  ds.d = d;
  ds.layer_tag = "L";
  for (std::size_t i = 0; i < n; ++i) {
    hmdetect::EmbeddingRecord r;
    r.id = "rec-" + std::to_string(i);
    const auto label = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(classes)));
    if (rng.below(4) != 0) r.y = label;
    r.y_hat = label;
    r.tag = static_cast<hmdetect::Tag>(rng.below(3));
    for (std::uint32_t j = 0; j < d; ++j) r.emb.push_back(static_cast<float>(rng.normal() * 3.0));
    ds.records.push_back(std::move(r));
  }
  return ds;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hmdetect_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
