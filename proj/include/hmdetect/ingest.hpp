#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hmdetect/types.hpp"

namespace hmdetect {

enum class Tag : std::uint8_t { train = 0, clean = 1, adversarial = 2 };

std::string_view to_string(Tag tag);
Tag parse_tag(std::string_view text);

struct EmbeddingRecord {
  std::string id;
  std::optional<std::int32_t> y;  // ground truth; absent on unlabeled test data
  std::int32_t y_hat = 0;          // predicted class, always present
  Tag tag = Tag::train;
  std::vector<float> emb;

  bool operator==(const EmbeddingRecord&) const = default;
};

struct EmbeddingDataset {
  std::uint32_t d = 0;
  std::string layer_tag;  // which network layer produced emb, e.g. "L" or "L+1"
  std::vector<EmbeddingRecord> records;

  bool operator==(const EmbeddingDataset&) const = default;

  // Distinct ground-truth labels among records that carry one.
  std::set<std::int32_t> class_set() const;
};

// Throws ValidationError naming the first offending record.
void validate(const EmbeddingDataset& ds);

enum class DatasetFormat { binary, jsonl };

// ".jsonl" selects JSONL, anything else the LEMB binary format.
DatasetFormat format_for_path(const std::filesystem::path& path);

EmbeddingDataset read_dataset(const std::filesystem::path& path, DatasetFormat format);
EmbeddingDataset read_dataset(const std::filesystem::path& path);
void write_dataset(const EmbeddingDataset& ds, const std::filesystem::path& path,
                   DatasetFormat format);
void write_dataset(const EmbeddingDataset& ds, const std::filesystem::path& path);

// In-memory codecs behind the file functions.
std::string encode_binary(const EmbeddingDataset& ds);
EmbeddingDataset decode_binary(std::string_view bytes);
std::string encode_jsonl(const EmbeddingDataset& ds);
EmbeddingDataset decode_jsonl(std::string_view text);

// Rows of emb converted to double, optionally restricted to one tag.
Points to_points(const EmbeddingDataset& ds);
Points to_points(const EmbeddingDataset& ds, const std::vector<std::size_t>& rows);

struct TokenLogProbRecord {
  std::string id;
  std::vector<double> logps;    // per-token log-probabilities, all <= 0
  std::optional<Tag> tag;       // optional "tag" key, clean or adversarial
};

std::vector<TokenLogProbRecord> read_logprobs(const std::filesystem::path& path);
std::vector<TokenLogProbRecord> decode_logprobs(std::string_view text);

struct SplitSpec {
  std::uint64_t seed = 0;
  std::size_t n1 = 0;  // attack-source subset
  std::size_t n2 = 0;  // clean-evaluation subset
};

struct Split {
  EmbeddingDataset x1;
  EmbeddingDataset x2;
};

// Draws n1 + n2 distinct records by a seeded partial Fisher-Yates shuffle;
// the first n1 drawn form x1, the next n2 form x2 (re-tagged clean).
Split scenario1_split(const EmbeddingDataset& test_set, const SplitSpec& spec);

}  // namespace hmdetect
