#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace hmdetect {

// Anomaly scores paired with ground truth. Every scorer in this library
// orients its output so that higher means more anomalous.
struct ScoreEntry {
  std::string id;
  double score = 0.0;
  bool is_adversarial = false;

  bool operator==(const ScoreEntry&) const = default;
};

struct ScoreTable {
  std::vector<ScoreEntry> entries;

  std::size_t positives() const;  // adversarial entries
  std::size_t negatives() const;  // clean entries

  bool operator==(const ScoreTable&) const = default;
};

// CSV with header "id,score,is_adversarial"; flags written as 0/1.
std::string encode_score_csv(const ScoreTable& table);
ScoreTable decode_score_csv(std::string_view text);
void write_score_table(const ScoreTable& table, const std::filesystem::path& path);
ScoreTable read_score_table(const std::filesystem::path& path);

}  // namespace hmdetect
