#include "hmdetect/score_table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "binary_io.hpp"
#include "hmdetect/errors.hpp"
#include "hmdetect/util.hpp"

namespace hmdetect {

std::size_t ScoreTable::positives() const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [](const ScoreEntry& e) { return e.is_adversarial; }));
}

std::size_t ScoreTable::negatives() const { return entries.size() - positives(); }

std::string encode_score_csv(const ScoreTable& table) {
  std::string out = "id,score,is_adversarial\n";
  for (const auto& e : table.entries) {
    if (e.id.find_first_of(",\n\r\"") != std::string::npos) {
      throw_validation("record id '" + e.id + "' cannot be written to CSV");
    }
    out += e.id;
    out += ',';
    out += format_double(e.score);
    out += e.is_adversarial ? ",1\n" : ",0\n";
  }
  return out;
}

ScoreTable decode_score_csv(std::string_view text) {
  ScoreTable table;
  std::size_t offset = 0;
  std::size_t line_no = 0;
  while (offset < text.size()) {
    const auto end = std::min(text.find('\n', offset), text.size());
    std::string_view line = text.substr(offset, end - offset);
    offset = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "id,score,is_adversarial") throw_format("score CSV: unexpected header");
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string_view::npos) {
      throw_format("score CSV line " + std::to_string(line_no) + ": expected 3 fields");
    }
    ScoreEntry e;
    e.id = std::string(line.substr(0, c1));
    const auto num = line.substr(c1 + 1, c2 - c1 - 1);
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), e.score);
    if (ec != std::errc() || ptr != num.data() + num.size()) {
      throw_format("score CSV line " + std::to_string(line_no) + ": bad score");
    }
    if (!std::isfinite(e.score)) throw_validation("record '" + e.id + "': non-finite score");
    const auto flag = line.substr(c2 + 1);
    if (flag == "1" || flag == "true") {
      e.is_adversarial = true;
    } else if (flag != "0" && flag != "false") {
      throw_format("score CSV line " + std::to_string(line_no) + ": bad is_adversarial flag");
    }
    table.entries.push_back(std::move(e));
  }
  return table;
}

void write_score_table(const ScoreTable& table, const std::filesystem::path& path) {
  detail::write_file(path, encode_score_csv(table));
}

ScoreTable read_score_table(const std::filesystem::path& path) {
  return decode_score_csv(detail::read_file(path));
}

}  // namespace hmdetect
