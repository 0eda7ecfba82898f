#include "hmdetect/ingest.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "binary_io.hpp"
#include "hmdetect/errors.hpp"
#include "hmdetect/rng.hpp"
#include "hmdetect/util.hpp"

namespace hmdetect {

using nlohmann::json;

namespace detail {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw_io("read failure on " + path.string());
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_io("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw_io("write failure on " + path.string());
}

}  // namespace detail

namespace {

constexpr std::string_view kLembMagic = "LEMB";
constexpr std::uint32_t kLembVersion = 1;
constexpr std::int32_t kAbsentLabel = -1;

// Rewrites bare NaN / Infinity tokens (outside strings) to null so a line
// produced by a lenient serializer can still be attributed to its record id.
std::string neutralize_nonfinite_tokens(std::string_view line) {
  std::string out;
  out.reserve(line.size());
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string) {
      out.push_back(c);
      if (c == '\\' && i + 1 < line.size()) {
        out.push_back(line[++i]);
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
      out.push_back(c);
      continue;
    }
    auto starts = [&](std::string_view token) { return line.substr(i, token.size()) == token; };
    if (starts("-Infinity")) {
      out += "null";
      i += 8;
    } else if (starts("Infinity")) {
      out += "null";
      i += 7;
    } else if (starts("NaN")) {
      out += "null";
      i += 2;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::int32_t checked_label(const json& v, std::string_view field, std::string_view id) {
  if (!v.is_number_integer()) {
    throw_format("record '" + std::string(id) + "': " + std::string(field) + " must be an integer");
  }
  const auto value = v.get<std::int64_t>();
  if (value < 0 || value > INT32_MAX) {
    throw_validation("record '" + std::string(id) + "': " + std::string(field) +
                     " must be a non-negative 32-bit label");
  }
  return static_cast<std::int32_t>(value);
}

}  // namespace

std::string_view to_string(Tag tag) {
  switch (tag) {
    case Tag::train: return "train";
    case Tag::clean: return "clean";
    case Tag::adversarial: return "adversarial";
  }
  return "?";
}

Tag parse_tag(std::string_view text) {
  if (text == "train") return Tag::train;
  if (text == "clean") return Tag::clean;
  if (text == "adversarial") return Tag::adversarial;
  throw_format("unknown tag '" + std::string(text) + "'");
}

std::set<std::int32_t> EmbeddingDataset::class_set() const {
  std::set<std::int32_t> out;
  for (const auto& r : records) {
    if (r.y) out.insert(*r.y);
  }
  return out;
}

void validate(const EmbeddingDataset& ds) {
  if (ds.d == 0) throw_validation("dataset dimension must be >= 1");
  if (ds.records.empty()) throw_validation("dataset has no records");
  std::unordered_set<std::string_view> ids;
  for (const auto& r : ds.records) {
    if (r.emb.size() != ds.d) {
      throw_validation("record '" + r.id + "': dimension mismatch (" +
                       std::to_string(r.emb.size()) + " values, dataset d=" +
                       std::to_string(ds.d) + ")");
    }
    for (float v : r.emb) {
      if (!std::isfinite(v)) throw_validation("record '" + r.id + "': non-finite embedding value");
    }
    if (r.y_hat < 0) throw_validation("record '" + r.id + "': y_hat must be non-negative");
    if (r.y && *r.y < 0) throw_validation("record '" + r.id + "': y must be non-negative");
    if (!ids.insert(r.id).second) throw_validation("duplicate record id '" + r.id + "'");
  }
}

DatasetFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".jsonl" ? DatasetFormat::jsonl : DatasetFormat::binary;
}

std::string encode_binary(const EmbeddingDataset& ds) {
  validate(ds);
  detail::ByteWriter w;
  w.put_bytes(kLembMagic);
  w.put<std::uint32_t>(kLembVersion);
  w.put<std::uint64_t>(ds.records.size());
  w.put<std::uint32_t>(ds.d);
  w.put_short_string(ds.layer_tag, "layer_tag");
  for (const auto& r : ds.records) {
    w.put_short_string(r.id, "record id");
    w.put<std::int32_t>(r.y.value_or(kAbsentLabel));
    w.put<std::int32_t>(r.y_hat);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(r.tag));
    for (float v : r.emb) w.put<float>(v);
  }
  return w.take();
}

EmbeddingDataset decode_binary(std::string_view bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic(kLembMagic, "LEMB");
  const auto version_at = r.offset();
  const auto version = r.get<std::uint32_t>("version");
  if (version != kLembVersion) {
    throw_format("unsupported LEMB version " + std::to_string(version) + " at byte offset " +
                 std::to_string(version_at));
  }
  const auto count = r.get<std::uint64_t>("record count");
  EmbeddingDataset ds;
  const auto d_at = r.offset();
  ds.d = r.get<std::uint32_t>("dimension");
  if (ds.d == 0) throw_format("dimension 0 at byte offset " + std::to_string(d_at));
  ds.layer_tag = r.get_short_string("layer_tag");
  // Each record needs at least its fixed-size fields; bound the reservation.
  const std::size_t min_record = 2 + 4 + 4 + 1 + 4ull * ds.d;
  if (count > r.remaining() / min_record) {
    throw_format("truncated input: header at byte offset 8 declares " + std::to_string(count) +
                 " records but only " + std::to_string(r.remaining()) + " bytes follow");
  }
  ds.records.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    EmbeddingRecord rec;
    rec.id = r.get_short_string("record id");
    const auto y = r.get<std::int32_t>("y");
    if (y != kAbsentLabel) rec.y = y;
    rec.y_hat = r.get<std::int32_t>("y_hat");
    const auto tag_at = r.offset();
    const auto tag = r.get<std::uint8_t>("tag");
    if (tag > 2) {
      throw_format("invalid tag byte " + std::to_string(tag) + " at byte offset " +
                   std::to_string(tag_at));
    }
    rec.tag = static_cast<Tag>(tag);
    rec.emb.resize(ds.d);
    for (auto& v : rec.emb) v = r.get<float>("embedding of record '" + rec.id + "'");
    ds.records.push_back(std::move(rec));
  }
  if (!r.at_end()) {
    throw_format("trailing bytes at byte offset " + std::to_string(r.offset()));
  }
  validate(ds);
  return ds;
}

std::string encode_jsonl(const EmbeddingDataset& ds) {
  validate(ds);
  std::string out;
  out += json{{"d", ds.d}, {"layer_tag", ds.layer_tag}}.dump();
  out += '\n';
  for (const auto& r : ds.records) {
    out += "{\"id\":";
    out += json(r.id).dump();
    out += ",\"y\":";
    out += r.y ? std::to_string(*r.y) : std::string("null");
    out += ",\"y_hat\":";
    out += std::to_string(r.y_hat);
    out += ",\"tag\":\"";
    out += to_string(r.tag);
    out += "\",\"emb\":[";
    for (std::size_t i = 0; i < r.emb.size(); ++i) {
      if (i) out += ',';
      out += format_float(r.emb[i]);
    }
    out += "]}\n";
  }
  return out;
}

EmbeddingDataset decode_jsonl(std::string_view text) {
  EmbeddingDataset ds;
  bool have_d = false;
  std::size_t offset = 0;
  std::size_t line_no = 0;
  while (offset < text.size()) {
    const auto end = std::min(text.find('\n', offset), text.size());
    const std::string_view line = text.substr(offset, end - offset);
    const std::size_t line_offset = offset;
    offset = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    auto where = [&] {
      return "line " + std::to_string(line_no) + " (byte offset " + std::to_string(line_offset) +
             ")";
    };
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded()) obj = json::parse(neutralize_nonfinite_tokens(line), nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) throw_format("malformed JSON object at " + where());

    if (!obj.contains("id")) {
      // Header line: {"d": ..., "layer_tag": ...}; only valid before any record.
      if (!ds.records.empty() || have_d || !obj.contains("d") || !obj["d"].is_number_unsigned()) {
        throw_format("malformed header at " + where());
      }
      ds.d = obj["d"].get<std::uint32_t>();
      if (ds.d == 0) throw_format("header declares d=0 at " + where());
      if (obj.contains("layer_tag")) ds.layer_tag = obj["layer_tag"].get<std::string>();
      have_d = true;
      continue;
    }

    EmbeddingRecord rec;
    if (!obj["id"].is_string()) throw_format("id must be a string at " + where());
    rec.id = obj["id"].get<std::string>();
    if (!obj.contains("y_hat")) throw_validation("record '" + rec.id + "': missing y_hat");
    rec.y_hat = checked_label(obj["y_hat"], "y_hat", rec.id);
    if (obj.contains("y") && !obj["y"].is_null()) rec.y = checked_label(obj["y"], "y", rec.id);
    rec.tag = obj.contains("tag") ? parse_tag(obj["tag"].get<std::string>()) : Tag::train;
    if (!obj.contains("emb") || !obj["emb"].is_array()) {
      throw_format("record '" + rec.id + "': emb must be an array at " + where());
    }
    const auto& emb = obj["emb"];
    rec.emb.reserve(emb.size());
    for (const auto& v : emb) {
      if (v.is_null()) throw_validation("record '" + rec.id + "': non-finite embedding value");
      if (!v.is_number()) throw_format("record '" + rec.id + "': non-numeric emb entry");
      rec.emb.push_back(static_cast<float>(v.get<double>()));
    }
    if (!have_d) {
      ds.d = static_cast<std::uint32_t>(rec.emb.size());
      have_d = true;
    }
    ds.records.push_back(std::move(rec));
  }
  validate(ds);
  return ds;
}

EmbeddingDataset read_dataset(const std::filesystem::path& path, DatasetFormat format) {
  const std::string bytes = detail::read_file(path);
  return format == DatasetFormat::binary ? decode_binary(bytes) : decode_jsonl(bytes);
}

EmbeddingDataset read_dataset(const std::filesystem::path& path) {
  return read_dataset(path, format_for_path(path));
}

void write_dataset(const EmbeddingDataset& ds, const std::filesystem::path& path,
                   DatasetFormat format) {
  detail::write_file(path, format == DatasetFormat::binary ? encode_binary(ds) : encode_jsonl(ds));
}

void write_dataset(const EmbeddingDataset& ds, const std::filesystem::path& path) {
  write_dataset(ds, path, format_for_path(path));
}

Points to_points(const EmbeddingDataset& ds) {
  std::vector<std::size_t> rows(ds.records.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return to_points(ds, rows);
}

Points to_points(const EmbeddingDataset& ds, const std::vector<std::size_t>& rows) {
  Points out(static_cast<Eigen::Index>(rows.size()), ds.d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& emb = ds.records.at(rows[i]).emb;
    for (std::uint32_t j = 0; j < ds.d; ++j) out(static_cast<Eigen::Index>(i), j) = emb[j];
  }
  return out;
}

std::vector<TokenLogProbRecord> decode_logprobs(std::string_view text) {
  std::vector<TokenLogProbRecord> out;
  std::size_t offset = 0;
  std::size_t line_no = 0;
  while (offset < text.size()) {
    const auto end = std::min(text.find('\n', offset), text.size());
    const std::string_view line = text.substr(offset, end - offset);
    const std::size_t line_offset = offset;
    offset = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded()) obj = json::parse(neutralize_nonfinite_tokens(line), nullptr, false);
    if (obj.is_discarded() || !obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
        !obj.contains("logps") || !obj["logps"].is_array()) {
      throw_format("malformed log-prob record at line " + std::to_string(line_no) +
                   " (byte offset " + std::to_string(line_offset) + ")");
    }
    TokenLogProbRecord rec;
    rec.id = obj["id"].get<std::string>();
    for (const auto& v : obj["logps"]) {
      if (v.is_null()) throw_validation("record '" + rec.id + "': non-finite log-probability");
      if (!v.is_number()) throw_format("record '" + rec.id + "': non-numeric log-probability");
      const double lp = v.get<double>();
      if (!std::isfinite(lp)) throw_validation("record '" + rec.id + "': non-finite log-probability");
      if (lp > 0.0) {
        throw_validation("record '" + rec.id + "': positive log-probability " + format_double(lp));
      }
      rec.logps.push_back(lp);
    }
    if (rec.logps.empty()) throw_validation("record '" + rec.id + "': empty logps");
    if (obj.contains("tag")) {
      const Tag tag = parse_tag(obj["tag"].get<std::string>());
      if (tag == Tag::train) throw_validation("record '" + rec.id + "': log-prob tag must be clean or adversarial");
      rec.tag = tag;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<TokenLogProbRecord> read_logprobs(const std::filesystem::path& path) {
  return decode_logprobs(detail::read_file(path));
}

Split scenario1_split(const EmbeddingDataset& test_set, const SplitSpec& spec) {
  validate(test_set);
  const std::size_t n = test_set.records.size();
  if (spec.n1 < 1 || spec.n2 < 1) throw_validation("split sizes n1 and n2 must be >= 1");
  if (spec.n1 > n || spec.n2 > n - spec.n1) {
    throw_validation("split sizes n1=" + std::to_string(spec.n1) + " + n2=" +
                     std::to_string(spec.n2) + " exceed test set size " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(spec.seed);
  const std::size_t take = spec.n1 + spec.n2;
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(order[i], order[j]);
  }

  Split out;
  for (auto* part : {&out.x1, &out.x2}) {
    part->d = test_set.d;
    part->layer_tag = test_set.layer_tag;
  }
  for (std::size_t i = 0; i < spec.n1; ++i) out.x1.records.push_back(test_set.records[order[i]]);
  for (std::size_t i = spec.n1; i < take; ++i) {
    auto rec = test_set.records[order[i]];
    rec.tag = Tag::clean;
    out.x2.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace hmdetect
