#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <set>

#include "fixtures.hpp"
#include "hmdetect/errors.hpp"
#include "hmdetect/ingest.hpp"

using namespace hmdetect;

namespace {

std::set<std::string> ids(const EmbeddingDataset& ds) {
  std::set<std::string> out;
  for (const auto& r : ds.records) out.insert(r.id);
  return out;
}

EmbeddingDataset numbered(std::size_t n) {
  EmbeddingDataset ds;
  ds.d = 2;
  for (std::size_t i = 0; i < n; ++i) {
    ds.records.push_back({"id" + std::to_string(i), 0, 0, Tag::clean,
                          {static_cast<float>(i), 0.5f}});
  }
  return ds;
}

}  // namespace

TEST_CASE("reads a hand-written three-record JSONL file") {
  const std::string text =
      R"({"id":"a","y":0,"y_hat":0,"tag":"train","emb":[1,2,3,4]})"
      "\n"
      R"({"id":"b","y":null,"y_hat":1,"tag":"clean","emb":[0.5,0,0,-1]})"
      "\n"
      R"({"id":"c","y":1,"y_hat":1,"tag":"adversarial","emb":[1e-3,2,3,4.25]})"
      "\n";
  const auto ds = decode_jsonl(text);
  CHECK(ds.d == 4);
  REQUIRE(ds.records.size() == 3);
  CHECK(ds.records[1].y == std::nullopt);
  CHECK(ds.records[2].tag == Tag::adversarial);
  CHECK(ds.records[2].emb[3] == 4.25f);
  CHECK(ds.class_set() == std::set<std::int32_t>{0, 1});
}

TEST_CASE("binary row shorter than the declared dimension is a truncation error") {
  EmbeddingDataset ds;
  ds.d = 8;
  ds.records.push_back({"r0", 1, 1, Tag::train, std::vector<float>(8, 1.0f)});
  auto bytes = encode_binary(ds);
  bytes.resize(bytes.size() - sizeof(float));  // drop the 8th float
  try {
    decode_binary(bytes);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
  }
}

TEST_CASE("non-finite values are rejected naming the record") {
  SUBCASE("JSONL NaN token") {
    const std::string text = R"({"id":"bad-one","y":0,"y_hat":0,"tag":"train","emb":[1,NaN]})";
    try {
      decode_jsonl(text);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("bad-one") != std::string::npos);
    }
  }
  SUBCASE("binary NaN") {
    EmbeddingDataset ds;
    ds.d = 2;
    ds.records.push_back({"ok", 0, 0, Tag::train, {1.0f, 2.0f}});
    auto bytes = encode_binary(ds);
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(bytes.data() + bytes.size() - sizeof(float), &nan, sizeof(float));
    CHECK_THROWS_AS(decode_binary(bytes), ValidationError);
  }
  SUBCASE("value overflowing float32") {
    const std::string text = R"({"id":"x","y":0,"y_hat":0,"tag":"train","emb":[1e39]})";
    CHECK_THROWS_AS(decode_jsonl(text), ValidationError);
  }
}

TEST_CASE("malformed inputs report format errors") {
  CHECK_THROWS_AS(decode_binary("LEMX"), FormatError);
  CHECK_THROWS_WITH_AS(decode_jsonl("{\"id\":\"a\",\"emb\":[1]"), doctest::Contains("byte offset"),
                       FormatError);
  CHECK_THROWS_AS(decode_jsonl(R"({"id":"a","y_hat":0,"tag":"bogus","emb":[1]})"), FormatError);
  // dimension mismatch between records
  CHECK_THROWS_AS(decode_jsonl("{\"id\":\"a\",\"y_hat\":0,\"emb\":[1,2]}\n"
                               "{\"id\":\"b\",\"y_hat\":0,\"emb\":[1]}\n"),
                  ValidationError);
  // y_hat is required
  CHECK_THROWS_AS(decode_jsonl(R"({"id":"a","emb":[1]})"), ValidationError);
  CHECK_THROWS_AS(decode_jsonl(R"({"id":"a","y_hat":0,"emb":[1]})"
                               "\n"
                               R"({"id":"a","y_hat":0,"emb":[2]})"),
                  ValidationError);
}

TEST_CASE("write rejects an empty record list") {
  EmbeddingDataset ds;
  ds.d = 3;
  CHECK_THROWS_AS(encode_binary(ds), ValidationError);
  CHECK_THROWS_AS(encode_jsonl(ds), ValidationError);
}

TEST_CASE("binary round trip of 0.1 is bitwise exact float32") {
  EmbeddingDataset ds;
  ds.d = 1;
  ds.records.push_back({"a", std::nullopt, 0, Tag::clean, {0.1f}});
  const auto back = decode_binary(encode_binary(ds));
  std::uint32_t before, after;
  std::memcpy(&before, &ds.records[0].emb[0], 4);
  std::memcpy(&after, &back.records[0].emb[0], 4);
  CHECK(before == after);
}

TEST_CASE("round trip identity in both formats (property)") {
  hmdetect::Rng rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    auto ds = fixtures::random_dataset(1 + rng.below(30), 1 + static_cast<std::uint32_t>(rng.below(12)),
                                       rng.next());
    ds.layer_tag = trial % 2 ? "L+1" : "";
    // Arbitrary finite float32 bit patterns exercise shortest-decimal output.
    for (auto& r : ds.records) {
      for (auto& v : r.emb) {
        float f;
        do {
          const auto bits = static_cast<std::uint32_t>(rng.next());
          std::memcpy(&f, &bits, 4);
        } while (!std::isfinite(f));
        v = f;
      }
    }
    CHECK(decode_binary(encode_binary(ds)) == ds);
    CHECK(decode_jsonl(encode_jsonl(ds)) == ds);
  }
}

TEST_CASE("file round trip picks the format from the extension") {
  const auto dir = fixtures::temp_dir("ingest_files");
  const auto ds = fixtures::random_dataset(12, 5, 1);
  write_dataset(ds, dir / "a.lemb");
  write_dataset(ds, dir / "a.jsonl");
  CHECK(read_dataset(dir / "a.lemb") == ds);
  CHECK(read_dataset(dir / "a.jsonl") == ds);
  CHECK_THROWS_AS(read_dataset(dir / "missing.lemb"), IoError);
}

TEST_CASE("scenario1_split draws disjoint, deterministic subsets") {
  const auto ds = numbered(10);
  const auto a = scenario1_split(ds, {7, 4, 4});
  const auto b = scenario1_split(ds, {7, 4, 4});
  CHECK(a.x1.records.size() == 4);
  CHECK(a.x2.records.size() == 4);
  CHECK(a.x1 == b.x1);
  CHECK(a.x2 == b.x2);
  std::set<std::string> both = ids(a.x1);
  for (const auto& id : ids(a.x2)) CHECK(both.insert(id).second);
  for (const auto& r : a.x2.records) CHECK(r.tag == Tag::clean);

  const auto c = scenario1_split(ds, {8, 4, 4});
  CHECK((ids(c.x1) != ids(a.x1) || ids(c.x2) != ids(a.x2)));
  std::set<std::string> both_c = ids(c.x1);
  for (const auto& id : ids(c.x2)) CHECK(both_c.insert(id).second);
}

TEST_CASE("scenario1_split rejects oversize requests") {
  const auto ds = numbered(10);
  CHECK_THROWS_WITH_AS(scenario1_split(ds, {7, 6, 6}), doctest::Contains("exceed"), ValidationError);
  CHECK_THROWS_AS(scenario1_split(ds, {7, 0, 3}), ValidationError);
}

TEST_CASE("scenario1_split disjointness over random sizes (property)") {
  hmdetect::Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(60);
    const std::size_t n1 = 1 + rng.below(n - 1);
    const std::size_t n2 = 1 + rng.below(n - n1);
    const auto ds = numbered(n);
    const SplitSpec spec{rng.next(), n1, n2};
    const auto s = scenario1_split(ds, spec);
    REQUIRE(s.x1.records.size() == n1);
    REQUIRE(s.x2.records.size() == n2);
    auto all = ids(s.x1);
    for (const auto& id : ids(s.x2)) REQUIRE(all.insert(id).second);
    CHECK(scenario1_split(ds, spec).x1 == s.x1);
  }
}

TEST_CASE("read_logprobs validates entries") {
  const auto recs = decode_logprobs(R"({"id":"a","logps":[-1.0,-2.0]})");
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].logps == std::vector<double>{-1.0, -2.0});
  CHECK_THROWS_AS(decode_logprobs(R"({"id":"a","logps":[-1.0,0.5]})"), ValidationError);
  CHECK_THROWS_AS(decode_logprobs(R"({"id":"a","logps":[]})"), ValidationError);
  CHECK_THROWS_AS(decode_logprobs(R"({"id":"a","logps":[NaN]})"), ValidationError);
  CHECK_THROWS_AS(decode_logprobs(R"({"id":"a"})"), FormatError);
  const auto tagged = decode_logprobs(R"({"id":"a","logps":[-1],"tag":"adversarial"})");
  CHECK(tagged[0].tag == Tag::adversarial);
}
