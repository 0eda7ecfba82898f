#pragma once

// Little-endian byte packing shared by the LEMB, LHM1 and LGM1 codecs.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <type_traits>

#include "hmdetect/errors.hpp"

namespace hmdetect::detail {

static_assert(std::endian::native == std::endian::little,
              "binary codecs assume a little-endian host");

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    out_.append(raw, sizeof(T));
  }

  void put_bytes(std::string_view bytes) { out_.append(bytes); }

  // u16 length prefix + bytes.
  void put_short_string(std::string_view s, std::string_view field) {
    if (s.size() > 0xFFFF) throw_validation(std::string(field) + " longer than 65535 bytes");
    put<std::uint16_t>(static_cast<std::uint16_t>(s.size()));
    put_bytes(s);
  }

  const std::string& bytes() const { return out_; }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get(std::string_view what) {
    require(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string_view get_bytes(std::size_t n, std::string_view what) {
    require(n, what);
    auto view = bytes_.substr(pos_, n);
    pos_ += n;
    return view;
  }

  std::string get_short_string(std::string_view what) {
    const auto len = get<std::uint16_t>(what);
    return std::string(get_bytes(len, what));
  }

  void expect_magic(std::string_view magic, std::string_view format) {
    const std::size_t at = pos_;
    if (bytes_.size() - pos_ < magic.size() || bytes_.substr(pos_, magic.size()) != magic) {
      throw_format("bad magic at byte offset " + std::to_string(at) + ": not a " +
                   std::string(format) + " file");
    }
    pos_ += magic.size();
  }

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void require(std::size_t n, std::string_view what) {
    if (bytes_.size() - pos_ < n) {
      throw_format("truncated input at byte offset " + std::to_string(pos_) + " reading " +
                   std::string(what) + " (need " + std::to_string(n) + " bytes, have " +
                   std::to_string(bytes_.size() - pos_) + ")");
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace hmdetect::detail
