#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace hmdetect {

// Lowercase hex SHA-256 of a byte string / of a file's contents.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

// Shortest decimal text that parses back to the same value.
std::string format_double(double v);
std::string format_float(float v);

// Diagnostics go to stderr; 0 = warnings only, 1 = info, 2 = debug.
void set_verbosity(int level);
int verbosity();
void log_warn(std::string_view msg);
void log_info(std::string_view msg);

}  // namespace hmdetect

#include <cstddef>
#include <functional>

namespace hmdetect {

// Calls body(begin, end) over contiguous chunks of [0, n) on up to `threads`
// threads. Runs inline when threads <= 1.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace hmdetect
