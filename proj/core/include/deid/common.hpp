#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace deid {

/// Malformed or inconsistent input data (bad record files, bad spans, bad
/// model files). The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class SpanBoundsError : public DataError {
 public:
  using DataError::DataError;
};

class OverlapError : public DataError {
 public:
  using DataError::DataError;
};

/// Non-finite objective, divergence, and similar failures (exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// UTF-8 helpers. All character offsets in this project count Unicode scalar
// values, not bytes.
std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view text);
void append_utf8(std::string& out, char32_t cp);

// ASCII-only case folding; other code points pass through unchanged.
std::string to_lower_ascii(std::string_view s);

bool is_ascii_upper(char32_t c);
bool is_ascii_lower(char32_t c);
bool is_ascii_letter(char32_t c);
bool is_ascii_digit(char32_t c);
bool is_space(char32_t c);
/// Punctuation = printable ASCII that is neither a letter nor a digit, plus a
/// few common Unicode dashes and quotes.
bool is_punct(char32_t c);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

std::vector<std::string> split_ws(std::string_view line);
std::string_view trim(std::string_view s);

}  // namespace deid
