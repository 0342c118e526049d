#pragma once

// Shared plumbing: error types, deterministic RNG/hashing, number spelling,
// small string/file/time helpers used across the library.

#include <array>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace akrasia {

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data: seed files, banks, templates, logs that violate the schema.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Bad invocation: flags, config files, missing environment variables.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Network-level failure that survived the retry policy.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Credential rejected by the endpoint; never retried.
class AuthError : public Error {
 public:
  using Error::Error;
};

// Structurally unusable payload or log line.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Metric requested over an empty denominator.
class MetricsError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Deterministic RNG and hashing.
//
// Everything that influences persisted artifacts goes through these rather
// than std:: distributions, whose output is implementation-defined; results
// must be reproducible across compilers and standard libraries.

struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Unbiased-enough bounded draw (multiply-shift); n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t mix64(std::uint64_t x) {
  SplitMix64 rng(x);
  return rng.next();
}

// Stable 64-bit hash of a seed plus a string; the basis for per-item seeds,
// run ids, and independent RNG streams.
inline std::uint64_t stable_hash64(std::uint64_t seed, std::string_view text) {
  return mix64(seed ^ fnv1a64(text));
}

inline std::uint64_t stable_hash64(std::uint64_t seed, std::uint64_t n) {
  return mix64(seed ^ mix64(n ^ 0x6a09e667f3bcc909ULL));
}

template <typename T>
void deterministic_shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

// ---------------------------------------------------------------------------
// English number spelling ("56" -> "fifty-six"), used for arithmetic aliases.

inline std::string spell_number(std::uint64_t n) {
  static const std::array<const char*, 20> ones = {
      "zero",    "one",     "two",       "three",    "four",
      "five",    "six",     "seven",     "eight",    "nine",
      "ten",     "eleven",  "twelve",    "thirteen", "fourteen",
      "fifteen", "sixteen", "seventeen", "eighteen", "nineteen"};
  static const std::array<const char*, 10> tens = {
      "",      "",      "twenty",  "thirty", "forty",
      "fifty", "sixty", "seventy", "eighty", "ninety"};

  if (n < 20) return ones[n];
  if (n < 100) {
    std::string out = tens[n / 10];
    if (n % 10) {
      out += '-';
      out += ones[n % 10];
    }
    return out;
  }
  if (n < 1000) {
    std::string out = std::string(ones[n / 100]) + " hundred";
    if (n % 100) out += ' ' + spell_number(n % 100);
    return out;
  }
  if (n < 1000000) {
    std::string out = spell_number(n / 1000) + " thousand";
    if (n % 1000) out += ' ' + spell_number(n % 1000);
    return out;
  }
  return std::to_string(n);  // out of expected range; digits are still valid
}

// Digit-grouped rendering ("1234" -> "1,234").
inline std::string group_digits(std::uint64_t n) {
  std::string digits = std::to_string(n);
  std::string out;
  int since_sep = static_cast<int>(digits.size() % 3);
  if (since_sep == 0) since_sep = 3;
  for (char c : digits) {
    if (since_sep == 0) {
      out += ',';
      since_sep = 3;
    }
    out += c;
    --since_sep;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Small string helpers.

inline bool starts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

inline bool contains(std::string_view s, std::string_view needle) {
  return s.find(needle) != std::string_view::npos;
}

inline std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) words.emplace_back(text.substr(start, i - start));
  }
  return words;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files.

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Full-content-then-rename write so failed commands never leave a partial
// output file behind.
inline void write_file_atomic(const std::filesystem::path& path,
                              std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw ConfigError("cannot create directory " +
                              path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write file: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ConfigError("short write: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw ConfigError("cannot move " + tmp.string() + " over " +
                            path.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Time.

inline std::int64_t now_unix_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

inline std::string iso8601_utc(std::int64_t unix_ms) {
  std::time_t secs = static_cast<std::time_t>(unix_ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec);
  return buf;
}

}  // namespace akrasia
