#pragma once

// Deterministic string-level answer grading.
//
// normalize(): compatibility-folds a UTF-8 string down to lowercase ASCII
// tokens (punctuation and unknown codepoints become spaces, common Latin
// diacritics and typographic punctuation are folded, whitespace collapses,
// leading articles drop). judge(): grades a raw model output against an
// item's accepted answers and decoy.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "akrasia/common.hpp"
#include "akrasia/types.hpp"

namespace akrasia {

enum class VerdictValue { correct, incorrect, unparseable };

inline std::string to_string(VerdictValue v) {
  switch (v) {
    case VerdictValue::correct: return "correct";
    case VerdictValue::incorrect: return "incorrect";
    case VerdictValue::unparseable: return "unparseable";
  }
  throw Error("unreachable VerdictValue");
}

inline VerdictValue verdict_value_from_string(const std::string& s) {
  if (s == "correct") return VerdictValue::correct;
  if (s == "incorrect") return VerdictValue::incorrect;
  if (s == "unparseable") return VerdictValue::unparseable;
  throw ValidationError("unknown verdict: " + s);
}

struct Verdict {
  VerdictValue value = VerdictValue::unparseable;
  std::optional<std::string> matched_alias;  // accepted string that matched
  bool decoy_mentioned = false;
};

namespace detail {

// Appends the ASCII fold of one codepoint to out, or a space when the
// codepoint has no letter/digit interpretation we care about. Covers the
// Latin-1 / Latin Extended-A letters that actually occur in bank content,
// typographic punctuation, and fullwidth ASCII; anything else is treated as
// punctuation. Bank content is Latin-script by design, so this targeted fold
// stands in for full Unicode compatibility normalization.
inline void fold_codepoint(std::uint32_t cp, std::string& out) {
  if (cp < 0x80) {
    char c = static_cast<char>(cp);
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      out += ' ';
    }
    return;
  }
  // Fullwidth ASCII block.
  if (cp >= 0xFF01 && cp <= 0xFF5E) {
    fold_codepoint(cp - 0xFF01 + 0x21, out);
    return;
  }
  // Combining diacritical marks vanish (handles decomposed accents).
  if (cp >= 0x300 && cp <= 0x36F) return;
  auto emit = [&out](const char* s) { out += s; };
  switch (cp) {
    // Latin letters with diacritics -> base letters.
    case 0xC0: case 0xC1: case 0xC2: case 0xC3: case 0xC4: case 0xC5:
    case 0xE0: case 0xE1: case 0xE2: case 0xE3: case 0xE4: case 0xE5:
    case 0x100: case 0x101: case 0x102: case 0x103: case 0x104: case 0x105:
      emit("a"); return;
    case 0xC8: case 0xC9: case 0xCA: case 0xCB:
    case 0xE8: case 0xE9: case 0xEA: case 0xEB:
    case 0x112: case 0x113: case 0x116: case 0x117: case 0x118: case 0x119:
    case 0x11A: case 0x11B:
      emit("e"); return;
    case 0xCC: case 0xCD: case 0xCE: case 0xCF:
    case 0xEC: case 0xED: case 0xEE: case 0xEF:
    case 0x12A: case 0x12B: case 0x130: case 0x131:
      emit("i"); return;
    case 0xD2: case 0xD3: case 0xD4: case 0xD5: case 0xD6: case 0xD8:
    case 0xF2: case 0xF3: case 0xF4: case 0xF5: case 0xF6: case 0xF8:
    case 0x14C: case 0x14D:
      emit("o"); return;
    case 0xD9: case 0xDA: case 0xDB: case 0xDC:
    case 0xF9: case 0xFA: case 0xFB: case 0xFC:
    case 0x16A: case 0x16B: case 0x16E: case 0x16F:
      emit("u"); return;
    case 0xDD: case 0xFD: case 0xFF: emit("y"); return;
    case 0xD1: case 0xF1: case 0x143: case 0x144: case 0x147: case 0x148:
      emit("n"); return;
    case 0xC7: case 0xE7: case 0x106: case 0x107: case 0x10C: case 0x10D:
      emit("c"); return;
    case 0x15A: case 0x15B: case 0x15E: case 0x15F: case 0x160: case 0x161:
    case 0x218: case 0x219:
      emit("s"); return;
    case 0x162: case 0x163: case 0x164: case 0x165: case 0x21A: case 0x21B:
      emit("t"); return;
    case 0x179: case 0x17A: case 0x17B: case 0x17C: case 0x17D: case 0x17E:
      emit("z"); return;
    case 0x141: case 0x142: emit("l"); return;
    case 0x110: case 0x111: emit("d"); return;
    case 0x11E: case 0x11F: emit("g"); return;
    case 0x154: case 0x155: case 0x158: case 0x159: emit("r"); return;
    case 0xC6: case 0xE6: emit("ae"); return;
    case 0x152: case 0x153: emit("oe"); return;
    case 0xDF: emit("ss"); return;
    default:
      out += ' ';  // everything else behaves like punctuation
  }
}

// Minimal UTF-8 decoding; malformed bytes degrade to spaces.
inline std::uint32_t decode_utf8(std::string_view s, std::size_t& i) {
  unsigned char c0 = static_cast<unsigned char>(s[i]);
  auto cont = [&s](std::size_t k) {
    return k < s.size() &&
           (static_cast<unsigned char>(s[k]) & 0xC0) == 0x80;
  };
  if (c0 < 0x80) {
    i += 1;
    return c0;
  }
  if ((c0 & 0xE0) == 0xC0 && cont(i + 1)) {
    std::uint32_t cp = (c0 & 0x1Fu) << 6 |
                       (static_cast<unsigned char>(s[i + 1]) & 0x3Fu);
    i += 2;
    return cp;
  }
  if ((c0 & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2)) {
    std::uint32_t cp = (c0 & 0x0Fu) << 12 |
                       (static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 6 |
                       (static_cast<unsigned char>(s[i + 2]) & 0x3Fu);
    i += 3;
    return cp;
  }
  if ((c0 & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
    std::uint32_t cp = (c0 & 0x07u) << 18 |
                       (static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 12 |
                       (static_cast<unsigned char>(s[i + 2]) & 0x3Fu) << 6 |
                       (static_cast<unsigned char>(s[i + 3]) & 0x3Fu);
    i += 4;
    return cp;
  }
  i += 1;
  return ' ';
}

}  // namespace detail

inline std::string normalize(std::string_view text) {
  std::string folded;
  folded.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    detail::fold_codepoint(detail::decode_utf8(text, i), folded);
  }

  std::vector<std::string> tokens = split_words(folded);

  // Drop leading articles (repeatedly, so the result is a fixed point).
  std::size_t start = 0;
  while (start < tokens.size() &&
         (tokens[start] == "the" || tokens[start] == "a" ||
          tokens[start] == "an")) {
    ++start;
  }
  tokens.erase(tokens.begin(),
               tokens.begin() + static_cast<std::ptrdiff_t>(start));

  return join(tokens, " ");
}

// ---------------------------------------------------------------------------
// Integer extraction for arithmetic grading. Digit runs may be grouped by a
// comma or space followed by exactly three digits ("1,234", "1 234"); an
// immediately preceding '-' negates.

inline std::vector<long long> extract_integers(std::string_view s) {
  std::vector<long long> out;
  auto is_digit = [&s](std::size_t k) {
    return k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]));
  };
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(i)) {
      ++i;
      continue;
    }
    bool negative = i > 0 && s[i - 1] == '-' &&
                    (i < 2 || !std::isalnum(static_cast<unsigned char>(s[i - 2])));
    std::string digits;
    while (is_digit(i)) digits += s[i++];
    // Absorb grouped triples.
    while (i < s.size() && (s[i] == ',' || s[i] == ' ') && is_digit(i + 1) &&
           is_digit(i + 2) && is_digit(i + 3) && !is_digit(i + 4)) {
      digits += s.substr(i + 1, 3);
      i += 4;
    }
    if (digits.size() <= 18) {
      long long v = std::stoll(digits);
      out.push_back(negative ? -v : v);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Token-boundary containment over normalized strings. Returns the end offset
// of the LAST occurrence of needle in haystack, if any.

inline std::optional<std::size_t> last_token_match_end(std::string_view haystack,
                                                       std::string_view needle) {
  if (needle.empty()) return std::nullopt;
  std::size_t best = std::string_view::npos;
  std::size_t pos = 0;
  while (true) {
    pos = haystack.find(needle, pos);
    if (pos == std::string_view::npos) break;
    std::size_t end = pos + needle.size();
    bool left_ok = pos == 0 || haystack[pos - 1] == ' ';
    bool right_ok = end == haystack.size() || haystack[end] == ' ';
    if (left_ok && right_ok) best = end;
    pos += 1;
  }
  if (best == std::string_view::npos) return std::nullopt;
  return best;
}

// ---------------------------------------------------------------------------
// Grading.
//
// Arithmetic items: the last integer literal in the raw output is the answer.
// Other items: token-boundary search over the normalized output for the
// accepted answers (canonical + aliases) and the decoy; when both families
// appear, the family whose final occurrence ends rightmost wins (a model that
// mentions the decoy but commits to the right answer is correct). Neither
// family present -> unparseable.

inline Verdict judge(const std::string& raw_output, const Item& item) {
  Verdict v;

  if (item.kind == Kind::arithmetic) {
    std::vector<long long> ints = extract_integers(raw_output);
    long long want = std::stoll(item.canonical_answer);
    long long decoy = std::stoll(item.decoy);
    for (long long x : ints) {
      if (x == decoy) v.decoy_mentioned = true;
    }
    if (ints.empty()) {
      v.value = VerdictValue::unparseable;
      return v;
    }
    if (ints.back() == want) {
      v.value = VerdictValue::correct;
      v.matched_alias = item.canonical_answer;
    } else {
      v.value = VerdictValue::incorrect;
    }
    return v;
  }

  std::string text = normalize(raw_output);

  std::optional<std::size_t> accepted_end;
  std::string accepted_match;
  auto consider = [&](const std::string& original) {
    std::string needle = normalize(original);
    if (needle.empty()) return;
    if (auto end = last_token_match_end(text, needle)) {
      if (!accepted_end || *end > *accepted_end) {
        accepted_end = end;
        accepted_match = original;
      }
    }
  };
  consider(item.canonical_answer);
  for (const std::string& alias : item.aliases) consider(alias);

  std::optional<std::size_t> decoy_end =
      last_token_match_end(text, normalize(item.decoy));
  v.decoy_mentioned = decoy_end.has_value();

  if (accepted_end && (!decoy_end || *accepted_end >= *decoy_end)) {
    v.value = VerdictValue::correct;
    v.matched_alias = accepted_match;
  } else if (decoy_end) {
    v.value = VerdictValue::incorrect;
  } else {
    v.value = VerdictValue::unparseable;
  }
  return v;
}

}  // namespace akrasia
