#pragma once

// Item bank construction: seed-file loading, deterministic arithmetic item
// generation, validation, and JSON (de)serialization. Bank bytes are a pure
// function of (inputs, seed, created), so rebuilding with identical flags
// yields an identical file.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "akrasia/common.hpp"
#include "akrasia/conditions.hpp"
#include "akrasia/default_seeds.hpp"
#include "akrasia/judge.hpp"
#include "akrasia/types.hpp"

namespace akrasia {

using json = nlohmann::json;

// Fixed data-vintage stamp. A wall-clock default would break the guarantee
// that rebuilding a bank with the same flags reproduces the same bytes, so
// the default is a constant; callers may override it.
inline constexpr std::string_view kDefaultBankCreated = "2026-08-15T00:00:00Z";

inline constexpr int kArithOperandMin = 2;
inline constexpr int kArithOperandMax = 19;

// ---------------------------------------------------------------------------
// Validation.

inline void validate_item(const Item& item) {
  auto fail = [&item](const std::string& what) {
    throw ValidationError("item " + (item.id.empty() ? "<unnamed>" : item.id) +
                          ": " + what);
  };
  if (item.id.empty()) fail("empty id");
  if (item.question.empty()) fail("empty question");
  if (item.canonical_answer.empty()) fail("empty canonical answer");
  if (item.decoy.empty()) fail("empty decoy");

  std::string canon_norm = normalize(item.canonical_answer);
  std::string decoy_norm = normalize(item.decoy);
  if (canon_norm.empty()) fail("canonical answer normalizes to nothing");
  if (decoy_norm.empty()) fail("decoy normalizes to nothing");
  if (decoy_norm == canon_norm) fail("decoy equals canonical answer");
  for (const std::string& alias : item.aliases) {
    if (normalize(alias).empty()) fail("alias '" + alias + "' normalizes to nothing");
    if (normalize(alias) == decoy_norm) fail("decoy appears in alias set");
  }

  validate_templates(item);

  // A paraphrase that renders identically to the baseline is not a rewording.
  if (render(item, ConditionVariant::from_key("S"), 0).text ==
      render(item, ConditionVariant::from_key("B"), 0).text) {
    fail("S template renders identically to B");
  }

  if (item.kind == Kind::arithmetic) {
    std::vector<long long> operands = extract_integers(item.question);
    if (operands.size() != 2) fail("arithmetic question must contain two operands");
    long long want = 0;
    try {
      want = std::stoll(item.canonical_answer);
    } catch (const std::exception&) {
      fail("arithmetic canonical answer is not an integer");
    }
    if (operands[0] * operands[1] != want) {
      fail("canonical answer does not equal the product in the question");
    }
    try {
      (void)std::stoll(item.decoy);
    } catch (const std::exception&) {
      fail("arithmetic decoy is not an integer");
    }
  }
}

inline void validate_bank(const Bank& bank) {
  if (bank.items.empty()) {
    throw ValidationError("bank is empty: no items from any source");
  }
  std::set<std::string> ids;
  for (const Item& item : bank.items) {
    validate_item(item);
    if (!ids.insert(item.id).second) {
      throw ValidationError("duplicate item id: " + item.id);
    }
  }
}

// ---------------------------------------------------------------------------
// Seed-file parsing. One JSON object per line:
//   {"question": ..., "canonical": ..., "decoy": ...,
//    "aliases"?: [...], "paraphrase"?: ..., "templates"?: {...},
//    "detail"?: ..., "id"?: ...}
// Violations reject the whole file with the offending line number.

namespace detail {

inline std::string id_prefix(Kind kind) {
  switch (kind) {
    case Kind::fact: return "fact";
    case Kind::arithmetic: return "arith";
    case Kind::misconception: return "misc";
  }
  throw Error("unreachable Kind");
}

inline std::string padded(int n) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", n);
  return buf;
}

}  // namespace detail

inline std::vector<Item> parse_seed_items(std::string_view content, Kind kind,
                                          const std::string& label,
                                          bool allow_empty = false) {
  Source source = kind == Kind::misconception ? Source::misconception_seed
                                              : Source::wikidata_seed;
  std::vector<Item> items;
  std::set<std::string> seen_ids;

  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= content.size()) {
    std::size_t eol = content.find('\n', pos);
    std::string_view line = content.substr(
        pos, eol == std::string_view::npos ? content.size() - pos : eol - pos);
    ++line_no;
    pos = eol == std::string_view::npos ? content.size() + 1 : eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    bool blank = true;
    for (char c : line) {
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    }
    if (blank) continue;

    auto fail = [&](const std::string& what) {
      throw ValidationError(label + ":" + std::to_string(line_no) + ": " + what);
    };

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      fail(std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) fail("line is not a JSON object");

    static const std::set<std::string> allowed = {
        "id", "question", "canonical", "aliases", "decoy",
        "paraphrase", "templates", "detail"};
    for (const auto& [key, _] : obj.items()) {
      if (!allowed.count(key)) fail("unknown field '" + key + "'");
    }
    auto require_string = [&](const char* key) {
      if (!obj.contains(key) || !obj[key].is_string() ||
          obj[key].get<std::string>().empty()) {
        fail(std::string("missing or empty string field '") + key + "'");
      }
      return obj[key].get<std::string>();
    };

    Item item;
    item.kind = kind;
    item.question = require_string("question");
    item.canonical_answer = require_string("canonical");
    item.decoy = require_string("decoy");
    if (obj.contains("aliases")) {
      if (!obj["aliases"].is_array()) fail("'aliases' must be an array");
      for (const json& a : obj["aliases"]) {
        if (!a.is_string()) fail("'aliases' entries must be strings");
        item.aliases.push_back(a.get<std::string>());
      }
    }
    item.id = obj.contains("id")
                  ? require_string("id")
                  : detail::id_prefix(kind) + "-" +
                        detail::padded(static_cast<int>(items.size()) + 1);
    if (!seen_ids.insert(item.id).second) fail("duplicate id '" + item.id + "'");

    item.templates = default_templates();
    if (obj.contains("templates")) {
      if (!obj["templates"].is_object()) fail("'templates' must be an object");
      for (const auto& [key, value] : obj["templates"].items()) {
        try {
          ConditionVariant::from_key(key);
        } catch (const ValidationError&) {
          fail("unknown template variant '" + key + "'");
        }
        if (!value.is_string()) fail("template values must be strings");
        item.templates[key] = value.get<std::string>();
      }
    }
    if (obj.contains("paraphrase")) {
      if (obj.contains("templates") && obj["templates"].contains("S")) {
        fail("'paraphrase' conflicts with templates.S; provide one");
      }
      item.templates["S"] = require_string("paraphrase");
    }

    item.provenance.source = source;
    item.provenance.detail = obj.contains("detail")
                                 ? require_string("detail")
                                 : label + ":" + std::to_string(line_no);

    try {
      validate_item(item);
    } catch (const ValidationError& e) {
      fail(e.what());
    }
    items.push_back(std::move(item));
  }

  if (items.empty() && !allow_empty) {
    throw ValidationError(label + ": empty seed file (no items)");
  }
  return items;
}

inline std::vector<Item> load_seed_items(const std::filesystem::path& path,
                                         Kind kind, bool allow_empty = false) {
  return parse_seed_items(read_file(path), kind, path.filename().string(),
                          allow_empty);
}

// ---------------------------------------------------------------------------
// Arithmetic generation: count distinct ordered operand pairs from
// [2, 19] x [2, 19], selected by a seeded shuffle of the full pair space, with
// a near-miss decoy (product +/- d, small d != 0) derived per pair.

inline std::vector<Item> generate_arithmetic(std::uint64_t seed, int count) {
  if (count < 0) throw ValidationError("arithmetic count must be >= 0");
  std::vector<std::pair<int, int>> pairs;
  for (int a = kArithOperandMin; a <= kArithOperandMax; ++a) {
    for (int b = kArithOperandMin; b <= kArithOperandMax; ++b) {
      pairs.emplace_back(a, b);
    }
  }
  if (static_cast<std::size_t>(count) > pairs.size()) {
    throw ValidationError(
        "arithmetic operand space exhausted: requested " +
        std::to_string(count) + " items but only " +
        std::to_string(pairs.size()) + " distinct operand pairs exist");
  }
  SplitMix64 rng(stable_hash64(seed, "arith-pairs"));
  deterministic_shuffle(pairs, rng);

  std::vector<Item> items;
  items.reserve(count);
  for (int i = 0; i < count; ++i) {
    auto [a, b] = pairs[i];
    long long product = static_cast<long long>(a) * b;
    std::string pair_label = std::to_string(a) + " × " + std::to_string(b);

    Item item;
    item.id = "arith-" + detail::padded(i + 1);
    item.kind = Kind::arithmetic;
    item.question = "What is " + pair_label + "?";
    item.canonical_answer = std::to_string(product);
    item.aliases.push_back(spell_number(product));
    if (product >= 1000) item.aliases.push_back(group_digits(product));

    std::uint64_t h = stable_hash64(seed, "arith-decoy/" + pair_label);
    long long offset = 1 + static_cast<long long>(h % 5);
    if ((h >> 8) & 1) offset = -offset;
    long long decoy = product + offset;
    if (decoy <= 0) decoy = product - offset;
    item.decoy = std::to_string(decoy);

    item.templates = default_templates();
    item.templates["S"] = "Compute the product of " + std::to_string(a) +
                          " and " + std::to_string(b) + ".";
    item.provenance = {Source::generated_arithmetic, pair_label};

    validate_item(item);
    items.push_back(std::move(item));
  }
  return items;
}

// ---------------------------------------------------------------------------
// Bank assembly. Empty paths select the embedded default seed data; an empty
// *file* contributes zero items (the assembled bank must still be non-empty).

inline Bank build_bank(const std::filesystem::path& fact_path,
                       const std::filesystem::path& misconception_path,
                       std::uint64_t arith_seed, int arith_count,
                       std::string created = std::string(kDefaultBankCreated)) {
  Bank bank;
  bank.seed = arith_seed;
  bank.created = std::move(created);

  std::vector<Item> facts =
      fact_path.empty()
          ? parse_seed_items(default_facts_jsonl(), Kind::fact, "facts.jsonl")
          : load_seed_items(fact_path, Kind::fact, /*allow_empty=*/true);
  std::vector<Item> misconceptions =
      misconception_path.empty()
          ? parse_seed_items(default_misconceptions_jsonl(), Kind::misconception,
                             "misconceptions.jsonl")
          : load_seed_items(misconception_path, Kind::misconception,
                            /*allow_empty=*/true);
  std::vector<Item> arith = generate_arithmetic(arith_seed, arith_count);

  for (auto* source : {&facts, &arith, &misconceptions}) {
    for (Item& item : *source) bank.items.push_back(std::move(item));
  }
  validate_bank(bank);
  return bank;
}

inline std::map<std::string, int> bank_composition(const Bank& bank) {
  std::map<std::string, int> counts;
  for (const Item& item : bank.items) ++counts[to_string(item.kind)];
  return counts;
}

// ---------------------------------------------------------------------------
// JSON serialization.

inline json item_to_json(const Item& item) {
  json t = json::object();
  for (const auto& [key, value] : item.templates) t[key] = value;
  return json{{"id", item.id},
              {"kind", to_string(item.kind)},
              {"question", item.question},
              {"canonical_answer", item.canonical_answer},
              {"aliases", item.aliases},
              {"decoy", item.decoy},
              {"provenance",
               {{"source", to_string(item.provenance.source)},
                {"detail", item.provenance.detail}}},
              {"templates", t}};
}

inline Item item_from_json(const json& obj) {
  if (!obj.is_object()) throw ValidationError("bank item is not an object");
  static const std::set<std::string> allowed = {
      "id", "kind", "question", "canonical_answer",
      "aliases", "decoy", "provenance", "templates"};
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      throw ValidationError("bank item: unknown field '" + key + "'");
    }
  }
  Item item;
  try {
    item.id = obj.at("id").get<std::string>();
    item.kind = kind_from_string(obj.at("kind").get<std::string>());
    item.question = obj.at("question").get<std::string>();
    item.canonical_answer = obj.at("canonical_answer").get<std::string>();
    item.aliases = obj.at("aliases").get<std::vector<std::string>>();
    item.decoy = obj.at("decoy").get<std::string>();
    item.provenance.source =
        source_from_string(obj.at("provenance").at("source").get<std::string>());
    item.provenance.detail = obj.at("provenance").at("detail").get<std::string>();
    for (const auto& [key, value] : obj.at("templates").items()) {
      item.templates[key] = value.get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bank item ") +
                          (item.id.empty() ? "<unnamed>" : item.id) + ": " +
                          e.what());
  }
  return item;
}

inline json bank_to_json(const Bank& bank) {
  json items = json::array();
  for (const Item& item : bank.items) items.push_back(item_to_json(item));
  return json{{"schema_version", bank.schema_version},
              {"seed", bank.seed},
              {"created", bank.created},
              {"items", items}};
}

inline std::string serialize_bank(const Bank& bank) {
  return bank_to_json(bank).dump(2) + "\n";
}

inline Bank bank_from_json(const json& obj) {
  if (!obj.is_object()) throw ValidationError("bank root is not an object");
  Bank bank;
  try {
    bank.schema_version = obj.at("schema_version").get<std::string>();
    bank.seed = obj.at("seed").get<std::uint64_t>();
    bank.created = obj.at("created").get<std::string>();
    for (const json& item : obj.at("items")) {
      bank.items.push_back(item_from_json(item));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bank: ") + e.what());
  }
  if (bank.schema_version != "1") {
    throw ValidationError("unsupported bank schema_version: " +
                          bank.schema_version);
  }
  validate_bank(bank);
  return bank;
}

inline void save_bank(const Bank& bank, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_bank(bank));
}

inline Bank load_bank(const std::filesystem::path& path) {
  json obj;
  try {
    obj = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
  try {
    return bank_from_json(obj);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace akrasia
