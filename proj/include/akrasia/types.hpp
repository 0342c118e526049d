#pragma once

// Core domain types shared by every module: bank items, prompt conditions,
// decoding regimes.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "akrasia/common.hpp"

namespace akrasia {

// ---------------------------------------------------------------------------
// Items.

enum class Kind { fact, arithmetic, misconception };

inline std::string to_string(Kind k) {
  switch (k) {
    case Kind::fact: return "fact";
    case Kind::arithmetic: return "arithmetic";
    case Kind::misconception: return "misconception";
  }
  throw Error("unreachable Kind");
}

inline Kind kind_from_string(const std::string& s) {
  if (s == "fact") return Kind::fact;
  if (s == "arithmetic") return Kind::arithmetic;
  if (s == "misconception") return Kind::misconception;
  throw ValidationError("unknown item kind: " + s);
}

enum class Source { wikidata_seed, generated_arithmetic, misconception_seed };

inline std::string to_string(Source s) {
  switch (s) {
    case Source::wikidata_seed: return "wikidata_seed";
    case Source::generated_arithmetic: return "generated_arithmetic";
    case Source::misconception_seed: return "misconception_seed";
  }
  throw Error("unreachable Source");
}

inline Source source_from_string(const std::string& s) {
  if (s == "wikidata_seed") return Source::wikidata_seed;
  if (s == "generated_arithmetic") return Source::generated_arithmetic;
  if (s == "misconception_seed") return Source::misconception_seed;
  throw ValidationError("unknown provenance source: " + s);
}

struct Provenance {
  Source source = Source::wikidata_seed;
  std::string detail;
};

// One bank entry. `templates` is always fully materialized (all six condition
// variants present) by the time an Item leaves the bank builder, so a
// serialized bank is self-contained.
struct Item {
  std::string id;
  Kind kind = Kind::fact;
  std::string question;
  std::string canonical_answer;
  std::vector<std::string> aliases;  // accepted besides canonical_answer
  std::string decoy;                 // the plausible wrong answer
  Provenance provenance;
  std::map<std::string, std::string> templates;  // variant key -> template
};

struct Bank {
  std::string schema_version = "1";
  std::uint64_t seed = 0;   // seed used for generated items
  std::string created;      // data vintage; fixed by default for reproducibility
  std::vector<Item> items;
};

// ---------------------------------------------------------------------------
// Prompt conditions.

enum class Condition { B, S, T, X };

enum class Temptation { social_proof, decoy_mc, negation };

inline std::string to_string(Temptation t) {
  switch (t) {
    case Temptation::social_proof: return "social_proof";
    case Temptation::decoy_mc: return "decoy_mc";
    case Temptation::negation: return "negation";
  }
  throw Error("unreachable Temptation");
}

inline Temptation temptation_from_string(const std::string& s) {
  if (s == "social_proof") return Temptation::social_proof;
  if (s == "decoy_mc") return Temptation::decoy_mc;
  if (s == "negation") return Temptation::negation;
  throw ValidationError("unknown temptation type: " + s);
}

struct ConditionVariant {
  Condition condition = Condition::B;
  std::optional<Temptation> temptation;  // set iff condition == X

  // Compact key used in template maps, logs, and mock scripts:
  // B, S, T, X_social, X_decoy, X_negation.
  std::string key() const {
    switch (condition) {
      case Condition::B: return "B";
      case Condition::S: return "S";
      case Condition::T: return "T";
      case Condition::X:
        switch (*temptation) {
          case Temptation::social_proof: return "X_social";
          case Temptation::decoy_mc: return "X_decoy";
          case Temptation::negation: return "X_negation";
        }
    }
    throw Error("unreachable ConditionVariant");
  }

  static ConditionVariant from_key(const std::string& key) {
    if (key == "B") return {Condition::B, std::nullopt};
    if (key == "S") return {Condition::S, std::nullopt};
    if (key == "T") return {Condition::T, std::nullopt};
    if (key == "X_social") return {Condition::X, Temptation::social_proof};
    if (key == "X_decoy") return {Condition::X, Temptation::decoy_mc};
    if (key == "X_negation") return {Condition::X, Temptation::negation};
    throw ValidationError("unknown condition variant: " + key);
  }

  bool operator==(const ConditionVariant&) const = default;
};

// All six variant keys in canonical order (baseline first).
inline const std::vector<std::string>& variant_keys() {
  static const std::vector<std::string> keys = {
      "B", "S", "T", "X_social", "X_decoy", "X_negation"};
  return keys;
}

// The five non-baseline keys, in canonical (pre-shuffle) order.
inline const std::vector<std::string>& non_baseline_variant_keys() {
  static const std::vector<std::string> keys = {
      "S", "T", "X_social", "X_decoy", "X_negation"};
  return keys;
}

// ---------------------------------------------------------------------------
// Decoding regimes.

struct DecodingRegime {
  std::string name;
  double temperature = 0.0;
  double top_p = 1.0;      // 1.0 means "not constrained"; omitted on the wire
  int n_samples = 1;
  bool rerank = false;

  // Accepts both the internal name and the CLI spelling ("beam-ish").
  static DecodingRegime named(const std::string& name) {
    if (name == "greedy") return {"greedy", 0.0, 1.0, 1, false};
    if (name == "mild") return {"mild", 0.2, 1.0, 1, false};
    if (name == "exploratory") return {"exploratory", 0.7, 0.9, 1, false};
    if (name == "beam_ish" || name == "beam-ish")
      return {"beam_ish", 0.7, 0.9, 5, true};
    throw ConfigError("unknown decoding regime: " + name +
                      " (expected greedy|mild|exploratory|beam-ish)");
  }

  // Same sampling parameters, single completion, no rerank. Used for baseline
  // trials under beam_ish (a rerank needs a baseline answer to already exist)
  // and for the individual draws inside the rerank itself.
  DecodingRegime single() const {
    DecodingRegime r = *this;
    r.n_samples = 1;
    r.rerank = false;
    return r;
  }
};

}  // namespace akrasia
