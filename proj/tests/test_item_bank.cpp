#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "akrasia/conditions.hpp"
#include "akrasia/item_bank.hpp"
#include "akrasia/judge.hpp"
#include "test_support.hpp"

using akrasia::Bank;
using akrasia::Item;
using akrasia::Kind;
using akrasia::ValidationError;

namespace fs = std::filesystem;

namespace {

fs::path write_lines(const fs::path& dir, const std::string& name,
                     const std::string& content) {
  fs::path p = dir / name;
  std::ofstream out(p, std::ios::binary);
  out << content;
  return p;
}

}  // namespace

TEST_CASE("default bank has 132 items, 44 per kind", "[item_bank]") {
  Bank bank = akrasia::build_bank("", "", 1, 44);
  REQUIRE(bank.items.size() == 132);
  auto counts = akrasia::bank_composition(bank);
  CHECK(counts.at("fact") == 44);
  CHECK(counts.at("arithmetic") == 44);
  CHECK(counts.at("misconception") == 44);

  std::set<std::string> ids;
  for (const Item& item : bank.items) ids.insert(item.id);
  CHECK(ids.size() == bank.items.size());
}

TEST_CASE("arithmetic generation is deterministic and prefix-stable",
          "[item_bank]") {
  auto a = akrasia::generate_arithmetic(1, 5);
  auto b = akrasia::generate_arithmetic(1, 5);
  REQUIRE(a.size() == 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].question == b[i].question);
    CHECK(a[i].canonical_answer == b[i].canonical_answer);
    CHECK(a[i].decoy == b[i].decoy);
  }

  // Larger count starts with the same items.
  auto longer = akrasia::generate_arithmetic(1, 44);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(longer[i].question == a[i].question);
  }

  // Different seed, different order.
  auto other = akrasia::generate_arithmetic(2, 44);
  bool any_difference = false;
  for (std::size_t i = 0; i < other.size(); ++i) {
    if (other[i].question != longer[i].question) any_difference = true;
  }
  CHECK(any_difference);
}

TEST_CASE("arithmetic items are self-consistent products", "[item_bank]") {
  for (const Item& item : akrasia::generate_arithmetic(7, 44)) {
    INFO("item=" << item.id << " q=" << item.question);
    auto ints = akrasia::extract_integers(item.question);
    REQUIRE(ints.size() == 2);
    CHECK(ints[0] >= 2);
    CHECK(ints[0] <= 19);
    CHECK(ints[1] >= 2);
    CHECK(ints[1] <= 19);
    CHECK(std::to_string(ints[0] * ints[1]) == item.canonical_answer);
    long long decoy = std::stoll(item.decoy);
    long long product = ints[0] * ints[1];
    CHECK(decoy != product);
    CHECK(std::llabs(decoy - product) <= 5);
    CHECK(decoy > 0);
    // Spelled-out product is always an alias.
    REQUIRE_FALSE(item.aliases.empty());
    CHECK(item.aliases.front() ==
          akrasia::spell_number(static_cast<std::uint64_t>(product)));
  }
}

TEST_CASE("arithmetic pair pool is exhaustible but never repeats",
          "[item_bank]") {
  auto all = akrasia::generate_arithmetic(3, 324);  // 18*18 ordered pairs
  std::set<std::string> questions;
  for (const Item& item : all) questions.insert(item.question);
  CHECK(questions.size() == 324);
  CHECK_THROWS_AS(akrasia::generate_arithmetic(3, 325), ValidationError);
}

TEST_CASE("seed loader reports offending line on schema violations",
          "[item_bank]") {
  fs::path dir = test_support::temp_dir("loader");

  SECTION("missing file") {
    CHECK_THROWS_AS(
        akrasia::load_seed_items(dir / "nope.jsonl", Kind::fact),
        akrasia::Error);
  }

  SECTION("well-formed file loads") {
    auto p = write_lines(
        dir, "ok.jsonl",
        R"({"question":"What is the capital of France?","canonical":"Paris","decoy":"London","paraphrase":"Which city is France's capital?"})"
        "\n");
    auto items = akrasia::load_seed_items(p, Kind::fact);
    REQUIRE(items.size() == 1);
    CHECK(items[0].canonical_answer == "Paris");
    CHECK(items[0].kind == Kind::fact);
    CHECK(items[0].id == "fact-001");
  }

  SECTION("decoy equal to canonical is rejected with the line number") {
    auto p = write_lines(
        dir, "bad.jsonl",
        R"({"question":"Q one?","canonical":"Paris","decoy":"London","paraphrase":"Q1 again?"})"
        "\n"
        R"({"question":"Q two?","canonical":"Paris","decoy":"paris!","paraphrase":"Q2 again?"})"
        "\n");
    try {
      akrasia::load_seed_items(p, Kind::fact);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      std::string msg = e.what();
      INFO(msg);
      CHECK(msg.find(":2") != std::string::npos);  // offending line
      CHECK(msg.find("decoy") != std::string::npos);
    }
  }

  SECTION("invalid JSON names the line") {
    auto p = write_lines(dir, "syntax.jsonl", "{not json}\n");
    try {
      akrasia::load_seed_items(p, Kind::fact);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find(":1") != std::string::npos);
    }
  }

  SECTION("duplicate ids are rejected") {
    auto p = write_lines(
        dir, "dup.jsonl",
        R"({"id":"x","question":"Q one?","canonical":"Alpha","decoy":"Beta","paraphrase":"Q1b?"})"
        "\n"
        R"({"id":"x","question":"Q two?","canonical":"Gamma","decoy":"Delta","paraphrase":"Q2b?"})"
        "\n");
    try {
      akrasia::load_seed_items(p, Kind::fact);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      std::string msg = e.what();
      CHECK(msg.find("duplicate") != std::string::npos);
      CHECK(msg.find(":2") != std::string::npos);
    }
  }

  SECTION("unknown keys are rejected") {
    auto p = write_lines(
        dir, "unknown.jsonl",
        R"({"question":"Q?","canonical":"Alpha","decoy":"Beta","paraphrase":"Qb?","bogus":1})"
        "\n");
    CHECK_THROWS_AS(akrasia::load_seed_items(p, Kind::fact), ValidationError);
  }

  SECTION("empty file is an empty-bank error for a direct load") {
    auto p = write_lines(dir, "empty.jsonl", "");
    CHECK_THROWS_AS(akrasia::load_seed_items(p, Kind::fact), ValidationError);
  }

  fs::remove_all(dir);
}

TEST_CASE("build_bank accepts empty seed files when arithmetic fills the bank",
          "[item_bank]") {
  fs::path dir = test_support::temp_dir("emptyseeds");
  auto facts = write_lines(dir, "facts.jsonl", "");
  auto misc = write_lines(dir, "misc.jsonl", "");
  Bank bank = akrasia::build_bank(facts.string(), misc.string(), 1, 10);
  CHECK(bank.items.size() == 10);
  for (const Item& item : bank.items) CHECK(item.kind == Kind::arithmetic);

  // ...but a bank with no items at all is an error.
  CHECK_THROWS_AS(akrasia::build_bank(facts.string(), misc.string(), 1, 0),
                  ValidationError);
  fs::remove_all(dir);
}

TEST_CASE("bank serialization round-trips byte-identically", "[item_bank]") {
  Bank bank = akrasia::build_bank("", "", 1, 44);
  std::string first = akrasia::serialize_bank(bank);
  Bank again = akrasia::bank_from_json(akrasia::json::parse(first));
  CHECK(akrasia::serialize_bank(again) == first);

  Bank rebuilt = akrasia::build_bank("", "", 1, 44);
  CHECK(akrasia::serialize_bank(rebuilt) == first);
}

TEST_CASE("bank save/load round-trip through disk", "[item_bank]") {
  fs::path dir = test_support::temp_dir("bankio");
  Bank bank = akrasia::build_bank("", "", 5, 12);
  fs::path p = dir / "bank.json";
  akrasia::save_bank(bank, p.string());
  Bank loaded = akrasia::load_bank(p.string());
  CHECK(akrasia::serialize_bank(loaded) == akrasia::serialize_bank(bank));
  fs::remove_all(dir);
}

TEST_CASE("bank rejects wrong schema version", "[item_bank]") {
  Bank bank = akrasia::build_bank("", "", 1, 5);
  akrasia::json j = akrasia::bank_to_json(bank);
  j["schema_version"] = "999";
  CHECK_THROWS_AS(akrasia::bank_from_json(j), ValidationError);
}

TEST_CASE("item validation enforces decoy and template invariants",
          "[item_bank]") {
  Item item = test_support::make_fact("x", "Q?", "Paris", {"Ville Lumiere"},
                                      "London");
  CHECK_NOTHROW(akrasia::validate_item(item));

  SECTION("decoy must differ from canonical after normalization") {
    item.decoy = "  PARIS ";
    CHECK_THROWS_AS(akrasia::validate_item(item), ValidationError);
  }
  SECTION("decoy must not collide with an alias") {
    item.decoy = "ville lumiere";
    CHECK_THROWS_AS(akrasia::validate_item(item), ValidationError);
  }
  SECTION("paraphrase may not render identically to the baseline") {
    item.templates["S"] = "{question}";
    CHECK_THROWS_AS(akrasia::validate_item(item), ValidationError);
  }
  SECTION("every variant template must be present") {
    item.templates.erase("X_decoy");
    CHECK_THROWS_AS(akrasia::validate_item(item), ValidationError);
  }
  SECTION("arithmetic canonical must equal the product in the question") {
    Item arith = test_support::make_arith("a", 7, 8, 2);
    CHECK_NOTHROW(akrasia::validate_item(arith));
    arith.canonical_answer = "57";
    CHECK_THROWS_AS(akrasia::validate_item(arith), ValidationError);
  }
}

TEST_CASE("embedded default seeds equal the files in data/", "[item_bank]") {
  // The build embeds data/*.jsonl into a generated header; both paths must
  // produce the same bank.
  Bank embedded = akrasia::build_bank("", "", 1, 44);
  CHECK(embedded.items.size() == 132);
  CHECK(std::string(akrasia::default_facts_jsonl()).find("capital of France") !=
        std::string::npos);
  CHECK(std::string(akrasia::default_misconceptions_jsonl()).find("black box") !=
        std::string::npos);
}

TEST_CASE("bank items carry provenance by source", "[item_bank]") {
  Bank bank = akrasia::build_bank("", "", 1, 44);
  for (const Item& item : bank.items) {
    switch (item.kind) {
      case Kind::fact:
        CHECK(item.provenance.source == akrasia::Source::wikidata_seed);
        break;
      case Kind::arithmetic:
        CHECK(item.provenance.source == akrasia::Source::generated_arithmetic);
        break;
      case Kind::misconception:
        CHECK(item.provenance.source == akrasia::Source::misconception_seed);
        break;
    }
    CHECK_FALSE(item.provenance.detail.empty());
  }
}
