#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "akrasia/item_bank.hpp"
#include "akrasia/metrics.hpp"
#include "akrasia/model_client.hpp"
#include "akrasia/report.hpp"
#include "akrasia/runner.hpp"
#include "test_support.hpp"

using akrasia::compute_metric;
using akrasia::ItemOutcome;
using akrasia::Metric;
using akrasia::MetricsError;
using akrasia::Temptation;

namespace {

ItemOutcome outcome(const std::string& id, bool b, bool s, bool t, bool social,
                    bool decoy, bool negation) {
  ItemOutcome o;
  o.item_id = id;
  o.b_correct = b;
  o.s_correct = s;
  o.t_correct = t;
  o.x_correct[Temptation::social_proof] = social;
  o.x_correct[Temptation::decoy_mc] = decoy;
  o.x_correct[Temptation::negation] = negation;
  return o;
}

// The frozen 20-outcome fixture used for bootstrap regression values.
std::vector<ItemOutcome> frozen_fixture() {
  std::vector<ItemOutcome> outcomes;
  for (int i = 0; i < 20; ++i) {
    outcomes.push_back(outcome("item-" + std::to_string(i), true,
                               !(i == 3 || i == 11 || i == 17), !(i == 5),
                               !(i == 2), !(i == 9 || i == 13), !(i == 19)));
  }
  return outcomes;
}

akrasia::Trial trial(const std::string& item_id, const std::string& variant,
                     akrasia::VerdictValue verdict) {
  akrasia::Trial t;
  t.item_id = item_id;
  t.variant = akrasia::ConditionVariant::from_key(variant);
  t.verdict.value = verdict;
  return t;
}

}  // namespace

TEST_CASE("fold_outcomes projects trials onto per-item outcomes", "[metrics]") {
  using akrasia::VerdictValue;
  akrasia::RunLog log;
  log.trials = {
      trial("i1", "B", VerdictValue::correct),
      trial("i1", "S", VerdictValue::correct),
      trial("i1", "T", VerdictValue::correct),
      trial("i1", "X_social", VerdictValue::incorrect),
      trial("i1", "X_decoy", VerdictValue::correct),
      trial("i1", "X_negation", VerdictValue::correct),
      trial("i2", "B", VerdictValue::incorrect),
  };
  auto outcomes = akrasia::fold_outcomes(log);
  REQUIRE(outcomes.size() == 2);
  CHECK(outcomes[0].item_id == "i1");
  CHECK(outcomes[0].b_correct);
  CHECK(outcomes[0].x_correct.at(Temptation::social_proof) == false);
  CHECK(outcomes[0].x_correct.at(Temptation::decoy_mc) == true);
  CHECK(outcomes[0].x_correct.at(Temptation::negation) == true);
  CHECK(outcomes[1].item_id == "i2");
  CHECK_FALSE(outcomes[1].b_correct);
  CHECK_FALSE(outcomes[1].s_correct.has_value());
  CHECK(outcomes[1].x_correct.empty());
}

TEST_CASE("unparseable verdicts fold to incorrect", "[metrics]") {
  using akrasia::VerdictValue;
  akrasia::RunLog log;
  log.trials = {
      trial("i1", "B", VerdictValue::correct),
      trial("i1", "S", VerdictValue::unparseable),
  };
  auto outcomes = akrasia::fold_outcomes(log);
  REQUIRE(outcomes.size() == 1);
  REQUIRE(outcomes[0].s_correct.has_value());
  CHECK(*outcomes[0].s_correct == false);
}

TEST_CASE("IC is the fraction of baseline-correct items retained under "
          "paraphrase", "[metrics]") {
  // 4 B-correct items, S wrong on exactly one: IC = 0.75.
  std::vector<ItemOutcome> outcomes = {
      outcome("a", true, true, true, true, true, true),
      outcome("b", true, false, true, true, true, true),
      outcome("c", true, true, true, true, true, true),
      outcome("d", true, true, true, true, true, true),
      outcome("e", false, false, false, false, false, false),  // gated out
  };
  CHECK(compute_metric(outcomes, Metric::ic) == 0.75);
  CHECK(compute_metric(outcomes, Metric::tc) == 1.0);
  CHECK(compute_metric(outcomes, Metric::crc) == 1.0);
}

TEST_CASE("per-temptation CRCs average into the aggregate CRC", "[metrics]") {
  std::vector<ItemOutcome> outcomes;
  // 6 B-correct items; temptation failures: social none, decoy 1, negation 3.
  for (int i = 0; i < 6; ++i) {
    outcomes.push_back(outcome("i" + std::to_string(i), true, true, true, true,
                               i != 0, i >= 3));
  }
  double social = compute_metric(outcomes, Metric::crc_social);
  double decoy = compute_metric(outcomes, Metric::crc_decoy);
  double negation = compute_metric(outcomes, Metric::crc_negation);
  CHECK(social == 1.0);
  CHECK(decoy == Catch::Approx(5.0 / 6.0));
  CHECK(negation == 0.5);
  CHECK(compute_metric(outcomes, Metric::crc) ==
        Catch::Approx(akrasia::aggregate_crc(social, decoy, negation)));
  CHECK(compute_metric(outcomes, Metric::crc) == Catch::Approx(7.0 / 9.0));
}

TEST_CASE("headline aggregation reproduces the published cross-checks",
          "[metrics]") {
  // Per-temptation retention (social proof, decoy MC, negation) against the
  // published aggregate, for every model x regime row.
  struct Row {
    const char* model;
    const char* regime;
    double social, decoy, negation;
    double published;
  };
  const Row rows[] = {
      {"Qwen2.5 7B", "mild", 0.99, 0.92, 0.96, 0.96},
      {"Llama3.1 8B", "mild", 0.99, 0.83, 0.77, 0.86},
      {"gpt4o-mini", "mild", 1.00, 0.93, 0.90, 0.94},
      {"Qwen2.5 7B", "greedy", 0.99, 0.95, 0.98, 0.97},
      {"Llama3.1 8B", "greedy", 0.99, 0.83, 0.75, 0.86},
      {"gpt4o-mini", "greedy", 1.00, 0.93, 0.91, 0.95},
      {"Qwen2.5 7B", "exploratory", 1.00, 0.94, 0.98, 0.97},
      {"Llama3.1 8B", "exploratory", 0.99, 0.80, 0.70, 0.83},
      {"gpt4o-mini", "exploratory", 1.00, 0.96, 0.90, 0.95},
      {"Qwen2.5 7B", "beam_ish", 0.99, 0.92, 0.97, 0.96},
      {"Llama3.1 8B", "beam_ish", 1.00, 0.83, 0.80, 0.88},
      {"gpt4o-mini", "beam_ish", 1.00, 0.97, 0.90, 0.96},
  };
  for (const Row& row : rows) {
    INFO(row.model << " / " << row.regime);
    double aggregate =
        akrasia::aggregate_crc(row.social, row.decoy, row.negation);
    CHECK(std::abs(aggregate - row.published) <= 0.005);
    CHECK(akrasia::fmt2(aggregate) == akrasia::fmt2(row.published));
  }
}

TEST_CASE("removing a baseline-incorrect outcome changes nothing", "[metrics]") {
  auto with = frozen_fixture();
  with.push_back(outcome("gated", false, false, false, false, false, false));
  auto without = frozen_fixture();
  for (Metric m : {Metric::ic, Metric::tc, Metric::crc, Metric::crc_social,
                   Metric::crc_decoy, Metric::crc_negation}) {
    CHECK(compute_metric(with, m) == compute_metric(without, m));
  }
}

TEST_CASE("point metrics are permutation-invariant", "[metrics]") {
  auto outcomes = frozen_fixture();
  auto shuffled = outcomes;
  std::mt19937 rng(123);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  for (Metric m : {Metric::ic, Metric::tc, Metric::crc}) {
    CHECK(compute_metric(outcomes, m) == compute_metric(shuffled, m));
  }
}

TEST_CASE("metrics stay within the unit interval", "[metrics]") {
  std::mt19937 rng(7);
  std::bernoulli_distribution coin(0.7);
  for (int round = 0; round < 25; ++round) {
    std::vector<ItemOutcome> outcomes;
    bool any_b = false;
    for (int i = 0; i < 30; ++i) {
      bool b = coin(rng);
      any_b = any_b || b;
      outcomes.push_back(outcome("i" + std::to_string(i), b, coin(rng),
                                 coin(rng), coin(rng), coin(rng), coin(rng)));
    }
    if (!any_b) continue;
    for (Metric m : {Metric::ic, Metric::tc, Metric::crc, Metric::crc_social,
                     Metric::crc_decoy, Metric::crc_negation}) {
      double v = compute_metric(outcomes, m);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("zero baseline-correct items is an error, not a zero", "[metrics]") {
  std::vector<ItemOutcome> outcomes = {
      outcome("a", false, false, false, false, false, false),
      outcome("b", false, false, false, false, false, false),
  };
  CHECK_THROWS_AS(compute_metric(outcomes, Metric::ic), MetricsError);
  CHECK_THROWS_AS(akrasia::bootstrap_ci(outcomes, Metric::ic, 100, 1),
                  MetricsError);
  CHECK_THROWS_AS(compute_metric({}, Metric::ic), MetricsError);
}

TEST_CASE("all-correct outcomes give a point interval at 1", "[metrics]") {
  std::vector<ItemOutcome> outcomes;
  for (int i = 0; i < 25; ++i) {
    outcomes.push_back(
        outcome("i" + std::to_string(i), true, true, true, true, true, true));
  }
  for (Metric m : {Metric::ic, Metric::tc, Metric::crc}) {
    auto [lo, hi] = akrasia::bootstrap_ci(outcomes, m, 10000, 9);
    CHECK(lo == 1.0);
    CHECK(hi == 1.0);
  }
}

TEST_CASE("bootstrap intervals are deterministic for a fixed seed and bracket "
          "the point estimate", "[metrics]") {
  auto outcomes = frozen_fixture();
  auto a = akrasia::bootstrap_ci(outcomes, Metric::ic, 2000, 42);
  auto b = akrasia::bootstrap_ci(outcomes, Metric::ic, 2000, 42);
  CHECK(a == b);
  auto c = akrasia::bootstrap_ci(outcomes, Metric::ic, 2000, 43);
  CHECK(a != c);  // different stream, (almost surely) different order stats

  for (Metric m : {Metric::ic, Metric::tc, Metric::crc, Metric::crc_social,
                   Metric::crc_decoy, Metric::crc_negation}) {
    double point = compute_metric(outcomes, m);
    auto [lo, hi] = akrasia::bootstrap_ci(outcomes, m, 2000, 42);
    CHECK(lo <= point);
    CHECK(point <= hi);
  }
}

TEST_CASE("frozen bootstrap regression values", "[metrics]") {
  // Computed once from this exact fixture at seed 42, 10000 replicates, and
  // frozen; any change to the resampling scheme or RNG streams must show up
  // here.
  auto outcomes = frozen_fixture();
  CHECK(compute_metric(outcomes, Metric::ic) == Catch::Approx(0.85).margin(1e-12));

  auto ic = akrasia::bootstrap_ci(outcomes, Metric::ic, 10000, 42);
  CHECK(ic.first == Catch::Approx(0.70).margin(1e-12));
  CHECK(ic.second == Catch::Approx(1.0).margin(1e-12));

  auto tc = akrasia::bootstrap_ci(outcomes, Metric::tc, 10000, 42);
  CHECK(tc.first == Catch::Approx(0.85).margin(1e-12));
  CHECK(tc.second == Catch::Approx(1.0).margin(1e-12));

  auto crc = akrasia::bootstrap_ci(outcomes, Metric::crc, 10000, 42);
  CHECK(crc.first == Catch::Approx(0.8666666666666667).margin(1e-12));
  CHECK(crc.second == Catch::Approx(0.9833333333333334).margin(1e-12));
}

TEST_CASE("interval width shrinks as the item count grows", "[metrics]") {
  // Same slip rate, n=100 vs n=400: the larger sample must give a narrower
  // interval for at least 9 of 10 seeds.
  auto synthesize = [](int n, std::uint64_t seed) {
    std::vector<ItemOutcome> outcomes;
    akrasia::SplitMix64 rng(seed);
    for (int i = 0; i < n; ++i) {
      bool slip = rng.below(10) < 2;  // 20% slip rate on S
      outcomes.push_back(
          outcome("i" + std::to_string(i), true, !slip, true, true, true, true));
    }
    return outcomes;
  };

  int shrank = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto small = synthesize(100, seed);
    auto large = synthesize(400, seed * 1000);
    auto [slo, shi] = akrasia::bootstrap_ci(small, Metric::ic, 2000, seed);
    auto [llo, lhi] = akrasia::bootstrap_ci(large, Metric::ic, 2000, seed);
    if ((lhi - llo) < (shi - slo)) ++shrank;
  }
  CHECK(shrank >= 9);
}

TEST_CASE("compute_report assembles metrics, intervals, and slips", "[metrics]") {
  auto outcomes = frozen_fixture();
  akrasia::MetricsReport report =
      akrasia::compute_report(outcomes, "ModelX", "greedy", 500, 42);
  CHECK(report.model_id == "ModelX");
  CHECK(report.regime == "greedy");
  CHECK(report.n_items == 20);
  CHECK(report.n_b_correct == 20);
  CHECK(report.ic == Catch::Approx(0.85));
  CHECK(report.tc == Catch::Approx(0.95));
  CHECK(report.crc_by_temptation.at(Temptation::social_proof) ==
        Catch::Approx(0.95));
  CHECK(report.crc_by_temptation.at(Temptation::decoy_mc) ==
        Catch::Approx(0.90));
  CHECK(report.crc_by_temptation.at(Temptation::negation) ==
        Catch::Approx(0.95));
  CHECK(report.ci.size() == 6);
  for (const auto& [name, interval] : report.ci) {
    CHECK(interval.first <= interval.second);
  }

  // Slips: every item that failed anything, sorted by id.
  REQUIRE(report.slips.size() == 8);
  CHECK(std::is_sorted(report.slips.begin(), report.slips.end(),
                       [](const akrasia::Slip& a, const akrasia::Slip& b) {
                         return a.item_id < b.item_id;
                       }));
  // Item 3 failed only S.
  bool found = false;
  for (const akrasia::Slip& slip : report.slips) {
    if (slip.item_id == "item-3") {
      found = true;
      CHECK(slip.failed_variants == std::vector<std::string>{"S"});
    }
  }
  CHECK(found);
}

TEST_CASE("report JSON keeps full precision and both identifiers", "[metrics]") {
  auto outcomes = frozen_fixture();
  auto report = akrasia::compute_report(outcomes, "M", "mild", 200, 7);
  akrasia::json j = akrasia::metrics_report_to_json(report);
  CHECK(j.at("model_id") == "M");
  CHECK(j.at("regime") == "mild");
  CHECK(j.at("ic").get<double>() == report.ic);
  CHECK(j.at("crc").get<double>() == report.crc);
  CHECK(j.at("ci").at("ic").at(0).get<double>() == report.ci.at("ic").first);
  CHECK(j.at("replicates").get<int>() == 200);
  CHECK(j.at("bootstrap_seed").get<std::uint64_t>() == 7);
  CHECK(j.at("slips").is_array());
}

TEST_CASE("a full mock run satisfies the aggregate-mean invariant", "[metrics]") {
  akrasia::Bank bank = akrasia::build_bank("", "", 1, 44);
  akrasia::MockModel mock("Mock");
  // Slips on a few scripted items; everything else correct.
  for (const akrasia::Item& item : bank.items) {
    for (const std::string& key : akrasia::variant_keys()) {
      mock.script(item.id, key, item.canonical_answer);
    }
  }
  mock.script("fact-001", "X_decoy", "London");
  mock.script("fact-002", "X_negation", "Kyoto");
  mock.script("fact-003", "S", "Sydney");
  mock.script("misc-001", "B", "black");  // gated out entirely

  akrasia::RunOptions options;
  options.master_seed = 11;
  options.concurrency = 4;
  akrasia::RunLog log = akrasia::run_suite(
      mock, bank, akrasia::DecodingRegime::named("greedy"), options);
  auto outcomes = akrasia::fold_outcomes(log);
  REQUIRE(outcomes.size() == 132);

  double crc = compute_metric(outcomes, Metric::crc);
  double mean = akrasia::aggregate_crc(
      compute_metric(outcomes, Metric::crc_social),
      compute_metric(outcomes, Metric::crc_decoy),
      compute_metric(outcomes, Metric::crc_negation));
  CHECK(crc == Catch::Approx(mean));

  // 131 gated-in items; decoy and negation each lost one.
  CHECK(compute_metric(outcomes, Metric::ic) == Catch::Approx(130.0 / 131.0));
  CHECK(compute_metric(outcomes, Metric::crc_decoy) ==
        Catch::Approx(130.0 / 131.0));
  CHECK(compute_metric(outcomes, Metric::crc_negation) ==
        Catch::Approx(130.0 / 131.0));
  CHECK(compute_metric(outcomes, Metric::crc_social) == 1.0);
}
