#pragma once

// Slip metrics over per-item outcomes.
//
//   IC  = |items correct at B and S| / |items correct at B|
//   TC  = same for T
//   CRC = unweighted mean of the three per-temptation retention fractions
//
// Only items whose baseline was judged correct enter any denominator.
// Confidence intervals come from a cluster bootstrap at the item level:
// whole item-outcome records are resampled with replacement, the metric is
// recomputed per replicate, and the interval is the 2.5th/97.5th percentile
// (nearest-rank order statistics). Replicates that draw zero baseline-correct
// items are redrawn. Each replicate uses an RNG stream derived from
// (seed, replicate index), so results are independent of evaluation order.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "akrasia/common.hpp"
#include "akrasia/runner.hpp"
#include "akrasia/types.hpp"

namespace akrasia {

struct ItemOutcome {
  std::string item_id;
  bool b_correct = false;
  std::optional<bool> s_correct;  // absent for excluded/aborted items
  std::optional<bool> t_correct;
  std::map<Temptation, bool> x_correct;
};

// ---------------------------------------------------------------------------
// Folding a run log into outcomes: one per item with a baseline trial, in
// first-appearance order. Unparseable verdicts count as incorrect.

inline std::vector<ItemOutcome> fold_outcomes(const RunLog& log) {
  std::vector<ItemOutcome> outcomes;
  std::map<std::string, std::size_t> index_of;

  for (const Trial& t : log.trials) {
    auto [it, inserted] = index_of.emplace(t.item_id, outcomes.size());
    if (inserted) {
      ItemOutcome o;
      o.item_id = t.item_id;
      outcomes.push_back(std::move(o));
    }
    ItemOutcome& o = outcomes[it->second];
    bool correct = t.verdict.value == VerdictValue::correct;
    switch (t.variant.condition) {
      case Condition::B:
        o.b_correct = correct;
        break;
      case Condition::S:
        o.s_correct = correct;
        break;
      case Condition::T:
        o.t_correct = correct;
        break;
      case Condition::X:
        o.x_correct[*t.variant.temptation] = correct;
        break;
    }
  }
  return outcomes;
}

// ---------------------------------------------------------------------------
// Point metrics.

enum class Metric { ic, tc, crc, crc_social, crc_decoy, crc_negation };

inline std::string to_string(Metric m) {
  switch (m) {
    case Metric::ic: return "ic";
    case Metric::tc: return "tc";
    case Metric::crc: return "crc";
    case Metric::crc_social: return "crc_social_proof";
    case Metric::crc_decoy: return "crc_decoy_mc";
    case Metric::crc_negation: return "crc_negation";
  }
  throw Error("unreachable Metric");
}

// The CRC aggregation rule: an unweighted mean across the three temptation
// types (not a pooled fraction).
inline double aggregate_crc(double social, double decoy, double negation) {
  return (social + decoy + negation) / 3.0;
}

namespace detail {

// Compact per-item view used by both point estimates and bootstrap
// replicates so the two cannot drift apart. -1 encodes "variant absent".
struct CompactOutcome {
  bool b = false;
  signed char s = -1;
  signed char t = -1;
  std::array<signed char, 3> x = {-1, -1, -1};
};

inline CompactOutcome compact(const ItemOutcome& o) {
  CompactOutcome c;
  c.b = o.b_correct;
  auto enc = [](std::optional<bool> v) {
    return static_cast<signed char>(v ? (*v ? 1 : 0) : -1);
  };
  c.s = enc(o.s_correct);
  c.t = enc(o.t_correct);
  for (const auto& [temptation, correct] : o.x_correct) {
    c.x[static_cast<int>(temptation)] = correct ? 1 : 0;
  }
  return c;
}

// Retention fraction for one variant slot over a selection of outcomes;
// nullopt when no baseline-correct item carries the variant.
template <typename Slot>
std::optional<double> fraction(const std::vector<CompactOutcome>& pool,
                               const std::vector<std::uint32_t>& selection,
                               Slot slot) {
  long long num = 0, den = 0;
  for (std::uint32_t idx : selection) {
    const CompactOutcome& c = pool[idx];
    if (!c.b) continue;
    signed char v = slot(c);
    if (v < 0) continue;
    ++den;
    num += v;
  }
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

inline std::optional<double> metric_over(
    const std::vector<CompactOutcome>& pool,
    const std::vector<std::uint32_t>& selection, Metric metric) {
  switch (metric) {
    case Metric::ic:
      return fraction(pool, selection, [](const CompactOutcome& c) { return c.s; });
    case Metric::tc:
      return fraction(pool, selection, [](const CompactOutcome& c) { return c.t; });
    case Metric::crc_social:
      return fraction(pool, selection,
                      [](const CompactOutcome& c) { return c.x[0]; });
    case Metric::crc_decoy:
      return fraction(pool, selection,
                      [](const CompactOutcome& c) { return c.x[1]; });
    case Metric::crc_negation:
      return fraction(pool, selection,
                      [](const CompactOutcome& c) { return c.x[2]; });
    case Metric::crc: {
      auto social = metric_over(pool, selection, Metric::crc_social);
      auto decoy = metric_over(pool, selection, Metric::crc_decoy);
      auto negation = metric_over(pool, selection, Metric::crc_negation);
      if (!social || !decoy || !negation) return std::nullopt;
      return aggregate_crc(*social, *decoy, *negation);
    }
  }
  throw Error("unreachable Metric");
}

inline std::vector<CompactOutcome> compact_all(
    const std::vector<ItemOutcome>& outcomes) {
  std::vector<CompactOutcome> pool;
  pool.reserve(outcomes.size());
  for (const ItemOutcome& o : outcomes) pool.push_back(compact(o));
  return pool;
}

inline std::vector<std::uint32_t> identity_selection(std::size_t n) {
  std::vector<std::uint32_t> sel(n);
  for (std::size_t i = 0; i < n; ++i) sel[i] = static_cast<std::uint32_t>(i);
  return sel;
}

}  // namespace detail

inline double compute_metric(const std::vector<ItemOutcome>& outcomes,
                             Metric metric) {
  std::optional<double> value =
      detail::metric_over(detail::compact_all(outcomes),
                          detail::identity_selection(outcomes.size()), metric);
  if (!value) {
    throw MetricsError("metric " + to_string(metric) +
                       " is undefined: no baseline-correct item carries the "
                       "required variant");
  }
  return *value;
}

// ---------------------------------------------------------------------------
// Bootstrap.

inline constexpr int kDefaultReplicates = 10000;

inline std::pair<double, double> bootstrap_ci(
    const std::vector<ItemOutcome>& outcomes, Metric metric,
    int replicates = kDefaultReplicates, std::uint64_t seed = 0) {
  if (replicates < 1) throw MetricsError("replicates must be >= 1");
  compute_metric(outcomes, metric);  // throws when undefined on the full set

  std::vector<detail::CompactOutcome> pool = detail::compact_all(outcomes);
  const std::size_t n = pool.size();

  std::vector<double> values;
  values.reserve(replicates);
  std::vector<std::uint32_t> selection(n);
  for (int r = 0; r < replicates; ++r) {
    SplitMix64 rng(stable_hash64(seed, static_cast<std::uint64_t>(r)));
    for (int safety = 0; safety < 10000; ++safety) {
      for (std::size_t i = 0; i < n; ++i) {
        selection[i] = static_cast<std::uint32_t>(rng.below(n));
      }
      std::optional<double> value = detail::metric_over(pool, selection, metric);
      if (value) {
        values.push_back(*value);
        break;
      }
      // Degenerate resample (no usable denominator): redraw this replicate.
    }
    if (values.size() != static_cast<std::size_t>(r) + 1) {
      throw MetricsError("bootstrap could not draw a usable replicate");
    }
  }

  std::sort(values.begin(), values.end());
  auto order_stat = [&values](double q) {
    std::size_t rank = static_cast<std::size_t>(
        std::ceil(q * static_cast<double>(values.size())));
    if (rank == 0) rank = 1;
    return values[rank - 1];
  };
  return {order_stat(0.025), order_stat(0.975)};
}

// ---------------------------------------------------------------------------
// Full report.

struct Slip {
  std::string item_id;
  std::vector<std::string> failed_variants;  // canonical variant order
};

struct MetricsReport {
  std::string model_id;
  std::string regime;
  int n_items = 0;
  int n_b_correct = 0;
  double ic = 0.0;
  double tc = 0.0;
  double crc = 0.0;
  std::map<Temptation, double> crc_by_temptation;
  std::map<std::string, std::pair<double, double>> ci;  // metric name -> (lo, hi)
  std::vector<Slip> slips;
  int replicates = 0;
  std::uint64_t bootstrap_seed = 0;
};

inline std::vector<Slip> find_slips(const std::vector<ItemOutcome>& outcomes) {
  std::vector<Slip> slips;
  for (const ItemOutcome& o : outcomes) {
    if (!o.b_correct) continue;
    Slip slip;
    slip.item_id = o.item_id;
    if (o.s_correct && !*o.s_correct) slip.failed_variants.push_back("S");
    if (o.t_correct && !*o.t_correct) slip.failed_variants.push_back("T");
    for (Temptation t : {Temptation::social_proof, Temptation::decoy_mc,
                         Temptation::negation}) {
      auto it = o.x_correct.find(t);
      if (it != o.x_correct.end() && !it->second) {
        slip.failed_variants.push_back(
            ConditionVariant{Condition::X, t}.key());
      }
    }
    if (!slip.failed_variants.empty()) slips.push_back(std::move(slip));
  }
  std::sort(slips.begin(), slips.end(),
            [](const Slip& a, const Slip& b) { return a.item_id < b.item_id; });
  return slips;
}

inline MetricsReport compute_report(const std::vector<ItemOutcome>& outcomes,
                                    const std::string& model_id,
                                    const std::string& regime,
                                    int replicates = kDefaultReplicates,
                                    std::uint64_t bootstrap_seed = 0) {
  MetricsReport report;
  report.model_id = model_id;
  report.regime = regime;
  report.n_items = static_cast<int>(outcomes.size());
  for (const ItemOutcome& o : outcomes) {
    if (o.b_correct) ++report.n_b_correct;
  }
  report.ic = compute_metric(outcomes, Metric::ic);
  report.tc = compute_metric(outcomes, Metric::tc);
  report.crc = compute_metric(outcomes, Metric::crc);
  report.crc_by_temptation[Temptation::social_proof] =
      compute_metric(outcomes, Metric::crc_social);
  report.crc_by_temptation[Temptation::decoy_mc] =
      compute_metric(outcomes, Metric::crc_decoy);
  report.crc_by_temptation[Temptation::negation] =
      compute_metric(outcomes, Metric::crc_negation);
  for (Metric m : {Metric::ic, Metric::tc, Metric::crc, Metric::crc_social,
                   Metric::crc_decoy, Metric::crc_negation}) {
    report.ci[to_string(m)] = bootstrap_ci(outcomes, m, replicates, bootstrap_seed);
  }
  report.slips = find_slips(outcomes);
  report.replicates = replicates;
  report.bootstrap_seed = bootstrap_seed;
  return report;
}

inline json metrics_report_to_json(const MetricsReport& r) {
  json by_temptation = json::object();
  for (const auto& [temptation, value] : r.crc_by_temptation) {
    by_temptation[to_string(temptation)] = value;
  }
  json ci = json::object();
  for (const auto& [metric, interval] : r.ci) {
    ci[metric] = json::array({interval.first, interval.second});
  }
  json slips = json::array();
  for (const Slip& s : r.slips) {
    slips.push_back(json{{"item_id", s.item_id},
                         {"failed_variants", s.failed_variants}});
  }
  return json{{"model_id", r.model_id},
              {"regime", r.regime},
              {"n_items", r.n_items},
              {"n_b_correct", r.n_b_correct},
              {"ic", r.ic},
              {"tc", r.tc},
              {"crc", r.crc},
              {"crc_by_temptation", by_temptation},
              {"ci", ci},
              {"slips", slips},
              {"replicates", r.replicates},
              {"bootstrap_seed", r.bootstrap_seed}};
}

}  // namespace akrasia
