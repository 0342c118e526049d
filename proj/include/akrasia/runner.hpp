#pragma once

// Suite execution. Per item: baseline trial first; if the baseline is judged
// correct (or --run-excluded is set) the five remaining variants follow in a
// per-item seeded order. Items run concurrently; trials stream to a JSONL log
// as they finish and the log is rewritten sorted by (bank order, order index)
// before the summary record, so the persisted artifact is independent of
// scheduling.

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "akrasia/common.hpp"
#include "akrasia/conditions.hpp"
#include "akrasia/item_bank.hpp"
#include "akrasia/judge.hpp"
#include "akrasia/model_client.hpp"
#include "akrasia/types.hpp"

namespace akrasia {

inline constexpr std::string_view kRunLogSchemaVersion = "1";

// Per-item seed: every render decision and the variant order derive from it,
// so a rerun of the same (master seed, bank) is reproducible trial-for-trial.
inline std::uint64_t item_seed(std::uint64_t master_seed, const std::string& item_id) {
  return stable_hash64(master_seed, item_id);
}

enum class ItemStatus { completed, excluded_b_incorrect, aborted };

inline std::string to_string(ItemStatus s) {
  switch (s) {
    case ItemStatus::completed: return "completed";
    case ItemStatus::excluded_b_incorrect: return "excluded_b_incorrect";
    case ItemStatus::aborted: return "aborted";
  }
  throw Error("unreachable ItemStatus");
}

struct Trial {
  std::string run_id;
  std::string item_id;
  ConditionVariant variant;
  std::string regime;
  std::string prompt;
  std::string raw_output;
  std::string normalized_answer;
  Verdict verdict;
  int order_index = 0;
  std::int64_t timestamp_ms = 0;
  int latency_ms = 0;
  int attempt = 1;
  std::optional<int> beam_chosen_index;
};

struct RunHeader {
  std::string run_id;
  std::string model_id;
  std::string regime;
  std::string bank_path;
  std::string bank_hash;
  std::uint64_t master_seed = 0;
  std::string started;
  bool run_excluded = false;
  std::string schema_version = std::string(kRunLogSchemaVersion);
};

struct RunSummary {
  std::map<std::string, int> counts;  // status -> item count
  std::vector<std::string> aborted_items;
  std::int64_t wall_ms = 0;
};

struct ItemResult {
  ItemStatus status = ItemStatus::completed;
  std::vector<Trial> trials;
};

struct RunLog {
  RunHeader header;
  std::vector<Trial> trials;
  RunSummary summary;
};

// ---------------------------------------------------------------------------
// JSONL serialization.

inline json trial_to_json(const Trial& t) {
  json obj = {
      {"record", "trial"},
      {"run_id", t.run_id},
      {"item_id", t.item_id},
      {"variant", t.variant.key()},
      {"regime", t.regime},
      {"prompt", t.prompt},
      {"raw_output", t.raw_output},
      {"normalized_answer", t.normalized_answer},
      {"verdict", to_string(t.verdict.value)},
      {"matched_alias",
       t.verdict.matched_alias ? json(*t.verdict.matched_alias) : json(nullptr)},
      {"decoy_mentioned", t.verdict.decoy_mentioned},
      {"order_index", t.order_index},
      {"timestamp", t.timestamp_ms},
      {"latency_ms", t.latency_ms},
      {"attempt", t.attempt},
  };
  if (t.beam_chosen_index) obj["beam_chosen_index"] = *t.beam_chosen_index;
  return obj;
}

inline Trial trial_from_json(const json& obj) {
  Trial t;
  t.run_id = obj.at("run_id").get<std::string>();
  t.item_id = obj.at("item_id").get<std::string>();
  t.variant = ConditionVariant::from_key(obj.at("variant").get<std::string>());
  t.regime = obj.at("regime").get<std::string>();
  t.prompt = obj.at("prompt").get<std::string>();
  t.raw_output = obj.at("raw_output").get<std::string>();
  t.normalized_answer = obj.at("normalized_answer").get<std::string>();
  t.verdict.value = verdict_value_from_string(obj.at("verdict").get<std::string>());
  if (obj.contains("matched_alias") && !obj.at("matched_alias").is_null()) {
    t.verdict.matched_alias = obj.at("matched_alias").get<std::string>();
  }
  t.verdict.decoy_mentioned = obj.at("decoy_mentioned").get<bool>();
  t.order_index = obj.at("order_index").get<int>();
  t.timestamp_ms = obj.at("timestamp").get<std::int64_t>();
  t.latency_ms = obj.at("latency_ms").get<int>();
  t.attempt = obj.at("attempt").get<int>();
  if (obj.contains("beam_chosen_index")) {
    t.beam_chosen_index = obj.at("beam_chosen_index").get<int>();
  }
  return t;
}

inline json header_to_json(const RunHeader& h) {
  return json{{"record", "header"},
              {"run_id", h.run_id},
              {"model_id", h.model_id},
              {"regime", h.regime},
              {"bank_path", h.bank_path},
              {"bank_hash", h.bank_hash},
              {"master_seed", h.master_seed},
              {"started", h.started},
              {"run_excluded", h.run_excluded},
              {"schema_version", h.schema_version}};
}

inline RunHeader header_from_json(const json& obj) {
  RunHeader h;
  h.run_id = obj.at("run_id").get<std::string>();
  h.model_id = obj.at("model_id").get<std::string>();
  h.regime = obj.at("regime").get<std::string>();
  h.bank_path = obj.at("bank_path").get<std::string>();
  h.bank_hash = obj.at("bank_hash").get<std::string>();
  h.master_seed = obj.at("master_seed").get<std::uint64_t>();
  h.started = obj.at("started").get<std::string>();
  h.run_excluded = obj.at("run_excluded").get<bool>();
  h.schema_version = obj.at("schema_version").get<std::string>();
  return h;
}

inline json summary_to_json(const RunSummary& s) {
  return json{{"record", "summary"},
              {"counts", s.counts},
              {"aborted_items", s.aborted_items},
              {"wall_ms", s.wall_ms}};
}

inline RunSummary summary_from_json(const json& obj) {
  RunSummary s;
  s.counts = obj.at("counts").get<std::map<std::string, int>>();
  s.aborted_items = obj.at("aborted_items").get<std::vector<std::string>>();
  s.wall_ms = obj.at("wall_ms").get<std::int64_t>();
  return s;
}

inline std::string serialize_run_log(const RunLog& log) {
  std::string out = header_to_json(log.header).dump() + "\n";
  for (const Trial& t : log.trials) out += trial_to_json(t).dump() + "\n";
  out += summary_to_json(log.summary).dump() + "\n";
  return out;
}

inline RunLog read_run_log(const std::filesystem::path& path) {
  std::string content = read_file(path);
  RunLog log;
  bool have_header = false, have_summary = false;

  std::size_t pos = 0;
  int line_no = 0;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    std::string_view line(content.data() + pos,
                          (eol == std::string::npos ? content.size() : eol) - pos);
    ++line_no;
    pos = eol == std::string::npos ? content.size() : eol + 1;
    if (line.empty()) continue;

    auto fail = [&](const std::string& what) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      fail(std::string("invalid JSON: ") + e.what());
    }
    std::string record = obj.value("record", "");
    try {
      if (record == "header") {
        if (have_header) fail("duplicate header record");
        log.header = header_from_json(obj);
        have_header = true;
      } else if (record == "trial") {
        if (!have_header) fail("trial before header record");
        if (have_summary) fail("trial after summary record");
        log.trials.push_back(trial_from_json(obj));
      } else if (record == "summary") {
        if (!have_header) fail("summary before header record");
        if (have_summary) fail("duplicate summary record");
        log.summary = summary_from_json(obj);
        have_summary = true;
      } else {
        fail("unknown record type '" + record + "'");
      }
    } catch (const json::exception& e) {
      fail(std::string("schema violation: ") + e.what());
    }
  }
  if (!have_header) throw ParseError(path.string() + ": missing header record");
  if (!have_summary) throw ParseError(path.string() + ": missing summary record");
  return log;
}

// ---------------------------------------------------------------------------
// Execution.

namespace detail {

inline std::string normalized_answer_of(const Item& item, const std::string& raw) {
  if (item.kind == Kind::arithmetic) {
    std::vector<long long> ints = extract_integers(raw);
    return ints.empty() ? std::string() : std::to_string(ints.back());
  }
  return normalize(raw);
}

}  // namespace detail

inline std::string derive_run_id(const std::string& model_id,
                                 const std::string& regime,
                                 std::uint64_t master_seed,
                                 const std::string& bank_hash) {
  std::uint64_t h = stable_hash64(master_seed, model_id + "\x1f" + regime +
                                                   "\x1f" + bank_hash);
  return hex64(h);
}

// Runs all trials for one item. Non-baseline variants execute in an order
// shuffled by a stream derived from the item seed; under a rerank regime they
// go through beam_ish_complete with the recorded baseline answer while the
// baseline trial itself is a single completion at the regime's sampling
// parameters.
inline ItemResult run_item(Model& model, const Item& item,
                           const DecodingRegime& regime,
                           std::uint64_t seed_for_item, bool run_excluded,
                           const std::string& run_id) {
  ItemResult result;

  auto record = [&](const RenderedPrompt& prompt, const CompletionResult& cr,
                    int order_index, std::optional<int> beam_index) {
    Trial t;
    t.run_id = run_id;
    t.item_id = item.id;
    t.variant = prompt.variant;
    t.regime = regime.name;
    t.prompt = prompt.text;
    t.raw_output = cr.text;
    t.normalized_answer = detail::normalized_answer_of(item, cr.text);
    t.verdict = judge(cr.text, item);
    t.order_index = order_index;
    t.timestamp_ms = now_unix_ms();
    t.latency_ms = cr.latency_ms;
    t.attempt = cr.attempt;
    t.beam_chosen_index = beam_index;
    result.trials.push_back(std::move(t));
    return result.trials.back().verdict.value == VerdictValue::correct;
  };

  RenderedPrompt b_prompt = render(item, ConditionVariant::from_key("B"),
                                   seed_for_item);
  bool b_correct = false;
  try {
    CompletionResult cr = model.complete(
        b_prompt.text, regime.single(), TrialKey{item.id, "B"});
    b_correct = record(b_prompt, cr, 0, std::nullopt);
  } catch (const TransportError&) {
    result.status = ItemStatus::aborted;
    return result;
  }

  if (!b_correct) result.status = ItemStatus::excluded_b_incorrect;
  if (!b_correct && !run_excluded) return result;

  std::vector<std::string> order = non_baseline_variant_keys();
  SplitMix64 order_rng(stable_hash64(seed_for_item, "variant-order"));
  deterministic_shuffle(order, order_rng);

  const std::string baseline_answer =
      result.trials.front().raw_output;
  int order_index = 0;
  for (const std::string& key : order) {
    ++order_index;
    RenderedPrompt prompt =
        render(item, ConditionVariant::from_key(key), seed_for_item);
    try {
      if (regime.rerank) {
        BeamOutcome beam = beam_ish_complete(model, prompt.text, regime, item,
                                             baseline_answer,
                                             TrialKey{item.id, key});
        record(prompt, beam.chosen, order_index, beam.chosen_index);
      } else {
        CompletionResult cr = model.complete(prompt.text, regime.single(),
                                             TrialKey{item.id, key});
        record(prompt, cr, order_index, std::nullopt);
      }
    } catch (const TransportError&) {
      result.status = ItemStatus::aborted;
      return result;
    }
  }
  return result;
}

struct RunOptions {
  std::uint64_t master_seed = 0;
  bool run_excluded = false;
  int concurrency = 4;
  std::string out_path;          // empty: do not persist
  std::string bank_path_label;   // recorded in the header
  std::function<void(int done, int total)> progress;
};

inline RunLog run_suite(Model& model, const Bank& bank,
                        const DecodingRegime& regime, const RunOptions& options) {
  if (bank.items.empty()) throw ValidationError("bank is empty");
  if (options.concurrency < 1) throw ConfigError("concurrency must be >= 1");

  auto wall_start = std::chrono::steady_clock::now();
  std::string bank_hash = hex64(fnv1a64(serialize_bank(bank)));

  RunLog log;
  log.header.run_id = derive_run_id(model.id(), regime.name,
                                    options.master_seed, bank_hash);
  log.header.model_id = model.id();
  log.header.regime = regime.name;
  log.header.bank_path = options.bank_path_label;
  log.header.bank_hash = bank_hash;
  log.header.master_seed = options.master_seed;
  log.header.started = iso8601_utc(now_unix_ms());
  log.header.run_excluded = options.run_excluded;

  // Streaming sink: trials land in the log file as items finish so a crashed
  // run still leaves evidence; the file is rewritten in deterministic order
  // on success.
  std::ofstream stream;
  std::mutex stream_mu;
  if (!options.out_path.empty()) {
    std::filesystem::path out(options.out_path);
    if (out.has_parent_path()) {
      std::error_code ec;
      std::filesystem::create_directories(out.parent_path(), ec);
    }
    stream.open(out, std::ios::binary | std::ios::trunc);
    if (!stream) throw ConfigError("cannot write run log: " + options.out_path);
    stream << header_to_json(log.header).dump() << "\n" << std::flush;
  }

  std::vector<ItemResult> results(bank.items.size());
  std::atomic<std::size_t> next{0};
  std::atomic<int> done{0};
  std::mutex error_mu;
  std::exception_ptr fatal;

  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= bank.items.size()) return;
      {
        std::lock_guard<std::mutex> lock(error_mu);
        if (fatal) return;
      }
      try {
        results[i] = run_item(model, bank.items[i], regime,
                              item_seed(options.master_seed, bank.items[i].id),
                              options.run_excluded, log.header.run_id);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!fatal) fatal = std::current_exception();
        return;
      }
      if (stream.is_open()) {
        std::lock_guard<std::mutex> lock(stream_mu);
        for (const Trial& t : results[i].trials) {
          stream << trial_to_json(t).dump() << "\n";
        }
        stream << std::flush;
      }
      int completed = done.fetch_add(1) + 1;
      if (options.progress) {
        options.progress(completed, static_cast<int>(bank.items.size()));
      }
    }
  };

  int n_workers = std::min<int>(options.concurrency,
                                static_cast<int>(bank.items.size()));
  std::vector<std::thread> workers;
  workers.reserve(n_workers);
  for (int i = 0; i < n_workers; ++i) workers.emplace_back(worker);
  for (std::thread& w : workers) w.join();
  if (fatal) {
    if (stream.is_open()) stream.close();
    std::rethrow_exception(fatal);
  }

  for (std::size_t i = 0; i < results.size(); ++i) {
    ++log.summary.counts[to_string(results[i].status)];
    if (results[i].status == ItemStatus::aborted) {
      log.summary.aborted_items.push_back(bank.items[i].id);
    }
    for (Trial& t : results[i].trials) log.trials.push_back(std::move(t));
  }
  for (const std::string& status :
       {"completed", "excluded_b_incorrect", "aborted"}) {
    log.summary.counts.emplace(status, 0);
  }
  log.summary.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - wall_start)
                            .count();

  if (stream.is_open()) {
    stream.close();
    write_file_atomic(options.out_path, serialize_run_log(log));
  }
  return log;
}

}  // namespace akrasia
