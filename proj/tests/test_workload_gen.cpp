#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "doctest.h"
#include "tailsieve/evaluation.hpp"
#include "tailsieve/util.hpp"
#include "tailsieve/workload_gen.hpp"

using namespace tailsieve;

namespace {

ScenarioConfig small_cfg() {
  ScenarioConfig cfg;
  cfg.name = "unit";
  cfg.seed = 11;
  cfg.duration_min = 2;
  cfg.qpm = 120;
  cfg.endpoints = 4;
  cfg.variants_per_endpoint = 3;
  cfg.span_min = 2;
  cfg.span_max = 6;
  return cfg;
}

std::string workload_bytes(const GeneratedWorkload& w) {
  std::string out;
  for (const auto& t : w.traces) {
    for (const auto& s : t.spans) {
      out += span_to_jsonl(s);
      out += '\n';
    }
  }
  for (const auto& r : w.truth) {
    out += ground_truth_to_jsonl(r);
    out += '\n';
  }
  for (const auto& a : w.alarms.windows) {
    out += alarm_to_jsonl(a);
    out += '\n';
  }
  return out;
}

std::unordered_map<std::string, const Trace*> by_id(const GeneratedWorkload& w) {
  std::unordered_map<std::string, const Trace*> out;
  for (const auto& t : w.traces) out.emplace(t.trace_id, &t);
  return out;
}

bool has_level(const Span& s, LogLevel level) {
  return std::any_of(s.logs.begin(), s.logs.end(),
                     [&](const LogEvent& e) { return e.level == level; });
}

size_t count_root(const GeneratedWorkload& w, const EndpointKey& key) {
  size_t n = 0;
  for (const auto& t : w.traces) {
    if (root_endpoint(t) == key) ++n;
  }
  return n;
}

}  // namespace

TEST_SUITE("workload_gen") {
  TEST_CASE("generation is reproducible and seed-sensitive") {
    auto cfg = small_cfg();
    cfg.blind_spot_fraction = 0.05;
    cfg.faults.push_back({FaultKind::kStatusError, 1, 0.0, 1.0, 0.5, true});
    const std::string once = workload_bytes(generate_workload(cfg));
    CHECK(once == workload_bytes(generate_workload(cfg)));
    cfg.seed = 12;
    CHECK(once != workload_bytes(generate_workload(cfg)));
  }

  TEST_CASE("a fault-free run emits qpm times duration traces in completion order") {
    auto w = generate_workload(small_cfg());
    CHECK(w.traces.size() == 240);
    CHECK(w.truth.size() == 240);
    CHECK(w.alarms.windows.empty());

    std::unordered_set<std::string> ids;
    int64_t prev_end = 0;
    for (size_t i = 0; i < w.traces.size(); ++i) {
      CHECK(ids.insert(w.traces[i].trace_id).second);
      CHECK(w.truth[i].trace_id == w.traces[i].trace_id);
      CHECK_FALSE(w.truth[i].anomalous);
      CHECK_FALSE(w.truth[i].fault.has_value());
      const int64_t end = trace_end_ns(w.traces[i]);
      CHECK(end >= prev_end);
      prev_end = end;
    }
  }

  TEST_CASE("traffic follows the zipf skew and status faults hit the hottest endpoint") {
    auto cfg = small_cfg();
    cfg.faults.push_back({FaultKind::kStatusError, 0, 0.0, 2.0, 1.0, true});
    auto w = generate_workload(cfg);

    REQUIRE(w.alarms.windows.size() == 1);
    REQUIRE(w.alarms.windows[0].endpoints.size() == 1);
    const EndpointKey hottest = w.alarms.windows[0].endpoints[0];
    CHECK(w.alarms.windows[0].start_ns == 0);
    CHECK(w.alarms.windows[0].end_ns == 2 * 60'000'000'000LL);

    // rank 0 of the zipf order carries the most traffic
    std::map<EndpointKey, size_t> counts;
    for (const auto& t : w.traces) ++counts[root_endpoint(t)];
    CHECK(counts.size() == 4);
    for (const auto& [key, n] : counts) CHECK(counts[hottest] >= n);
    size_t min_count = w.traces.size();
    for (const auto& [key, n] : counts) min_count = std::min(min_count, n);
    CHECK(counts[hottest] >= 2 * min_count);

    // intensity 1 over the whole run flips every trace of that endpoint
    for (size_t i = 0; i < w.traces.size(); ++i) {
      const bool on_endpoint = root_endpoint(w.traces[i]) == hottest;
      CHECK(w.truth[i].anomalous == on_endpoint);
      if (on_endpoint) {
        CHECK(w.truth[i].fault == std::string("status_error"));
        CHECK(root_span(w.traces[i]).status == SpanStatus::kError);
      } else {
        CHECK(root_span(w.traces[i]).status == SpanStatus::kOk);
      }
    }
  }

  TEST_CASE("traffic drops thin the target endpoint and leave survivors untouched") {
    auto base_cfg = small_cfg();
    auto baseline = generate_workload(base_cfg);

    auto cfg = small_cfg();
    cfg.faults.push_back({FaultKind::kTrafficDrop, 0, 0.0, 2.0, 0.5, true});
    auto w = generate_workload(cfg);
    const EndpointKey target = w.alarms.windows[0].endpoints[0];

    const size_t eligible = count_root(baseline, target);
    const auto removed = static_cast<size_t>(std::floor(0.5 * static_cast<double>(eligible) + 1e-9));
    CHECK(w.traces.size() == baseline.traces.size() - removed);
    CHECK(count_root(w, target) == eligible - removed);

    // survivors keep their baseline identity and content
    auto base_ids = by_id(baseline);
    for (const auto& t : w.traces) {
      auto it = base_ids.find(t.trace_id);
      REQUIRE(it != base_ids.end());
      CHECK(t.spans == it->second->spans);
    }
  }

  TEST_CASE("log-only faults keep statuses green while planting error logs") {
    auto baseline = generate_workload(small_cfg());
    auto cfg = small_cfg();
    cfg.faults.push_back({FaultKind::kErrorLogOnly, 1, 0.0, 2.0, 1.0, false});
    auto w = generate_workload(cfg);
    auto base_ids = by_id(baseline);

    size_t mutated = 0;
    for (size_t i = 0; i < w.traces.size(); ++i) {
      const Trace& t = w.traces[i];
      for (const auto& s : t.spans) CHECK(s.status == SpanStatus::kOk);
      if (!w.truth[i].fault) continue;
      ++mutated;
      CHECK(w.truth[i].fault == std::string("error_log_only"));
      const Span& root = root_span(t);
      const Span& before = root_span(*base_ids.at(t.trace_id));
      CHECK(root.duration_ns == before.duration_ns);  // latency stays normal
      CHECK(root.logs.size() == before.logs.size() + 3);
      CHECK(has_level(root, LogLevel::kError));
      CHECK(has_level(root, LogLevel::kWarn));
    }
    CHECK(mutated > 0);
  }

  TEST_CASE("latency faults triple the root duration and change nothing else") {
    auto baseline = generate_workload(small_cfg());
    auto cfg = small_cfg();
    cfg.faults.push_back({FaultKind::kLatencyInflation, 0, 0.0, 2.0, 0.5, false});
    auto w = generate_workload(cfg);
    auto base_ids = by_id(baseline);

    size_t mutated = 0;
    for (size_t i = 0; i < w.traces.size(); ++i) {
      const Span& root = root_span(w.traces[i]);
      const Span& before = root_span(*base_ids.at(w.traces[i].trace_id));
      if (w.truth[i].fault) {
        ++mutated;
        CHECK(w.truth[i].fault == std::string("latency_inflation"));
        CHECK(root.duration_ns == 3 * before.duration_ns);
        CHECK(root.logs.size() == before.logs.size());
        CHECK(root.status == SpanStatus::kOk);
      } else {
        CHECK(root.duration_ns == before.duration_ns);
      }
    }
    CHECK(mutated > 0);
  }

  TEST_CASE("blind spots claim the configured share of healthy traffic") {
    auto cfg = small_cfg();
    cfg.blind_spot_fraction = 0.1;
    auto w = generate_workload(cfg);

    size_t flagged = 0;
    for (size_t i = 0; i < w.traces.size(); ++i) {
      bool has_error_log = false;
      for (const auto& s : w.traces[i].spans) {
        CHECK(s.status == SpanStatus::kOk);
        if (has_level(s, LogLevel::kError)) has_error_log = true;
      }
      // error-level logs appear exactly on the labeled traces
      CHECK(w.truth[i].fault.has_value() == has_error_log);
      CHECK(w.truth[i].anomalous == has_error_log);
      if (w.truth[i].fault) {
        ++flagged;
        CHECK(w.truth[i].fault == std::string("error_log_only"));
      }
    }
    CHECK(flagged == 24);  // floor(240 * 0.1)
  }

  TEST_CASE("generator classes agree with the analysis-side canonicalization") {
    auto w = generate_workload(small_cfg());

    std::unordered_map<uint32_t, std::string> path_of;
    for (size_t i = 0; i < w.traces.size(); ++i) {
      const std::string path = canonical_path(w.traces[i]);
      auto [it, fresh] = path_of.emplace(w.truth[i].path_id, path);
      if (!fresh) CHECK(it->second == path);
    }

    // same generator pattern class -> same event-pair set
    auto index = CorpusIndex::build(w.traces);
    std::unordered_map<uint32_t, uint32_t> pattern_of;
    for (size_t i = 0; i < w.traces.size(); ++i) {
      const uint32_t got = index.by_trace_id(w.traces[i].trace_id).pattern_id;
      auto [it, fresh] = pattern_of.emplace(w.truth[i].pattern_id, got);
      if (!fresh) CHECK(it->second == got);
    }
  }

  TEST_CASE("serialized corpus parses back to the same traces") {
    auto w = generate_workload(small_cfg());
    std::string text;
    size_t span_count = 0;
    for (const auto& t : w.traces) {
      for (const auto& s : t.spans) {
        text += span_to_jsonl(s);
        text += '\n';
        ++span_count;
      }
    }
    std::istringstream in(text);
    std::vector<ParseDiagnostic> diags;
    auto parsed = parse_trace_stream(in, &diags);
    CHECK(diags.empty());
    REQUIRE(parsed.size() == w.traces.size());
    size_t parsed_spans = 0;
    for (size_t i = 0; i < parsed.size(); ++i) {
      CHECK(parsed[i].trace_id == w.traces[i].trace_id);
      CHECK(parsed[i].spans.size() == w.traces[i].spans.size());
      parsed_spans += parsed[i].spans.size();
    }
    CHECK(parsed_spans == span_count);
  }

  TEST_CASE("scenario json round trips") {
    auto cfg = small_cfg();
    cfg.blind_spot_fraction = 0.02;
    cfg.zipf_s = 1.4;
    cfg.faults.push_back({FaultKind::kStatusError, 0, 0.5, 1.0, 0.25, true});
    cfg.faults.push_back({FaultKind::kTrafficDrop, 2, 1.0, 2.0, 0.8, false});

    auto back = scenario_from_json(scenario_to_json(cfg));
    CHECK(back.name == cfg.name);
    CHECK(back.seed == cfg.seed);
    CHECK(back.duration_min == cfg.duration_min);
    CHECK(back.qpm == cfg.qpm);
    CHECK(back.endpoints == cfg.endpoints);
    CHECK(back.zipf_s == cfg.zipf_s);
    CHECK(back.variants_per_endpoint == cfg.variants_per_endpoint);
    CHECK(back.span_min == cfg.span_min);
    CHECK(back.span_max == cfg.span_max);
    CHECK(back.blind_spot_fraction == cfg.blind_spot_fraction);
    REQUIRE(back.faults.size() == 2);
    CHECK(back.faults[0].kind == FaultKind::kStatusError);
    CHECK(back.faults[0].intensity == 0.25);
    CHECK(back.faults[0].emits_alarm);
    CHECK(back.faults[1].kind == FaultKind::kTrafficDrop);
    CHECK(back.faults[1].endpoint_index == 2);
  }

  TEST_CASE("broken scenario json is rejected") {
    CHECK_THROWS_AS(scenario_from_json("not json"), ConfigError);
    CHECK_THROWS_AS(scenario_from_json("[1,2]"), ConfigError);
    CHECK_THROWS_AS(scenario_from_json(R"({"qpm":"lots"})"), ConfigError);
    CHECK_THROWS_AS(scenario_from_json(R"({"qpm":0})"), ConfigError);
    CHECK_THROWS_AS(scenario_from_json(R"({"faults":[{"kind":"nope"}]})"), ConfigError);
    CHECK_THROWS_AS(scenario_from_json(R"({"faults":[{"endpoint_index":0}]})"), ConfigError);
  }

  TEST_CASE("config validation names each broken field") {
    ScenarioConfig cfg;
    cfg.qpm = 0;
    cfg.endpoints = 0;
    cfg.span_min = 9;
    cfg.span_max = 3;
    cfg.blind_spot_fraction = 1.5;
    CHECK(cfg.validate().size() == 4);

    ScenarioConfig bad_fault = small_cfg();
    bad_fault.faults.push_back({FaultKind::kStatusError, 99, 1.5, 1.0, 2.0, false});
    auto errors = bad_fault.validate();
    CHECK(errors.size() == 3);  // endpoint range, window order, intensity
    CHECK_THROWS_AS(generate_workload(bad_fault), ConfigError);
  }

  TEST_CASE("presets validate and carry their faults") {
    CHECK(preset_names() == std::vector<std::string>{"steady", "blindspot", "outage", "latency"});
    for (const auto& name : preset_names()) {
      auto cfg = preset_scenario(name);
      CHECK(cfg.name == name);
      CHECK(cfg.validate().empty());
    }
    CHECK(preset_scenario("steady").faults.empty());
    CHECK(preset_scenario("steady").variants_per_endpoint == 14);
    auto blind = preset_scenario("blindspot");
    REQUIRE(blind.faults.size() == 1);
    CHECK(blind.faults[0].kind == FaultKind::kErrorLogOnly);
    CHECK(blind.faults[0].emits_alarm);
    auto outage = preset_scenario("outage");
    CHECK(outage.qpm == 600);
    CHECK(outage.faults.size() == 5);
    CHECK(outage.faults[0].kind == FaultKind::kStatusError);
    auto latency = preset_scenario("latency");
    REQUIRE(latency.faults.size() == 1);
    CHECK(latency.faults[0].kind == FaultKind::kLatencyInflation);
    CHECK_THROWS_AS(preset_scenario("wat"), ConfigError);
  }

  TEST_CASE("ground truth lines round trip") {
    GroundTruthRecord rec{"t01", true, "latency_inflation", 3, 2};
    std::string error;
    auto back = parse_ground_truth_line(ground_truth_to_jsonl(rec), &error);
    REQUIRE(back.has_value());
    CHECK(back->trace_id == "t01");
    CHECK(back->anomalous);
    CHECK(back->fault == std::string("latency_inflation"));
    CHECK(back->pattern_id == 3);
    CHECK(back->path_id == 2);

    GroundTruthRecord clean{"t02", false, std::nullopt, 0, 0};
    back = parse_ground_truth_line(ground_truth_to_jsonl(clean), &error);
    REQUIRE(back.has_value());
    CHECK_FALSE(back->anomalous);
    CHECK_FALSE(back->fault.has_value());

    CHECK_FALSE(parse_ground_truth_line("nope", &error).has_value());
    CHECK_FALSE(parse_ground_truth_line(R"({"trace_id":"x"})", &error).has_value());
  }

  TEST_CASE("the blind-spot exemplar trace is shaped as documented") {
    const Trace t = blind_spot_motif_trace();
    REQUIRE(t.spans.size() == 5);
    CHECK(root_endpoint(t).str() == "ts-basic-service/queryForTravel");
    for (const auto& s : t.spans) CHECK(s.status == SpanStatus::kOk);

    const Span& root = root_span(t);
    REQUIRE(root.logs.size() == 3);
    CHECK(root.logs[0].level == LogLevel::kError);
    CHECK(root.logs[1].level == LogLevel::kError);
    CHECK(root.logs[2].level == LogLevel::kWarn);
    CHECK(root.logs[0].ts_ns < root.logs[1].ts_ns);
    CHECK(root.logs[1].ts_ns < root.logs[2].ts_ns);

    CHECK(trace_end_ns(t) == 1'200'000'000);
    CHECK(canonical_path(t) ==
          "ts-basic-service/queryForTravel("
          "ts-price-service/queryPrice(ts-station-service/queryStation),"
          "ts-route-service/queryRoute(ts-travel-service/queryTravel))");
  }
}
