#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tailsieve/quota_allocator.hpp"
#include "tailsieve/trace_model.hpp"

namespace tailsieve {

enum class FaultKind { kStatusError, kErrorLogOnly, kLatencyInflation, kTrafficDrop };

const char* to_string(FaultKind kind);
std::optional<FaultKind> parse_fault_kind(std::string_view s);

// One fault campaign against a single endpoint during [start_min, end_min).
// intensity is the fraction of that endpoint's in-window traffic affected
// (for traffic drops: the fraction removed).
struct FaultSpec {
  FaultKind kind = FaultKind::kStatusError;
  size_t endpoint_index = 0;  // rank in the Zipf traffic order, 0 = hottest
  double start_min = 0.0;
  double end_min = 0.0;
  double intensity = 0.0;
  bool emits_alarm = false;
};

struct ScenarioConfig {
  std::string name = "custom";
  uint64_t seed = 1;
  size_t duration_min = 10;
  size_t qpm = 1000;  // generated traces per minute before drops
  size_t endpoints = 20;
  double zipf_s = 1.2;
  size_t variants_per_endpoint = 10;
  size_t span_min = 3;
  size_t span_max = 30;
  // fraction of otherwise-healthy traces that get ERROR/WARN logs injected
  // while statuses and latency stay normal
  double blind_spot_fraction = 0.0;
  std::vector<FaultSpec> faults;

  std::vector<std::string> validate() const;
};

ScenarioConfig scenario_from_json(const std::string& json_text);
std::string scenario_to_json(const ScenarioConfig& cfg);

// steady | blindspot | outage | latency
ScenarioConfig preset_scenario(const std::string& name);
std::vector<std::string> preset_names();

struct GroundTruthRecord {
  std::string trace_id;
  bool anomalous = false;
  std::optional<std::string> fault;
  uint32_t pattern_id = 0;  // generator-side (endpoint, variant, fault) class
  uint32_t path_id = 0;     // generator-side (endpoint, variant) topology class
};

std::string ground_truth_to_jsonl(const GroundTruthRecord& rec);
std::optional<GroundTruthRecord> parse_ground_truth_line(const std::string& line,
                                                         std::string* error);
std::vector<GroundTruthRecord> parse_ground_truth_file(const std::string& path,
                                                       std::vector<ParseDiagnostic>* diags);

struct GeneratedWorkload {
  std::vector<Trace> traces;  // completion-time order
  AlarmFeed alarms;
  std::vector<GroundTruthRecord> truth;  // aligned with traces
};

// Deterministic for a given config: Zipf-skewed endpoint traffic, fixed
// per-endpoint topology/log variants, per-trace timing jitter, faults applied
// over the affected endpoint/window slices.
GeneratedWorkload generate_workload(const ScenarioConfig& cfg);

// The fixed blind-spot exemplar trace: a travel-query entry span whose
// config-parsing failure surfaces only in logs (two ERROR, one WARN) while
// every span reports OK and latency stays normal. Used by tests and goldens.
Trace blind_spot_motif_trace();

}  // namespace tailsieve
