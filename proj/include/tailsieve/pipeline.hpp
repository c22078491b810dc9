#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tailsieve/dpp_selector.hpp"
#include "tailsieve/evaluation.hpp"
#include "tailsieve/quota_allocator.hpp"
#include "tailsieve/trace_encoder.hpp"
#include "tailsieve/trace_model.hpp"

namespace tailsieve {

struct PipelineConfig {
  int64_t window_ns = 60'000'000'000;  // buffer window length, epoch aligned
  AnomalyConfig anomaly;
  AllocatorConfig allocator;
  SelectorConfig selector;
  bool collect_steps = false;  // keep per-selection step records for debugging

  std::vector<std::string> validate() const;
};

// Everything observable about one flushed buffer window.
struct WindowSummary {
  int64_t start_ns = 0;
  int64_t end_ns = 0;
  size_t trace_count = 0;
  size_t sampled_count = 0;
  QuotaPlan plan;
  std::vector<SelectionStep> steps;  // entry order; empty unless collect_steps
};

std::string window_summary_to_jsonl(const WindowSummary& w);

struct SampleSet {
  std::vector<std::string> sampled_ids;  // window order, then quota-entry order
  std::vector<WindowSummary> windows;
  size_t total_traces = 0;
  uint64_t cache_hits = 0;
  uint64_t cache_misses = 0;
  double cache_hit_rate = 0.0;
  RuntimeStats runtime;  // wall-clock only; excluded from deterministic output
};

// Streaming sampler: traces are encoded as they arrive, buffered into
// epoch-aligned windows by completion time, and each sealed window runs
// quota allocation followed by per-group diversity selection. Latency
// baselines and the traffic-rate history only advance after a window is
// sealed, so scoring never sees the window it is part of. Windows with no
// traffic are skipped entirely.
class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, AlarmFeed alarms);

  // traces must arrive in completion order across windows
  void ingest(const Trace& trace);
  void finish();  // seal the open window
  SampleSet take_result();

  const EventManager& events() const { return events_; }
  const TemplateStore& templates() const { return templates_; }

  // sorts the corpus by completion time and runs it end to end
  static SampleSet run(const std::vector<Trace>& corpus, const AlarmFeed& alarms,
                       const PipelineConfig& cfg);

 private:
  void flush();

  PipelineConfig cfg_;
  AlarmFeed alarms_;
  EventManager events_;
  TemplateStore templates_;
  TraceEncoder encoder_;
  SimilarityCache cache_;
  GroupStats cold_stats_;  // shared zero-observation baseline for new groups
  std::map<EndpointKey, GroupStats> stats_;
  std::vector<double> qpm_history_;
  int64_t window_index_ = -1;  // -1 until the first trace arrives
  std::vector<EncodedTrace> buffer_;
  std::vector<double> trace_ms_;  // per-trace processing cost, ingest order
  SampleSet result_;
  bool finished_ = false;
};

// Runs the pipeline and reports the per-trace processing cost: each trace is
// charged its own encoding time plus an even share of its window's
// allocation and selection time.
RuntimeStats measure_per_trace_runtime(const std::vector<Trace>& corpus, const AlarmFeed& alarms,
                                       const PipelineConfig& cfg);

}  // namespace tailsieve
