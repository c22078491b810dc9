#include "tailsieve/pipeline.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>

#include "json.hpp"
#include "tailsieve/util.hpp"

namespace tailsieve {

using nlohmann::json;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

double nearest_rank(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  if (rank == 0) rank = 1;
  return sorted[std::min(rank, sorted.size()) - 1];
}

RuntimeStats runtime_from(const std::vector<double>& per_trace_ms) {
  RuntimeStats out;
  out.traces = per_trace_ms.size();
  if (per_trace_ms.empty()) return out;
  double sum = 0.0;
  for (double v : per_trace_ms) sum += v;
  out.mean_ms = sum / static_cast<double>(per_trace_ms.size());
  std::vector<double> sorted = per_trace_ms;
  std::sort(sorted.begin(), sorted.end());
  out.p50_ms = nearest_rank(sorted, 0.5);
  out.p99_ms = nearest_rank(sorted, 0.99);
  return out;
}

}  // namespace

std::vector<std::string> PipelineConfig::validate() const {
  std::vector<std::string> errors;
  if (window_ns <= 0) errors.push_back("window_ns must be > 0");
  for (auto& e : anomaly.validate()) errors.push_back("anomaly: " + e);
  for (auto& e : allocator.validate()) errors.push_back("allocator: " + e);
  for (auto& e : selector.validate()) errors.push_back("selector: " + e);
  return errors;
}

std::string window_summary_to_jsonl(const WindowSummary& w) {
  json j;
  j["window_start_ns"] = w.start_ns;
  j["window_end_ns"] = w.end_ns;
  j["traces"] = w.trace_count;
  j["sampled"] = w.sampled_count;
  j["budget_total"] = w.plan.total;
  j["unspent"] = w.plan.unspent;
  j["scale"] = w.plan.scale;
  return j.dump();
}

Pipeline::Pipeline(PipelineConfig cfg, AlarmFeed alarms)
    : cfg_(std::move(cfg)),
      alarms_(std::move(alarms)),
      encoder_(events_, templates_, cfg_.anomaly),
      cache_(cfg_.selector.cache_capacity),
      cold_stats_(cfg_.anomaly.latency_window) {
  auto errors = cfg_.validate();
  if (!errors.empty()) {
    std::string msg = "invalid pipeline config:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
}

void Pipeline::ingest(const Trace& trace) {
  if (finished_) throw std::logic_error("ingest after finish");
  const int64_t arrival = trace_end_ns(trace);
  const int64_t idx = arrival / cfg_.window_ns;
  if (window_index_ >= 0 && idx < window_index_) {
    throw DataError("trace " + trace.trace_id + " arrived before the open window");
  }
  if (window_index_ >= 0 && idx > window_index_ && !buffer_.empty()) flush();
  window_index_ = idx;

  const auto t0 = std::chrono::steady_clock::now();
  const EndpointKey key = root_endpoint(trace);
  auto it = stats_.find(key);
  buffer_.push_back(encoder_.encode(trace, it == stats_.end() ? cold_stats_ : it->second));
  trace_ms_.push_back(ms_since(t0));
}

void Pipeline::flush() {
  if (buffer_.empty()) return;
  const auto t0 = std::chrono::steady_clock::now();

  BufferWindow window;
  window.start_ns = window_index_ * cfg_.window_ns;
  window.end_ns = window.start_ns + cfg_.window_ns;
  window.traces = std::move(buffer_);
  window.qpm_history = qpm_history_;
  buffer_.clear();

  WindowSummary summary;
  summary.start_ns = window.start_ns;
  summary.end_ns = window.end_ns;
  summary.trace_count = window.traces.size();
  summary.plan = allocate(window, alarms_, cfg_.allocator);

  auto [normal, abnormal] = split_periods(window, alarms_);
  std::array<GroupMap, 2> groups;
  for (size_t i : normal) groups[0][window.traces[i].endpoint].push_back(i);
  for (size_t i : abnormal) groups[1][window.traces[i].endpoint].push_back(i);

  SimilarityCache* cache = cfg_.selector.use_cache ? &cache_ : nullptr;
  for (const QuotaEntry& entry : summary.plan.entries) {
    if (entry.quota == 0) continue;
    const auto& members = groups[entry.period == Period::kAbnormal ? 1 : 0][entry.endpoint];
    std::vector<const EncodedTrace*> candidates;
    candidates.reserve(members.size());
    for (size_t i : members) candidates.push_back(&window.traces[i]);

    std::vector<SelectionStep> steps;
    auto picked = greedy_select(candidates, entry.quota, cfg_.selector, cache,
                                cfg_.collect_steps ? &steps : nullptr);
    for (size_t c : picked) result_.sampled_ids.push_back(candidates[c]->trace_id);
    summary.sampled_count += picked.size();
    for (auto& s : steps) summary.steps.push_back(std::move(s));
  }

  // baselines advance only now, so this window never scored against itself
  for (const EncodedTrace& t : window.traces) {
    auto [it, fresh] = stats_.try_emplace(t.endpoint, cfg_.anomaly.latency_window);
    (void)fresh;
    it->second.observe(t.end_to_end_ns);
  }
  const double minutes = static_cast<double>(cfg_.window_ns) / 60e9;
  qpm_history_.push_back(static_cast<double>(window.traces.size()) / minutes);
  const size_t depth = cfg_.allocator.qpm_history_depth;
  if (qpm_history_.size() > depth) {
    qpm_history_.erase(qpm_history_.begin(), qpm_history_.end() - static_cast<long>(depth));
  }

  // charge the window work evenly across its traces
  const double flush_ms = ms_since(t0);
  const double share = flush_ms / static_cast<double>(window.traces.size());
  for (size_t i = trace_ms_.size() - window.traces.size(); i < trace_ms_.size(); ++i) {
    trace_ms_[i] += share;
  }

  result_.total_traces += window.traces.size();
  result_.windows.push_back(std::move(summary));
}

void Pipeline::finish() {
  if (finished_) return;
  flush();
  finished_ = true;
  result_.cache_hits = cache_.hits();
  result_.cache_misses = cache_.misses();
  result_.cache_hit_rate = cache_.hit_rate();
  result_.runtime = runtime_from(trace_ms_);
}

SampleSet Pipeline::take_result() {
  if (!finished_) finish();
  return std::move(result_);
}

SampleSet Pipeline::run(const std::vector<Trace>& corpus, const AlarmFeed& alarms,
                        const PipelineConfig& cfg) {
  std::vector<const Trace*> ordered;
  ordered.reserve(corpus.size());
  for (const Trace& t : corpus) ordered.push_back(&t);
  std::stable_sort(ordered.begin(), ordered.end(), [](const Trace* a, const Trace* b) {
    return trace_end_ns(*a) < trace_end_ns(*b);
  });

  Pipeline pipeline(cfg, alarms);
  for (const Trace* t : ordered) pipeline.ingest(*t);
  pipeline.finish();
  return pipeline.take_result();
}

RuntimeStats measure_per_trace_runtime(const std::vector<Trace>& corpus, const AlarmFeed& alarms,
                                       const PipelineConfig& cfg) {
  return Pipeline::run(corpus, alarms, cfg).runtime;
}

}  // namespace tailsieve
