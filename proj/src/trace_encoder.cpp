#include "tailsieve/trace_encoder.hpp"

#include <algorithm>
#include <unordered_map>

#include "json.hpp"
#include "tailsieve/util.hpp"

namespace tailsieve {

EventPairSet EventPairSet::from_pairs(std::vector<uint64_t> packed) {
  std::sort(packed.begin(), packed.end());
  packed.erase(std::unique(packed.begin(), packed.end()), packed.end());
  EventPairSet set;
  set.pairs_ = std::move(packed);
  uint64_t h = 0;
  for (uint64_t p : set.pairs_) h += splitmix64(p);  // commutative on purpose
  set.hash_ = h;
  return set;
}

bool EventPairSet::contains(EventId from, EventId to) const {
  return std::binary_search(pairs_.begin(), pairs_.end(), pack(from, to));
}

std::vector<std::string> AnomalyConfig::validate() const {
  std::vector<std::string> errors;
  if (error_status_weight < 0) errors.push_back("error_status_weight must be >= 0");
  if (warn_log_weight < 0) errors.push_back("warn_log_weight must be >= 0");
  if (error_log_weight < 0) errors.push_back("error_log_weight must be >= 0");
  if (perf_score < 0) errors.push_back("perf_score must be >= 0");
  if (perf_factor <= 1.0) errors.push_back("perf_factor must be > 1");
  if (latency_window == 0) errors.push_back("latency_window must be > 0");
  return errors;
}

GroupStats::GroupStats(size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {
  fifo_.reserve(capacity_);
  sorted_.reserve(capacity_);
}

void GroupStats::observe(int64_t duration_ns) {
  if (fifo_.size() == capacity_) {
    int64_t evicted = fifo_[fifo_start_];
    fifo_[fifo_start_] = duration_ns;
    fifo_start_ = (fifo_start_ + 1) % capacity_;
    auto it = std::lower_bound(sorted_.begin(), sorted_.end(), evicted);
    sorted_.erase(it);
  } else {
    fifo_.push_back(duration_ns);
  }
  sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), duration_ns), duration_ns);
}

int64_t GroupStats::p90() const {
  if (sorted_.empty()) return 0;
  // nearest-rank: ceil(0.9 * n) as a 1-based rank
  size_t rank = (sorted_.size() * 9 + 9) / 10;
  return sorted_[rank - 1];
}

std::string encoded_trace_to_jsonl(const EncodedTrace& t) {
  nlohmann::json j;
  j["trace_id"] = t.trace_id;
  j["endpoint"] = t.endpoint.str();
  j["anomaly"] = t.anomaly;
  nlohmann::json pairs = nlohmann::json::array();
  for (uint64_t p : t.eps->pairs()) {
    pairs.push_back({EventPairSet::pair_from(p), EventPairSet::pair_to(p)});
  }
  j["pairs"] = std::move(pairs);
  return j.dump();
}

TraceEncoder::TraceEncoder(EventManager& events, TemplateStore& templates, AnomalyConfig cfg)
    : events_(events), templates_(templates), cfg_(cfg) {}

TemplateId TraceEncoder::resolve_template(const LogEvent& ev) {
  if (ev.template_id) return *ev.template_id;
  return templates_.template_of(ev.message.value_or(""));
}

std::vector<EventId> TraceEncoder::canonical_event_sequence(const Span& span, bool degraded) {
  const std::string endpoint = span.service + "/" + span.operation;

  // resolve templates in stored (timestamp) order so mining order is stable,
  // then order ties by template id
  std::vector<std::pair<int64_t, TemplateId>> logs;
  logs.reserve(span.logs.size());
  for (const auto& ev : span.logs) logs.emplace_back(ev.ts_ns, resolve_template(ev));
  std::stable_sort(logs.begin(), logs.end());

  std::vector<EventId> seq;
  seq.reserve(logs.size() + 4);
  seq.push_back(events_.id(EventKind::kSpanStart, endpoint));
  for (const auto& [ts, tid] : logs) seq.push_back(events_.log_id(tid));
  if (span.status == SpanStatus::kError) {
    seq.push_back(events_.id(EventKind::kStatusError, endpoint));
  }
  if (degraded) seq.push_back(events_.id(EventKind::kPerfDeg, endpoint));
  seq.push_back(events_.id(EventKind::kSpanEnd, endpoint));
  return seq;
}

bool TraceEncoder::is_degraded(const Trace& trace, const GroupStats& stats) const {
  if (stats.count() < cfg_.warmup_min) return false;
  double threshold = cfg_.perf_factor * static_cast<double>(stats.p90());
  return static_cast<double>(root_span(trace).duration_ns) > threshold;
}

double TraceEncoder::anomaly_score(const Trace& trace, const GroupStats& stats) const {
  double score = 0.0;
  for (const auto& span : trace.spans) {
    if (span.status == SpanStatus::kError) score += cfg_.error_status_weight;
    for (const auto& ev : span.logs) {
      if (ev.level == LogLevel::kWarn) score += cfg_.warn_log_weight;
      if (ev.level == LogLevel::kError) score += cfg_.error_log_weight;
    }
  }
  if (is_degraded(trace, stats)) score += cfg_.perf_score;
  return score;
}

EncodedTrace TraceEncoder::encode(const Trace& trace, const GroupStats& stats) {
  const bool degraded = is_degraded(trace, stats);

  std::vector<uint64_t> packed;
  std::vector<EventId> span_start(trace.spans.size());
  std::vector<EventId> span_end(trace.spans.size());
  for (size_t i = 0; i < trace.spans.size(); ++i) {
    auto seq = canonical_event_sequence(trace.spans[i], degraded && i == trace.root_index);
    span_start[i] = seq.front();
    span_end[i] = seq.back();
    for (size_t k = 0; k + 1 < seq.size(); ++k) {
      packed.push_back(EventPairSet::pack(seq[k], seq[k + 1]));
    }
  }

  std::unordered_map<std::string_view, size_t> by_span_id;
  by_span_id.reserve(trace.spans.size());
  for (size_t i = 0; i < trace.spans.size(); ++i) by_span_id.emplace(trace.spans[i].span_id, i);
  for (size_t i = 0; i < trace.spans.size(); ++i) {
    const auto& parent = trace.spans[i].parent_span_id;
    if (!parent) continue;
    auto it = by_span_id.find(*parent);
    if (it == by_span_id.end()) continue;  // orphan edge, nothing to link
    packed.push_back(EventPairSet::pack(span_end[it->second], span_start[i]));
  }

  EncodedTrace out;
  out.trace_id = trace.trace_id;
  out.endpoint = root_endpoint(trace);
  out.eps = std::make_shared<EventPairSet>(EventPairSet::from_pairs(std::move(packed)));
  out.anomaly = anomaly_score(trace, stats);
  out.end_to_end_ns = root_span(trace).duration_ns;
  out.arrival_ns = trace_end_ns(trace);
  return out;
}

}  // namespace tailsieve
