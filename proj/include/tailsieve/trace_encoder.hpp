#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tailsieve/log_templater.hpp"
#include "tailsieve/trace_model.hpp"

namespace tailsieve {

// Deduplicated set of directed event-id bigrams describing a trace: within
// each span the canonical event sequence contributes consecutive pairs, and
// each resolved parent/child edge contributes (parent end, child start).
class EventPairSet {
 public:
  EventPairSet() = default;

  static uint64_t pack(EventId from, EventId to) {
    return (static_cast<uint64_t>(from) << 32) | to;
  }
  static EventId pair_from(uint64_t packed) { return static_cast<EventId>(packed >> 32); }
  static EventId pair_to(uint64_t packed) { return static_cast<EventId>(packed & 0xffffffffu); }

  // takes packed pairs in any order, possibly with duplicates
  static EventPairSet from_pairs(std::vector<uint64_t> packed);

  const std::vector<uint64_t>& pairs() const { return pairs_; }
  size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  bool contains(EventId from, EventId to) const;

  // order-independent digest; equality of digests is only a hint and gets
  // confirmed by full set comparison wherever it matters
  uint64_t hash64() const { return hash_; }

  bool operator==(const EventPairSet& other) const { return pairs_ == other.pairs_; }

 private:
  std::vector<uint64_t> pairs_;  // ascending
  uint64_t hash_ = 0;
};

struct AnomalyConfig {
  double error_status_weight = 5.0;  // per span with ERROR status
  double warn_log_weight = 1.0;      // per WARN log record
  double error_log_weight = 2.0;     // per ERROR log record
  double perf_factor = 1.2;          // degraded when e2e > factor * group p90
  double perf_score = 3.0;           // added once per degraded trace
  double anomaly_threshold = 1.0;    // evaluation flags traces with score >= this
  size_t latency_window = 1000;      // per-group rolling duration capacity
  size_t warmup_min = 20;            // observations before the latency term applies

  std::vector<std::string> validate() const;
};

// Rolling end-to-end latency window for one root-endpoint group. Keeps a
// FIFO of the last `capacity` durations plus a sorted copy for the
// nearest-rank p90.
class GroupStats {
 public:
  explicit GroupStats(size_t capacity = 1000);

  void observe(int64_t duration_ns);
  size_t count() const { return fifo_.size(); }
  int64_t p90() const;  // 0 when empty

 private:
  size_t capacity_;
  std::vector<int64_t> fifo_;    // insertion order, head at fifo_start_
  size_t fifo_start_ = 0;        // ring buffer head
  std::vector<int64_t> sorted_;  // same values, ascending
};

struct EncodedTrace {
  std::string trace_id;
  EndpointKey endpoint;
  std::shared_ptr<const EventPairSet> eps;
  double anomaly = 0.0;
  int64_t end_to_end_ns = 0;  // root span duration
  int64_t arrival_ns = 0;     // trace completion timestamp
};

// {"trace_id":...,"endpoint":...,"anomaly":...,"pairs":[[a,b],...]}
std::string encoded_trace_to_jsonl(const EncodedTrace& t);

// Turns assembled traces into event-pair sets and anomaly scores. Events and
// log templates are registered on shared registries so ids stay consistent
// across the whole run.
class TraceEncoder {
 public:
  TraceEncoder(EventManager& events, TemplateStore& templates, AnomalyConfig cfg = {});

  // SPAN_START, logs in timestamp order (ties by template id), STATUS_ERROR
  // when the span failed, PERF_DEG when degraded, SPAN_END.
  std::vector<EventId> canonical_event_sequence(const Span& span, bool degraded);

  // `stats` is the root-endpoint group's rolling latency window as of the
  // previous buffer windows; pass a default-constructed one when cold.
  EncodedTrace encode(const Trace& trace, const GroupStats& stats);

  // weighted error/warn counts plus the latency degradation term
  double anomaly_score(const Trace& trace, const GroupStats& stats) const;

  bool is_degraded(const Trace& trace, const GroupStats& stats) const;

  const AnomalyConfig& config() const { return cfg_; }

 private:
  TemplateId resolve_template(const LogEvent& ev);

  EventManager& events_;
  TemplateStore& templates_;
  AnomalyConfig cfg_;
};

}  // namespace tailsieve
