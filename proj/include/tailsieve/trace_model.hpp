#pragma once

#include <compare>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace tailsieve {

enum class LogLevel { kDebug, kInfo, kWarn, kError };
enum class SpanStatus { kOk, kError };

const char* to_string(LogLevel level);
const char* to_string(SpanStatus status);
std::optional<LogLevel> parse_log_level(std::string_view s);
std::optional<SpanStatus> parse_span_status(std::string_view s);

// One log record on a span. Raw messages get templated during encoding;
// records that already carry a template id bypass mining.
struct LogEvent {
  int64_t ts_ns = 0;
  LogLevel level = LogLevel::kInfo;
  std::optional<std::string> message;
  std::optional<uint32_t> template_id;

  bool operator==(const LogEvent&) const = default;
};

struct Span {
  std::string trace_id;
  std::string span_id;
  std::optional<std::string> parent_span_id;
  std::string service;
  std::string operation;
  int64_t start_ns = 0;
  int64_t duration_ns = 0;  // never negative
  SpanStatus status = SpanStatus::kOk;
  std::vector<LogEvent> logs;  // sorted by ts_ns once the trace is assembled

  int64_t end_ns() const { return start_ns + duration_ns; }
  bool operator==(const Span&) const = default;
};

// Service/operation pair of a span; the root span's key is the grouping key
// used by the allocator, the selector and the evaluation metrics.
struct EndpointKey {
  std::string service;
  std::string operation;

  auto operator<=>(const EndpointKey&) const = default;
  std::string str() const { return service + "/" + operation; }
};

struct Trace {
  std::string trace_id;
  std::vector<Span> spans;  // input order preserved
  size_t root_index = 0;
  // spans whose parent_span_id is set but not present in the trace,
  // excluding the root when it was promoted from an orphan
  std::vector<size_t> orphan_indices;
};

struct ParseDiagnostic {
  size_t line_no = 0;  // 1-based; 0 when not tied to a single line
  std::string detail;
};

// Parses one span record in the wire format. Unknown keys are ignored.
// Returns nothing and fills `error` on malformed input.
std::optional<Span> parse_span_line(const std::string& line, std::string* error);

// Serializes a span back to one JSONL line in the same wire format.
// Parsing the output reproduces the span exactly.
std::string span_to_jsonl(const Span& span);

// Groups spans by trace id (first-encounter order), assembles each group.
// Malformed lines and rejected traces become diagnostics, never failures.
std::vector<Trace> parse_trace_stream(std::istream& in, std::vector<ParseDiagnostic>* diags);
std::vector<Trace> parse_trace_file(const std::string& path, std::vector<ParseDiagnostic>* diags);

// Builds a Trace from spans that all share one trace id.
//   - duplicate span ids reject the whole trace (diagnostic)
//   - mixed trace ids are a caller bug and throw
//   - root: the no-parent span, earliest start first, then smallest span id;
//     with no such span the earliest-starting orphan is promoted
// Per-span logs are sorted by timestamp as part of assembly.
std::optional<Trace> assemble_trace(std::vector<Span> spans, std::vector<ParseDiagnostic>* diags);

const Span& root_span(const Trace& trace);
EndpointKey root_endpoint(const Trace& trace);

// Completion time of the trace (max span end); the pipeline treats this as
// the arrival timestamp when it assigns traces to buffer windows.
int64_t trace_end_ns(const Trace& trace);

}  // namespace tailsieve
