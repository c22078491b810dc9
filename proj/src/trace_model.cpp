#include "tailsieve/trace_model.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "tailsieve/util.hpp"

namespace tailsieve {

using nlohmann::json;

const char* to_string(LogLevel level) {
  switch (level) {
    case LogLevel::kDebug: return "DEBUG";
    case LogLevel::kInfo: return "INFO";
    case LogLevel::kWarn: return "WARN";
    case LogLevel::kError: return "ERROR";
  }
  return "INFO";
}

const char* to_string(SpanStatus status) {
  return status == SpanStatus::kError ? "ERROR" : "OK";
}

std::optional<LogLevel> parse_log_level(std::string_view s) {
  if (s == "DEBUG") return LogLevel::kDebug;
  if (s == "INFO") return LogLevel::kInfo;
  if (s == "WARN") return LogLevel::kWarn;
  if (s == "ERROR") return LogLevel::kError;
  return std::nullopt;
}

std::optional<SpanStatus> parse_span_status(std::string_view s) {
  if (s == "OK") return SpanStatus::kOk;
  if (s == "ERROR") return SpanStatus::kError;
  return std::nullopt;
}

namespace {

bool get_string(const json& j, const char* key, std::string* out, std::string* error) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    *error = std::string("missing or non-string field '") + key + "'";
    return false;
  }
  *out = it->get<std::string>();
  return true;
}

bool get_int(const json& j, const char* key, int64_t* out, std::string* error) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer()) {
    *error = std::string("missing or non-integer field '") + key + "'";
    return false;
  }
  *out = it->get<int64_t>();
  return true;
}

}  // namespace

std::optional<Span> parse_span_line(const std::string& line, std::string* error) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    *error = "not a JSON object";
    return std::nullopt;
  }

  Span span;
  if (!get_string(j, "trace_id", &span.trace_id, error)) return std::nullopt;
  if (!get_string(j, "span_id", &span.span_id, error)) return std::nullopt;
  if (!get_string(j, "service", &span.service, error)) return std::nullopt;
  if (!get_string(j, "operation", &span.operation, error)) return std::nullopt;
  if (!get_int(j, "start_ns", &span.start_ns, error)) return std::nullopt;
  if (!get_int(j, "duration_ns", &span.duration_ns, error)) return std::nullopt;
  if (span.duration_ns < 0) {
    *error = "negative duration_ns";
    return std::nullopt;
  }

  auto parent = j.find("parent_span_id");
  if (parent == j.end() || parent->is_null()) {
    span.parent_span_id.reset();
  } else if (parent->is_string()) {
    span.parent_span_id = parent->get<std::string>();
  } else {
    *error = "parent_span_id must be a string or null";
    return std::nullopt;
  }

  std::string status_str;
  if (!get_string(j, "status", &status_str, error)) return std::nullopt;
  auto status = parse_span_status(status_str);
  if (!status) {
    *error = "unknown status '" + status_str + "'";
    return std::nullopt;
  }
  span.status = *status;

  auto logs = j.find("logs");
  if (logs == j.end() || !logs->is_array()) {
    *error = "missing or non-array field 'logs'";
    return std::nullopt;
  }
  for (const auto& item : *logs) {
    if (!item.is_object()) {
      *error = "log entry is not an object";
      return std::nullopt;
    }
    LogEvent ev;
    if (!get_int(item, "ts_ns", &ev.ts_ns, error)) return std::nullopt;
    std::string level_str;
    if (!get_string(item, "level", &level_str, error)) return std::nullopt;
    auto level = parse_log_level(level_str);
    if (!level) {
      *error = "unknown log level '" + level_str + "'";
      return std::nullopt;
    }
    ev.level = *level;
    auto tid = item.find("template_id");
    auto msg = item.find("message");
    if (tid != item.end() && tid->is_number_unsigned()) {
      ev.template_id = tid->get<uint32_t>();
    } else if (msg != item.end() && msg->is_string()) {
      ev.message = msg->get<std::string>();
    } else {
      *error = "log entry needs a string 'message' or an unsigned 'template_id'";
      return std::nullopt;
    }
    span.logs.push_back(std::move(ev));
  }
  return span;
}

std::string span_to_jsonl(const Span& span) {
  json j;
  j["trace_id"] = span.trace_id;
  j["span_id"] = span.span_id;
  if (span.parent_span_id) {
    j["parent_span_id"] = *span.parent_span_id;
  } else {
    j["parent_span_id"] = nullptr;
  }
  j["service"] = span.service;
  j["operation"] = span.operation;
  j["start_ns"] = span.start_ns;
  j["duration_ns"] = span.duration_ns;
  j["status"] = to_string(span.status);
  json logs = json::array();
  for (const auto& ev : span.logs) {
    json e;
    e["ts_ns"] = ev.ts_ns;
    e["level"] = to_string(ev.level);
    if (ev.template_id) {
      e["template_id"] = *ev.template_id;
    } else {
      e["message"] = ev.message.value_or("");
    }
    logs.push_back(std::move(e));
  }
  j["logs"] = std::move(logs);
  return j.dump();
}

std::optional<Trace> assemble_trace(std::vector<Span> spans, std::vector<ParseDiagnostic>* diags) {
  if (spans.empty()) return std::nullopt;
  const std::string& tid = spans.front().trace_id;
  std::unordered_set<std::string> seen_ids;
  for (const auto& s : spans) {
    if (s.trace_id != tid) {
      throw std::invalid_argument("assemble_trace called with mixed trace ids: " + tid +
                                  " vs " + s.trace_id);
    }
    if (!seen_ids.insert(s.span_id).second) {
      if (diags) {
        diags->push_back({0, "trace " + tid + " rejected: duplicate span_id " + s.span_id});
      }
      return std::nullopt;
    }
  }

  Trace trace;
  trace.trace_id = tid;
  trace.spans = std::move(spans);
  for (auto& s : trace.spans) {
    std::stable_sort(s.logs.begin(), s.logs.end(),
                     [](const LogEvent& a, const LogEvent& b) { return a.ts_ns < b.ts_ns; });
  }

  std::unordered_set<std::string> present;
  for (const auto& s : trace.spans) present.insert(s.span_id);

  auto better_root = [&](size_t cand, size_t best) {
    const Span& c = trace.spans[cand];
    const Span& b = trace.spans[best];
    if (c.start_ns != b.start_ns) return c.start_ns < b.start_ns;
    return c.span_id < b.span_id;
  };

  size_t root = trace.spans.size();
  for (size_t i = 0; i < trace.spans.size(); ++i) {
    if (!trace.spans[i].parent_span_id) {
      if (root == trace.spans.size() || better_root(i, root)) root = i;
    }
  }

  std::vector<size_t> orphans;
  for (size_t i = 0; i < trace.spans.size(); ++i) {
    const auto& parent = trace.spans[i].parent_span_id;
    if (parent && present.find(*parent) == present.end()) orphans.push_back(i);
  }

  if (root == trace.spans.size()) {
    // no parentless span; promote the earliest-starting orphan
    for (size_t i : orphans) {
      if (root == trace.spans.size() || better_root(i, root)) root = i;
    }
    if (root == trace.spans.size()) {
      if (diags) {
        diags->push_back({0, "trace " + tid + " rejected: no root span (parent cycle)"});
      }
      return std::nullopt;
    }
    orphans.erase(std::find(orphans.begin(), orphans.end(), root));
  }

  trace.root_index = root;
  trace.orphan_indices = std::move(orphans);
  return trace;
}

std::vector<Trace> parse_trace_stream(std::istream& in, std::vector<ParseDiagnostic>* diags) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Span>> groups;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string error;
    auto span = parse_span_line(line, &error);
    if (!span) {
      if (diags) diags->push_back({line_no, "malformed span record: " + error});
      continue;
    }
    auto [it, inserted] = groups.try_emplace(span->trace_id);
    if (inserted) order.push_back(span->trace_id);
    it->second.push_back(std::move(*span));
  }

  std::vector<Trace> traces;
  traces.reserve(order.size());
  for (const auto& tid : order) {
    auto trace = assemble_trace(std::move(groups[tid]), diags);
    if (trace) traces.push_back(std::move(*trace));
  }
  return traces;
}

std::vector<Trace> parse_trace_file(const std::string& path, std::vector<ParseDiagnostic>* diags) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open trace file: " + path);
  return parse_trace_stream(in, diags);
}

const Span& root_span(const Trace& trace) { return trace.spans.at(trace.root_index); }

EndpointKey root_endpoint(const Trace& trace) {
  const Span& root = root_span(trace);
  return {root.service, root.operation};
}

int64_t trace_end_ns(const Trace& trace) {
  int64_t end = 0;
  for (const auto& s : trace.spans) end = std::max(end, s.end_ns());
  return end;
}

}  // namespace tailsieve
