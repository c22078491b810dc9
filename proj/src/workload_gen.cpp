#include "tailsieve/workload_gen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <map>
#include <unordered_set>

#include "json.hpp"
#include "tailsieve/util.hpp"

namespace tailsieve {

using nlohmann::json;

const char* to_string(FaultKind kind) {
  switch (kind) {
    case FaultKind::kStatusError: return "status_error";
    case FaultKind::kErrorLogOnly: return "error_log_only";
    case FaultKind::kLatencyInflation: return "latency_inflation";
    case FaultKind::kTrafficDrop: return "traffic_drop";
  }
  return "status_error";
}

std::optional<FaultKind> parse_fault_kind(std::string_view s) {
  if (s == "status_error") return FaultKind::kStatusError;
  if (s == "error_log_only") return FaultKind::kErrorLogOnly;
  if (s == "latency_inflation") return FaultKind::kLatencyInflation;
  if (s == "traffic_drop") return FaultKind::kTrafficDrop;
  return std::nullopt;
}

namespace {

constexpr int64_t kMinuteNs = 60'000'000'000;
constexpr double kLatencyFactor = 3.0;  // root duration multiplier when inflated

constexpr uint64_t kTagVariant = 0x76617269;  // rng substream tags
constexpr uint64_t kTagTraffic = 0x74726166;
constexpr uint64_t kTagTrace = 0x74726163;
constexpr uint64_t kTagFault = 0x66617574;

constexpr const char* kServicePool[] = {
    "checkout", "billing",  "inventory", "catalog",  "shipping", "payment",
    "identity", "session",  "search",    "pricing",  "ledger",   "orders",
    "profile",  "rating",   "notify",    "routing",  "assets",   "quota",
    "metrics",  "fraud",    "basket",    "dispatch", "station",  "booking"};
constexpr size_t kServicePoolSize = std::size(kServicePool);

constexpr const char* kVerbPool[] = {"get", "list", "create", "update", "query", "fetch"};

struct Phrase {
  const char* prefix;
  const char* suffix;  // empty when the phrase has no numeric slot
};

// healthy-path log phrases; numeric slots vary per trace and get masked away
constexpr Phrase kPhrases[] = {
    {"Fetched", "rows from cache"},
    {"Connection pool size", ""},
    {"Request completed in", "ms"},
    {"Retrying shard", "after backoff"},
    {"Cache hit ratio", "percent"},
    {"Loaded config revision", ""},
    {"Queued batch of", "items"},
    {"Downstream responded in", "ms"},
    {"Session token refreshed", ""},
    {"Validated request payload", ""},
    {"Scheduled follow-up job", ""},
    {"Opened cursor on partition", ""},
    {"Flushed", "events to the bus"},
    {"Resolved feature flags", ""},
    {"Lease renewed for", "seconds"},
    {"Compacted segment of", "entries"},
    {"Warmed", "cache entries"},
    {"Handshake completed", ""},
    {"Applying rate limit of", "rps"},
    {"Read replica lag", "ms"},
    {"Decoded payload of", "bytes"},
    {"Committed offset", ""},
    {"Spawned worker", ""},
    {"Heartbeat acknowledged", ""},
};
constexpr size_t kPhraseCount = std::size(kPhrases);

// blind-spot injection: statuses stay OK, only logs betray the failure
constexpr const char* kMotifErrorPrefix1 = "Config parse failed for key route.timeout.ms value";
constexpr const char* kMotifErrorPrefix2 = "Falling back to default route table version";
constexpr const char* kMotifWarnPrefix = "Route cache stale for";
constexpr const char* kMotifWarnSuffix = "ms";

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

EndpointKey endpoint_key(size_t index) {
  std::string base = kServicePool[index % kServicePoolSize];
  std::string service = "svc-" + base;
  if (index >= kServicePoolSize) service += "-" + std::to_string(index / kServicePoolSize);
  std::string operation = std::string(kVerbPool[index % std::size(kVerbPool)]) + capitalize(base);
  return {service, operation};
}

std::string phrase_message(size_t phrase_idx, uint64_t value) {
  const Phrase& p = kPhrases[phrase_idx];
  std::string msg = p.prefix;
  msg += ' ';
  msg += std::to_string(value);
  if (p.suffix[0] != '\0') {
    msg += ' ';
    msg += p.suffix;
  }
  return msg;
}

struct VariantNode {
  size_t parent = 0;  // == own index for the root
  std::string service;
  std::string operation;
  std::vector<std::pair<LogLevel, size_t>> logs;  // (level, phrase index)
  int64_t base_dur_ns = 0;
};

struct Variant {
  std::vector<VariantNode> nodes;  // parents precede children
  size_t dup_node = 0;             // fan-out candidate; 0 disables
};

Variant build_variant(const ScenarioConfig& cfg, size_t endpoint, size_t variant) {
  Rng rng(substream_seed(cfg.seed, kTagVariant, endpoint, variant));
  Variant out;
  const size_t n = cfg.span_min + rng.bounded(cfg.span_max - cfg.span_min + 1);
  out.nodes.resize(n);

  EndpointKey root_key = endpoint_key(endpoint);
  out.nodes[0].parent = 0;
  out.nodes[0].service = root_key.service;
  out.nodes[0].operation = root_key.operation;
  for (size_t i = 1; i < n; ++i) {
    out.nodes[i].parent = rng.bounded(i);
    out.nodes[i].service = std::string("svc-") + kServicePool[rng.bounded(kServicePoolSize)];
    out.nodes[i].operation = std::string("op-") + static_cast<char>('a' + rng.bounded(8));
  }
  for (size_t i = 0; i < n; ++i) {
    size_t log_count = (i == 0) ? 1 + rng.bounded(2) : rng.bounded(3);
    for (size_t j = 0; j < log_count; ++j) {
      LogLevel level = rng.bounded(10) == 0 ? LogLevel::kDebug : LogLevel::kInfo;
      out.nodes[i].logs.emplace_back(level, rng.bounded(kPhraseCount));
    }
    out.nodes[i].base_dur_ns = 200'000 + static_cast<int64_t>(rng.bounded(4'800'000));
  }
  if (n >= 4 && rng.bounded(4) == 0) out.dup_node = 1 + rng.bounded(n - 1);
  return out;
}

struct PendingTrace {
  Trace trace;
  size_t endpoint = 0;
  size_t variant = 0;
  int64_t root_start_ns = 0;
  std::optional<FaultKind> fault;
};

// Instantiates one trace from a variant: jittered durations, sequential child
// layout, optional parallel duplication of one subtree.
Trace instantiate(const Variant& variant, const ScenarioConfig& cfg, uint64_t seq,
                  int64_t start_ns, const std::string& trace_id) {
  Rng rng(substream_seed(cfg.seed, kTagTrace, seq));
  const size_t n = variant.nodes.size();

  std::vector<int64_t> jitter_dur(n);
  for (size_t i = 0; i < n; ++i) {
    double f = 0.8 + 0.4 * rng.uniform01();
    jitter_dur[i] = std::max<int64_t>(50'000, static_cast<int64_t>(
                                                  static_cast<double>(variant.nodes[i].base_dur_ns) * f));
  }
  size_t dup_factor = 1;
  if (variant.dup_node != 0) dup_factor = 1 + rng.bounded(3);

  std::vector<std::vector<size_t>> children(n);
  for (size_t i = 1; i < n; ++i) children[variant.nodes[i].parent].push_back(i);

  // bottom-up spans: parent covers its sequentially laid out children
  constexpr int64_t kLeadNs = 100'000;
  constexpr int64_t kGapNs = 50'000;
  std::vector<int64_t> total(n);
  for (size_t i = n; i-- > 0;) {
    int64_t span = jitter_dur[i];
    if (!children[i].empty()) {
      int64_t acc = kLeadNs;
      for (size_t c : children[i]) acc += total[c] + kGapNs;
      span += acc;
    }
    total[i] = span;
  }

  Trace trace;
  trace.trace_id = trace_id;
  size_t span_seq = 0;

  struct Frame {
    size_t node;
    int64_t start;
    std::string parent_span_id;
  };
  std::vector<Frame> stack{{0, start_ns, ""}};
  // iterative DFS keeps emission order root-first
  while (!stack.empty()) {
    Frame frame = stack.back();
    stack.pop_back();
    const VariantNode& node = variant.nodes[frame.node];

    Span span;
    span.trace_id = trace_id;
    span.span_id = "s" + std::to_string(++span_seq);
    if (!frame.parent_span_id.empty()) span.parent_span_id = frame.parent_span_id;
    span.service = node.service;
    span.operation = node.operation;
    span.start_ns = frame.start;
    span.duration_ns = total[frame.node];
    span.status = SpanStatus::kOk;
    const size_t log_count = node.logs.size();
    for (size_t j = 0; j < log_count; ++j) {
      LogEvent ev;
      ev.level = node.logs[j].first;
      ev.ts_ns = frame.start +
                 static_cast<int64_t>(j + 1) * span.duration_ns / static_cast<int64_t>(log_count + 1);
      ev.message = phrase_message(node.logs[j].second, rng.bounded(100000));
      span.logs.push_back(std::move(ev));
    }
    trace.spans.push_back(std::move(span));
    const std::string self_id = trace.spans.back().span_id;

    // push children in reverse so they pop in index order
    int64_t cursor = frame.start + kLeadNs;
    std::vector<std::pair<size_t, int64_t>> child_starts;
    for (size_t c : children[frame.node]) {
      size_t copies = (c == variant.dup_node) ? dup_factor : 1;
      for (size_t r = 0; r < copies; ++r) child_starts.emplace_back(c, cursor);
      cursor += total[c] + kGapNs;  // parallel copies share the slot
    }
    for (size_t idx = child_starts.size(); idx-- > 0;) {
      stack.push_back({child_starts[idx].first, child_starts[idx].second, self_id});
    }
  }

  trace.root_index = 0;
  return trace;
}

// deterministic proportional thinning: flags index i when the running count
// floor((i+1)*f) advances, so hits land evenly and total within rounding
std::vector<size_t> bresenham_pick(size_t n, double fraction) {
  std::vector<size_t> hits;
  double acc = 0.0;
  size_t emitted = 0;
  for (size_t i = 0; i < n; ++i) {
    acc = fraction * static_cast<double>(i + 1);
    auto want = static_cast<size_t>(std::floor(acc + 1e-9));
    if (want > emitted) {
      hits.push_back(i);
      ++emitted;
    }
  }
  return hits;
}

std::vector<double> zipf_cdf(size_t n, double s) {
  std::vector<double> cdf(n);
  double sum = 0.0;
  for (size_t k = 0; k < n; ++k) {
    sum += std::pow(static_cast<double>(k + 1), -s);
    cdf[k] = sum;
  }
  for (auto& v : cdf) v /= sum;
  return cdf;
}

void inject_motif_logs(Span& root, Rng& rng) {
  const int64_t base = root.start_ns;
  const int64_t dur = root.duration_ns;
  LogEvent e1{base + dur / 4, LogLevel::kError,
              std::string(kMotifErrorPrefix1) + " " + std::to_string(rng.bounded(100000)),
              std::nullopt};
  LogEvent e2{base + dur / 2, LogLevel::kError,
              std::string(kMotifErrorPrefix2) + " " + std::to_string(rng.bounded(100)),
              std::nullopt};
  LogEvent w{base + dur * 3 / 4, LogLevel::kWarn,
             std::string(kMotifWarnPrefix) + " " + std::to_string(rng.bounded(10000)) + " " +
                 kMotifWarnSuffix,
             std::nullopt};
  root.logs.push_back(std::move(e1));
  root.logs.push_back(std::move(e2));
  root.logs.push_back(std::move(w));
  std::stable_sort(root.logs.begin(), root.logs.end(),
                   [](const LogEvent& a, const LogEvent& b) { return a.ts_ns < b.ts_ns; });
}

void apply_mutation(PendingTrace& victim, FaultKind kind, Rng& rng) {
  Span& root = victim.trace.spans[victim.trace.root_index];
  switch (kind) {
    case FaultKind::kStatusError: {
      root.status = SpanStatus::kError;
      LogEvent ev{root.start_ns + root.duration_ns / 2, LogLevel::kError,
                  "Upstream call failed with status " + std::to_string(500 + rng.bounded(4)),
                  std::nullopt};
      root.logs.push_back(std::move(ev));
      std::stable_sort(root.logs.begin(), root.logs.end(),
                       [](const LogEvent& a, const LogEvent& b) { return a.ts_ns < b.ts_ns; });
      break;
    }
    case FaultKind::kErrorLogOnly:
      inject_motif_logs(root, rng);
      break;
    case FaultKind::kLatencyInflation:
      root.duration_ns = static_cast<int64_t>(static_cast<double>(root.duration_ns) * kLatencyFactor);
      break;
    case FaultKind::kTrafficDrop:
      break;  // drops remove traces, they never mutate one
  }
  victim.fault = kind;
}

}  // namespace

std::vector<std::string> ScenarioConfig::validate() const {
  std::vector<std::string> errors;
  if (duration_min == 0) errors.push_back("duration_min must be > 0");
  if (qpm == 0) errors.push_back("qpm must be > 0");
  if (endpoints == 0) errors.push_back("endpoints must be > 0");
  if (zipf_s <= 0.0) errors.push_back("zipf_s must be > 0");
  if (variants_per_endpoint == 0) errors.push_back("variants_per_endpoint must be > 0");
  if (span_min == 0) errors.push_back("span_min must be > 0");
  if (span_max < span_min) errors.push_back("span_max must be >= span_min");
  if (blind_spot_fraction < 0.0 || blind_spot_fraction > 1.0) {
    errors.push_back("blind_spot_fraction must be in [0,1]");
  }
  for (size_t i = 0; i < faults.size(); ++i) {
    const FaultSpec& f = faults[i];
    auto tag = [&](const std::string& msg) {
      errors.push_back("faults[" + std::to_string(i) + "]: " + msg);
    };
    if (f.endpoint_index >= endpoints) tag("endpoint_index out of range");
    if (f.start_min < 0.0 || f.end_min <= f.start_min) tag("needs 0 <= start_min < end_min");
    if (f.end_min > static_cast<double>(duration_min)) tag("end_min past scenario duration");
    if (f.intensity < 0.0 || f.intensity > 1.0) tag("intensity must be in [0,1]");
  }
  return errors;
}

ScenarioConfig scenario_from_json(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("scenario config is not a JSON object");

  ScenarioConfig cfg;
  auto load = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      field = j[key].template get<std::decay_t<decltype(field)>>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("scenario field '") + key + "' has the wrong type");
    }
  };
  load("name", cfg.name);
  load("seed", cfg.seed);
  load("duration_min", cfg.duration_min);
  load("qpm", cfg.qpm);
  load("endpoints", cfg.endpoints);
  load("zipf_s", cfg.zipf_s);
  load("variants_per_endpoint", cfg.variants_per_endpoint);
  load("span_min", cfg.span_min);
  load("span_max", cfg.span_max);
  load("blind_spot_fraction", cfg.blind_spot_fraction);

  if (j.contains("faults")) {
    if (!j["faults"].is_array()) throw ConfigError("scenario field 'faults' must be an array");
    for (const auto& f : j["faults"]) {
      if (!f.is_object() || !f.contains("kind") || !f["kind"].is_string()) {
        throw ConfigError("fault entries need a string 'kind'");
      }
      auto kind = parse_fault_kind(f["kind"].get<std::string>());
      if (!kind) throw ConfigError("unknown fault kind: " + f["kind"].get<std::string>());
      FaultSpec spec;
      spec.kind = *kind;
      if (f.contains("endpoint_index")) spec.endpoint_index = f["endpoint_index"].get<size_t>();
      if (f.contains("start_min")) spec.start_min = f["start_min"].get<double>();
      if (f.contains("end_min")) spec.end_min = f["end_min"].get<double>();
      if (f.contains("intensity")) spec.intensity = f["intensity"].get<double>();
      if (f.contains("emits_alarm")) spec.emits_alarm = f["emits_alarm"].get<bool>();
      cfg.faults.push_back(spec);
    }
  }
  auto errors = cfg.validate();
  if (!errors.empty()) {
    std::string msg = "invalid scenario config:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["seed"] = cfg.seed;
  j["duration_min"] = cfg.duration_min;
  j["qpm"] = cfg.qpm;
  j["endpoints"] = cfg.endpoints;
  j["zipf_s"] = cfg.zipf_s;
  j["variants_per_endpoint"] = cfg.variants_per_endpoint;
  j["span_min"] = cfg.span_min;
  j["span_max"] = cfg.span_max;
  j["blind_spot_fraction"] = cfg.blind_spot_fraction;
  json faults = json::array();
  for (const auto& f : cfg.faults) {
    faults.push_back({{"kind", to_string(f.kind)},
                      {"endpoint_index", f.endpoint_index},
                      {"start_min", f.start_min},
                      {"end_min", f.end_min},
                      {"intensity", f.intensity},
                      {"emits_alarm", f.emits_alarm}});
  }
  j["faults"] = std::move(faults);
  return j.dump(2);
}

std::vector<std::string> preset_names() { return {"steady", "blindspot", "outage", "latency"}; }

ScenarioConfig preset_scenario(const std::string& name) {
  ScenarioConfig cfg;
  cfg.name = name;
  if (name == "steady") {
    cfg.variants_per_endpoint = 14;
    return cfg;
  }
  if (name == "blindspot") {
    // roughly 2% of the corpus: intensity * zipf share of the hottest
    // endpoint * window fraction of the run
    cfg.faults.push_back({FaultKind::kErrorLogOnly, 0, 2.0, 8.0, 0.096, true});
    return cfg;
  }
  if (name == "outage") {
    cfg.qpm = 600;
    cfg.faults.push_back({FaultKind::kStatusError, 0, 4.0, 8.0, 0.5, true});
    // drop the four hottest endpoints hard enough to trip the rate baseline
    for (size_t e = 0; e < 4; ++e) {
      cfg.faults.push_back({FaultKind::kTrafficDrop, e, 4.0, 8.0, 0.8, false});
    }
    return cfg;
  }
  if (name == "latency") {
    cfg.qpm = 600;
    cfg.faults.push_back({FaultKind::kLatencyInflation, 1, 3.0, 7.0, 0.5, true});
    return cfg;
  }
  throw ConfigError("unknown scenario preset: " + name +
                    " (expected steady, blindspot, outage or latency)");
}

std::string ground_truth_to_jsonl(const GroundTruthRecord& rec) {
  json j;
  j["trace_id"] = rec.trace_id;
  j["anomalous"] = rec.anomalous;
  if (rec.fault) {
    j["fault"] = *rec.fault;
  } else {
    j["fault"] = nullptr;
  }
  j["pattern_id"] = rec.pattern_id;
  j["path_id"] = rec.path_id;
  return j.dump();
}

std::optional<GroundTruthRecord> parse_ground_truth_line(const std::string& line,
                                                         std::string* error) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    *error = "not a JSON object";
    return std::nullopt;
  }
  GroundTruthRecord rec;
  if (!j.contains("trace_id") || !j["trace_id"].is_string() || !j.contains("anomalous") ||
      !j["anomalous"].is_boolean() || !j.contains("pattern_id") ||
      !j["pattern_id"].is_number_unsigned() || !j.contains("path_id") ||
      !j["path_id"].is_number_unsigned()) {
    *error = "missing trace_id/anomalous/pattern_id/path_id";
    return std::nullopt;
  }
  rec.trace_id = j["trace_id"].get<std::string>();
  rec.anomalous = j["anomalous"].get<bool>();
  rec.pattern_id = j["pattern_id"].get<uint32_t>();
  rec.path_id = j["path_id"].get<uint32_t>();
  if (j.contains("fault") && j["fault"].is_string()) rec.fault = j["fault"].get<std::string>();
  return rec;
}

std::vector<GroundTruthRecord> parse_ground_truth_file(const std::string& path,
                                                       std::vector<ParseDiagnostic>* diags) {
  std::vector<GroundTruthRecord> out;
  auto lines = read_lines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::string error;
    auto rec = parse_ground_truth_line(lines[i], &error);
    if (!rec) {
      if (diags) diags->push_back({i + 1, "malformed ground truth record: " + error});
      continue;
    }
    out.push_back(std::move(*rec));
  }
  return out;
}

GeneratedWorkload generate_workload(const ScenarioConfig& cfg) {
  auto errors = cfg.validate();
  if (!errors.empty()) {
    std::string msg = "invalid scenario config:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }

  // fixed variant library per (endpoint, variant)
  std::vector<std::vector<Variant>> variants(cfg.endpoints);
  for (size_t e = 0; e < cfg.endpoints; ++e) {
    variants[e].reserve(cfg.variants_per_endpoint);
    for (size_t v = 0; v < cfg.variants_per_endpoint; ++v) {
      variants[e].push_back(build_variant(cfg, e, v));
    }
  }

  const auto cdf = zipf_cdf(cfg.endpoints, cfg.zipf_s);
  Rng traffic(substream_seed(cfg.seed, kTagTraffic));

  std::vector<PendingTrace> pending;
  pending.reserve(cfg.duration_min * cfg.qpm);
  const int64_t spacing = kMinuteNs / static_cast<int64_t>(cfg.qpm);
  uint64_t seq = 0;
  for (size_t m = 0; m < cfg.duration_min; ++m) {
    for (size_t t = 0; t < cfg.qpm; ++t, ++seq) {
      const double u = traffic.uniform01();
      const size_t endpoint = static_cast<size_t>(
          std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      const size_t variant = traffic.bounded(cfg.variants_per_endpoint);
      const int64_t start =
          static_cast<int64_t>(m) * kMinuteNs + static_cast<int64_t>(t) * spacing;

      PendingTrace p;
      p.endpoint = std::min(endpoint, cfg.endpoints - 1);
      p.variant = variant;
      p.root_start_ns = start;
      char id[24];
      std::snprintf(id, sizeof id, "t%08llx", static_cast<unsigned long long>(seq));
      p.trace = instantiate(variants[p.endpoint][variant], cfg, seq, start, id);
      pending.push_back(std::move(p));
    }
  }

  // traffic drops remove eligible traces before any mutation happens
  std::unordered_set<size_t> dropped;
  for (size_t fi = 0; fi < cfg.faults.size(); ++fi) {
    const FaultSpec& f = cfg.faults[fi];
    if (f.kind != FaultKind::kTrafficDrop) continue;
    const auto w_start = static_cast<int64_t>(f.start_min * kMinuteNs);
    const auto w_end = static_cast<int64_t>(f.end_min * kMinuteNs);
    std::vector<size_t> eligible;
    for (size_t i = 0; i < pending.size(); ++i) {
      if (dropped.count(i)) continue;
      if (pending[i].endpoint != f.endpoint_index) continue;
      if (pending[i].root_start_ns < w_start || pending[i].root_start_ns >= w_end) continue;
      eligible.push_back(i);
    }
    for (size_t hit : bresenham_pick(eligible.size(), f.intensity)) dropped.insert(eligible[hit]);
  }
  if (!dropped.empty()) {
    std::vector<PendingTrace> kept;
    kept.reserve(pending.size() - dropped.size());
    for (size_t i = 0; i < pending.size(); ++i) {
      if (!dropped.count(i)) kept.push_back(std::move(pending[i]));
    }
    pending = std::move(kept);
  }

  // mutation faults in config order; the first fault to claim a trace wins
  for (size_t fi = 0; fi < cfg.faults.size(); ++fi) {
    const FaultSpec& f = cfg.faults[fi];
    if (f.kind == FaultKind::kTrafficDrop) continue;
    const auto w_start = static_cast<int64_t>(f.start_min * kMinuteNs);
    const auto w_end = static_cast<int64_t>(f.end_min * kMinuteNs);
    std::vector<size_t> eligible;
    for (size_t i = 0; i < pending.size(); ++i) {
      if (pending[i].fault) continue;
      if (pending[i].endpoint != f.endpoint_index) continue;
      if (pending[i].root_start_ns < w_start || pending[i].root_start_ns >= w_end) continue;
      eligible.push_back(i);
    }
    Rng rng(substream_seed(cfg.seed, kTagFault, fi));
    for (size_t hit : bresenham_pick(eligible.size(), f.intensity)) {
      apply_mutation(pending[eligible[hit]], f.kind, rng);
    }
  }

  // blind spots hide among every endpoint's remaining healthy traffic
  if (cfg.blind_spot_fraction > 0.0) {
    std::vector<size_t> eligible;
    for (size_t i = 0; i < pending.size(); ++i) {
      if (!pending[i].fault) eligible.push_back(i);
    }
    Rng rng(substream_seed(cfg.seed, kTagFault, 0xb1'5007));
    for (size_t hit : bresenham_pick(eligible.size(), cfg.blind_spot_fraction)) {
      apply_mutation(pending[eligible[hit]], FaultKind::kErrorLogOnly, rng);
    }
  }

  std::stable_sort(pending.begin(), pending.end(), [](const PendingTrace& a, const PendingTrace& b) {
    return trace_end_ns(a.trace) < trace_end_ns(b.trace);
  });

  GeneratedWorkload out;
  out.traces.reserve(pending.size());
  out.truth.reserve(pending.size());
  std::map<std::string, uint32_t> pattern_ids, path_ids;
  for (auto& p : pending) {
    const std::string base = "e" + std::to_string(p.endpoint) + ":v" + std::to_string(p.variant);
    std::string pattern_key = base;
    if (p.fault) pattern_key += ":" + std::string(to_string(*p.fault));

    GroundTruthRecord rec;
    rec.trace_id = p.trace.trace_id;
    rec.anomalous = p.fault.has_value();
    if (p.fault) rec.fault = to_string(*p.fault);
    rec.pattern_id = pattern_ids.try_emplace(pattern_key, static_cast<uint32_t>(pattern_ids.size()))
                         .first->second;
    rec.path_id =
        path_ids.try_emplace(base, static_cast<uint32_t>(path_ids.size())).first->second;
    out.truth.push_back(std::move(rec));
    out.traces.push_back(std::move(p.trace));
  }

  for (const auto& f : cfg.faults) {
    if (!f.emits_alarm) continue;
    AlarmWindow alarm;
    alarm.start_ns = static_cast<int64_t>(f.start_min * kMinuteNs);
    alarm.end_ns = static_cast<int64_t>(f.end_min * kMinuteNs);
    alarm.endpoints.push_back(endpoint_key(f.endpoint_index));
    out.alarms.windows.push_back(std::move(alarm));
  }
  std::stable_sort(out.alarms.windows.begin(), out.alarms.windows.end(),
                   [](const AlarmWindow& a, const AlarmWindow& b) { return a.start_ns < b.start_ns; });
  return out;
}

Trace blind_spot_motif_trace() {
  auto span = [](const char* sid, const char* parent, const char* svc, const char* op,
                 int64_t start, int64_t dur) {
    Span s;
    s.trace_id = "t-motif";
    s.span_id = sid;
    if (parent[0] != '\0') s.parent_span_id = parent;
    s.service = svc;
    s.operation = op;
    s.start_ns = start;
    s.duration_ns = dur;
    s.status = SpanStatus::kOk;
    return s;
  };

  Trace trace;
  trace.trace_id = "t-motif";
  Span basic = span("s1", "", "ts-basic-service", "queryForTravel", 1'000'000'000, 200'000'000);
  basic.logs = {
      {1'010'000'000, LogLevel::kError, std::string(kMotifErrorPrefix1) + " 9000", std::nullopt},
      {1'020'000'000, LogLevel::kError, std::string(kMotifErrorPrefix2) + " 3", std::nullopt},
      {1'030'000'000, LogLevel::kWarn,
       std::string(kMotifWarnPrefix) + " 1200 " + kMotifWarnSuffix, std::nullopt},
  };
  trace.spans.push_back(std::move(basic));
  trace.spans.push_back(span("s2", "s1", "ts-route-service", "queryRoute", 1'040'000'000, 50'000'000));
  trace.spans.push_back(span("s3", "s2", "ts-travel-service", "queryTravel", 1'045'000'000, 20'000'000));
  trace.spans.push_back(span("s4", "s1", "ts-price-service", "queryPrice", 1'100'000'000, 60'000'000));
  trace.spans.push_back(span("s5", "s4", "ts-station-service", "queryStation", 1'110'000'000, 30'000'000));
  trace.root_index = 0;
  return trace;
}

}  // namespace tailsieve
