#include "tailsieve/quota_allocator.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "tailsieve/util.hpp"

namespace tailsieve {

using nlohmann::json;

bool AlarmFeed::abnormal_at(int64_t ts_ns) const {
  for (const auto& w : windows) {
    if (ts_ns >= w.start_ns && ts_ns < w.end_ns) return true;
  }
  return false;
}

std::set<EndpointKey> AlarmFeed::alarmed_endpoints(int64_t start_ns, int64_t end_ns) const {
  std::set<EndpointKey> out;
  for (const auto& w : windows) {
    if (w.start_ns < end_ns && w.end_ns > start_ns) {
      out.insert(w.endpoints.begin(), w.endpoints.end());
    }
  }
  return out;
}

std::optional<AlarmWindow> parse_alarm_line(const std::string& line, std::string* error) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    *error = "not a JSON object";
    return std::nullopt;
  }
  AlarmWindow alarm;
  auto start = j.find("window_start_ns");
  auto end = j.find("window_end_ns");
  if (start == j.end() || !start->is_number_integer() || end == j.end() ||
      !end->is_number_integer()) {
    *error = "missing integer window_start_ns/window_end_ns";
    return std::nullopt;
  }
  alarm.start_ns = start->get<int64_t>();
  alarm.end_ns = end->get<int64_t>();
  auto endpoints = j.find("endpoints");
  if (endpoints == j.end() || !endpoints->is_array()) {
    *error = "missing endpoints array";
    return std::nullopt;
  }
  for (const auto& e : *endpoints) {
    if (!e.is_object() || !e.contains("service") || !e["service"].is_string() ||
        !e.contains("operation") || !e["operation"].is_string()) {
      *error = "endpoint entries need string service/operation";
      return std::nullopt;
    }
    alarm.endpoints.push_back({e["service"].get<std::string>(), e["operation"].get<std::string>()});
  }
  return alarm;
}

std::string alarm_to_jsonl(const AlarmWindow& alarm) {
  json j;
  j["window_start_ns"] = alarm.start_ns;
  j["window_end_ns"] = alarm.end_ns;
  json eps = json::array();
  for (const auto& e : alarm.endpoints) {
    eps.push_back({{"service", e.service}, {"operation", e.operation}});
  }
  j["endpoints"] = std::move(eps);
  return j.dump();
}

AlarmFeed parse_alarm_file(const std::string& path, std::vector<ParseDiagnostic>* diags) {
  AlarmFeed feed;
  auto lines = read_lines(path);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::string error;
    auto alarm = parse_alarm_line(lines[i], &error);
    if (!alarm) {
      if (diags) diags->push_back({i + 1, "malformed alarm record: " + error});
      continue;
    }
    feed.windows.push_back(std::move(*alarm));
  }
  return feed;
}

std::vector<std::string> AllocatorConfig::validate() const {
  std::vector<std::string> errors;
  if (sample_rate < 0.0 || sample_rate > 1.0) errors.push_back("sample_rate must be in [0,1]");
  if (boost_max < 1.0) errors.push_back("boost_max must be >= 1");
  if (boost_cap_fraction <= 0.0 || boost_cap_fraction > 1.0) {
    errors.push_back("boost_cap_fraction must be in (0,1]");
  }
  if (drop_threshold <= 0.0 || drop_threshold >= 1.0) {
    errors.push_back("drop_threshold must be in (0,1)");
  }
  if (scale_max < 1.0) errors.push_back("scale_max must be >= 1");
  if (qpm_history_depth == 0) errors.push_back("qpm_history_depth must be > 0");
  return errors;
}

const char* to_string(Period p) { return p == Period::kAbnormal ? "ABNORMAL" : "NORMAL"; }

std::string quota_entry_to_jsonl(const QuotaEntry& entry, int64_t window_start_ns) {
  json j;
  j["window_start_ns"] = window_start_ns;
  j["period"] = to_string(entry.period);
  j["service"] = entry.endpoint.service;
  j["operation"] = entry.endpoint.operation;
  j["quota"] = entry.quota;
  j["group_size"] = entry.group_size;
  j["alarmed"] = entry.alarmed;
  return j.dump();
}

GroupMap group_by_root(const std::vector<EncodedTrace>& traces) {
  GroupMap groups;
  for (size_t i = 0; i < traces.size(); ++i) groups[traces[i].endpoint].push_back(i);
  return groups;
}

std::pair<std::vector<size_t>, std::vector<size_t>> split_periods(const BufferWindow& window,
                                                                  const AlarmFeed& alarms) {
  std::vector<size_t> normal, abnormal;
  for (size_t i = 0; i < window.traces.size(); ++i) {
    int64_t arrival = window.traces[i].arrival_ns;
    bool hit = false;
    for (const auto& a : alarms.windows) {
      // only alarms overlapping this buffer window count
      if (a.start_ns >= window.end_ns || a.end_ns <= window.start_ns) continue;
      if (arrival >= a.start_ns && arrival < a.end_ns) {
        hit = true;
        break;
      }
    }
    (hit ? abnormal : normal).push_back(i);
  }
  return {std::move(normal), std::move(abnormal)};
}

GlobalBudget global_budget(const BufferWindow& window, const AllocatorConfig& cfg) {
  GlobalBudget gb;
  const size_t n = window.traces.size();
  const double minutes = static_cast<double>(window.end_ns - window.start_ns) / 60e9;
  gb.current_qpm = minutes > 0 ? static_cast<double>(n) / minutes : 0.0;
  if (!window.qpm_history.empty()) {
    double sum = 0.0;
    for (double v : window.qpm_history) sum += v;
    gb.baseline_qpm = sum / static_cast<double>(window.qpm_history.size());
  }

  const auto base = static_cast<size_t>(std::llround(cfg.sample_rate * static_cast<double>(n)));
  double scale = 1.0;
  if (cfg.enable_scaling && gb.baseline_qpm > 0.0 && gb.current_qpm > 0.0 &&
      gb.current_qpm < cfg.drop_threshold * gb.baseline_qpm) {
    scale = std::min(gb.baseline_qpm / gb.current_qpm, cfg.scale_max);
  }
  gb.scale = scale;
  gb.total = std::min(
      static_cast<size_t>(std::llround(scale * static_cast<double>(base))), n);
  return gb;
}

namespace {

struct GroupAlloc {
  EndpointKey endpoint;
  size_t capacity = 0;
  size_t quota = 0;
  bool alarmed = false;
};

// Spreads `share` as evenly as integer quotas allow, clamping at group
// capacity. Rounding surplus favors the largest groups (ties by endpoint
// order). Returns whatever could not be placed anywhere.
size_t waterfill_even(std::vector<GroupAlloc*>& groups, size_t share) {
  size_t remaining = share;
  while (remaining > 0) {
    std::vector<GroupAlloc*> open;
    for (auto* g : groups) {
      if (g->quota < g->capacity) open.push_back(g);
    }
    if (open.empty()) break;
    std::sort(open.begin(), open.end(), [](const GroupAlloc* a, const GroupAlloc* b) {
      if (a->capacity != b->capacity) return a->capacity > b->capacity;
      return a->endpoint < b->endpoint;
    });
    const size_t base = remaining / open.size();
    const size_t extra = remaining % open.size();
    size_t placed_total = 0;
    for (size_t i = 0; i < open.size(); ++i) {
      size_t want = base + (i < extra ? 1 : 0);
      size_t placed = std::min(want, open[i]->capacity - open[i]->quota);
      open[i]->quota += placed;
      placed_total += placed;
    }
    if (placed_total == 0) break;
    remaining -= placed_total;
  }
  return remaining;
}

std::vector<GroupAlloc> build_groups(const BufferWindow& window, const std::vector<size_t>& idx,
                                     const std::set<EndpointKey>& alarmed) {
  std::map<EndpointKey, size_t> sizes;
  for (size_t i : idx) ++sizes[window.traces[i].endpoint];
  std::vector<GroupAlloc> groups;
  groups.reserve(sizes.size());
  for (const auto& [endpoint, count] : sizes) {
    groups.push_back({endpoint, count, 0, alarmed.count(endpoint) > 0});
  }
  return groups;
}

size_t alarmed_sum(const std::vector<GroupAlloc>& groups) {
  size_t sum = 0;
  for (const auto& g : groups) {
    if (g.alarmed) sum += g.quota;
  }
  return sum;
}

// Baseline-coverage pass: when the period share could give every group at
// least one trace, move single quota units from the best-funded groups to
// empty ones. Transfers never push the alarmed total above cap_units.
void repair_zero_quotas(std::vector<GroupAlloc>& groups, size_t share, size_t cap_units) {
  if (share < groups.size()) return;
  size_t alarmed_total = alarmed_sum(groups);
  for (auto& recv : groups) {  // endpoint order
    if (recv.quota > 0) continue;
    GroupAlloc* donor = nullptr;
    for (auto& g : groups) {
      if (g.quota < 2) continue;
      // net effect of the transfer on the alarmed total must respect the cap
      int delta = (recv.alarmed ? 1 : 0) - (g.alarmed ? 1 : 0);
      if (delta > 0 && alarmed_total + 1 > cap_units) continue;
      if (!donor || g.quota > donor->quota) donor = &g;
    }
    if (!donor) continue;
    alarmed_total += (recv.alarmed ? 1 : 0);
    alarmed_total -= (donor->alarmed ? 1 : 0);
    donor->quota -= 1;
    recv.quota += 1;
  }
}

// Allocates one period's share across its groups. Returns unplaced budget.
size_t allocate_period(std::vector<GroupAlloc>& groups, size_t share, double boost_max,
                       double cap_fraction) {
  if (groups.empty() || share == 0) return share;

  std::vector<GroupAlloc*> alarmed, rest, all;
  for (auto& g : groups) {
    all.push_back(&g);
    (g.alarmed ? alarmed : rest).push_back(&g);
  }

  size_t leftover = 0;
  if (alarmed.empty()) {
    leftover = waterfill_even(all, share);
  } else {
    const double avg = static_cast<double>(share) / static_cast<double>(groups.size());
    const double boost_budget =
        std::min(boost_max * avg * static_cast<double>(alarmed.size()),
                 cap_fraction * static_cast<double>(share));
    size_t alarmed_share =
        std::min(static_cast<size_t>(std::llround(boost_budget)), share);
    size_t alarmed_left = waterfill_even(alarmed, alarmed_share);
    size_t placed = alarmed_share - alarmed_left;
    size_t rest_share = share - placed;
    if (rest.empty()) {
      leftover = rest_share;
    } else {
      leftover = waterfill_even(rest, rest_share);
    }
    const auto cap_units = static_cast<size_t>(
        std::ceil(cap_fraction * static_cast<double>(share)));
    repair_zero_quotas(groups, share, cap_units);
  }
  return leftover;
}

}  // namespace

QuotaPlan allocate(const BufferWindow& window, const AlarmFeed& alarms,
                   const AllocatorConfig& cfg) {
  QuotaPlan plan;
  const GlobalBudget budget = global_budget(window, cfg);
  plan.scale = budget.scale;
  if (budget.total == 0) return plan;  // zero budget: callers skip selection

  auto [normal_idx, abnormal_idx] = split_periods(window, alarms);
  const size_t n = window.traces.size();

  // proportional split between periods; the fractional remainder lands on
  // the abnormal side
  const size_t normal_share = budget.total * normal_idx.size() / n;
  const size_t abnormal_share = budget.total - normal_share;

  const auto alarmed = alarms.alarmed_endpoints(window.start_ns, window.end_ns);
  auto normal_groups = build_groups(window, normal_idx, alarmed);
  auto abnormal_groups = build_groups(window, abnormal_idx, alarmed);

  size_t unplaced = 0;
  {
    std::vector<GroupAlloc*> all;
    for (auto& g : normal_groups) all.push_back(&g);
    unplaced += all.empty() ? normal_share : waterfill_even(all, normal_share);
  }
  unplaced += allocate_period(abnormal_groups, abnormal_share, cfg.boost_max,
                              cfg.boost_cap_fraction);

  for (const auto& g : normal_groups) {
    plan.entries.push_back({Period::kNormal, g.endpoint, g.quota, g.capacity, g.alarmed});
  }
  for (const auto& g : abnormal_groups) {
    plan.entries.push_back({Period::kAbnormal, g.endpoint, g.quota, g.capacity, g.alarmed});
  }
  for (const auto& e : plan.entries) plan.total += e.quota;
  plan.unspent = unplaced;
  return plan;
}

}  // namespace tailsieve
