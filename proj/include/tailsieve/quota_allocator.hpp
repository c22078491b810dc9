#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tailsieve/trace_encoder.hpp"
#include "tailsieve/trace_model.hpp"

namespace tailsieve {

struct AlarmWindow {
  int64_t start_ns = 0;
  int64_t end_ns = 0;  // half-open [start, end)
  std::vector<EndpointKey> endpoints;
};

struct AlarmFeed {
  std::vector<AlarmWindow> windows;

  bool abnormal_at(int64_t ts_ns) const;
  // endpoints of every alarm overlapping [start, end)
  std::set<EndpointKey> alarmed_endpoints(int64_t start_ns, int64_t end_ns) const;
};

std::optional<AlarmWindow> parse_alarm_line(const std::string& line, std::string* error);
std::string alarm_to_jsonl(const AlarmWindow& alarm);
AlarmFeed parse_alarm_file(const std::string& path, std::vector<ParseDiagnostic>* diags);

struct AllocatorConfig {
  double sample_rate = 0.05;      // base budget as a fraction of window traffic
  double boost_max = 3.0;         // alarmed group boost over the even-split average
  double boost_cap_fraction = 0.5;  // alarmed groups together stay under this share
  double drop_threshold = 0.7;    // traffic-drop compensation kicks in below this
  double scale_max = 2.0;         // never scale the budget further than this
  size_t qpm_history_depth = 10;  // prior windows feeding the baseline rate
  bool enable_scaling = true;

  std::vector<std::string> validate() const;
};

enum class Period : uint8_t { kNormal, kAbnormal };
const char* to_string(Period p);

// One sealed buffer window awaiting allocation and selection.
struct BufferWindow {
  int64_t start_ns = 0;
  int64_t end_ns = 0;
  std::vector<EncodedTrace> traces;  // arrival order
  std::vector<double> qpm_history;   // per-minute counts of prior windows
};

struct GlobalBudget {
  size_t total = 0;
  double scale = 1.0;
  double current_qpm = 0.0;
  double baseline_qpm = 0.0;  // mean of qpm_history, 0 when empty
};

struct QuotaEntry {
  Period period = Period::kNormal;
  EndpointKey endpoint;
  size_t quota = 0;
  size_t group_size = 0;
  bool alarmed = false;
};

struct QuotaPlan {
  std::vector<QuotaEntry> entries;  // sorted by (period, endpoint)
  size_t total = 0;                 // sum of entry quotas actually placed
  size_t unspent = 0;               // budget no group could absorb
  double scale = 1.0;
};

std::string quota_entry_to_jsonl(const QuotaEntry& entry, int64_t window_start_ns);

// Partition of window trace indices by root endpoint, endpoint-ordered.
using GroupMap = std::map<EndpointKey, std::vector<size_t>>;
GroupMap group_by_root(const std::vector<EncodedTrace>& traces);

// Splits a window's trace indices into (normal, abnormal) by whether the
// arrival timestamp falls inside any alarm window. Arrival order preserved.
std::pair<std::vector<size_t>, std::vector<size_t>> split_periods(const BufferWindow& window,
                                                                  const AlarmFeed& alarms);

// Layer 1: base budget from the sample rate, scaled up when the window's
// traffic dropped below drop_threshold of the recent per-minute baseline.
GlobalBudget global_budget(const BufferWindow& window, const AllocatorConfig& cfg);

// Layer 2: split the global budget between the normal and abnormal periods
// proportionally (rounding surplus to abnormal), then across groups: even
// split in the normal period; in the abnormal period alarmed groups receive
// up to boost_max times the even-split average, capped in total at
// boost_cap_fraction of the period share, remainder spread evenly over the
// non-alarmed groups. Quotas are clamped to group sizes and reclaimed
// surplus is redistributed; whatever no group can absorb is reported as
// unspent.
QuotaPlan allocate(const BufferWindow& window, const AlarmFeed& alarms,
                   const AllocatorConfig& cfg);

}  // namespace tailsieve
