#include "tailsieve/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tailsieve/util.hpp"

namespace tailsieve {

namespace {

std::string encode_subtree(const Trace& trace, size_t node,
                           const std::vector<std::vector<size_t>>& children) {
  const Span& span = trace.spans[node];
  std::string label = span.service + "/" + span.operation;
  if (children[node].empty()) return label;

  std::vector<std::string> encoded;
  encoded.reserve(children[node].size());
  for (size_t child : children[node]) encoded.push_back(encode_subtree(trace, child, children));
  std::sort(encoded.begin(), encoded.end());
  // parallel duplicates collapse: B,B,C -> B,C
  encoded.erase(std::unique(encoded.begin(), encoded.end()), encoded.end());

  std::string out = label + "(";
  for (size_t i = 0; i < encoded.size(); ++i) {
    if (i) out += ',';
    out += encoded[i];
  }
  out += ')';
  return out;
}

}  // namespace

std::string canonical_path(const Trace& trace) {
  std::unordered_map<std::string_view, size_t> by_span_id;
  for (size_t i = 0; i < trace.spans.size(); ++i) by_span_id.emplace(trace.spans[i].span_id, i);

  std::vector<std::vector<size_t>> children(trace.spans.size());
  for (size_t i = 0; i < trace.spans.size(); ++i) {
    if (i == trace.root_index) continue;
    const auto& parent = trace.spans[i].parent_span_id;
    if (!parent) continue;
    auto it = by_span_id.find(*parent);
    if (it != by_span_id.end() && it->second != i) children[it->second].push_back(i);
  }

  std::string out = encode_subtree(trace, trace.root_index, children);
  if (!trace.orphan_indices.empty()) {
    std::vector<std::string> extra;
    for (size_t i : trace.orphan_indices) extra.push_back(encode_subtree(trace, i, children));
    std::sort(extra.begin(), extra.end());
    for (const auto& e : extra) {
      out += '|';
      out += e;
    }
  }
  return out;
}

CorpusIndex CorpusIndex::build(const std::vector<Trace>& corpus, const AnomalyConfig& cfg) {
  CorpusIndex index;
  EventManager events;
  TemplateStore templates;
  TraceEncoder encoder(events, templates, cfg);

  std::map<EndpointKey, GroupStats> stats;
  std::set<EndpointKey> endpoints;
  std::map<std::string, uint32_t> paths;
  // pattern interning: digest buckets, confirmed by full set equality
  std::unordered_map<uint64_t, std::vector<uint32_t>> buckets;
  std::vector<std::shared_ptr<const EventPairSet>> pattern_sets;

  index.rows_.reserve(corpus.size());
  for (const Trace& trace : corpus) {
    auto stat_it = stats.try_emplace(root_endpoint(trace), cfg.latency_window).first;
    EncodedTrace encoded = encoder.encode(trace, stat_it->second);
    stat_it->second.observe(encoded.end_to_end_ns);

    CorpusTraceInfo row;
    row.trace_id = trace.trace_id;
    row.endpoint = encoded.endpoint;
    row.anomaly = encoded.anomaly;
    row.anomalous = encoded.anomaly >= cfg.anomaly_threshold;

    uint32_t pattern = 0;
    bool found = false;
    auto& bucket = buckets[encoded.eps->hash64()];
    for (uint32_t pid : bucket) {
      if (*pattern_sets[pid] == *encoded.eps) {
        pattern = pid;
        found = true;
        break;
      }
    }
    if (!found) {
      pattern = static_cast<uint32_t>(pattern_sets.size());
      pattern_sets.push_back(encoded.eps);
      bucket.push_back(pattern);
      index.pattern_freq_.push_back(0);
    }
    row.pattern_id = pattern;
    ++index.pattern_freq_[pattern];

    auto path_it =
        paths.try_emplace(canonical_path(trace), static_cast<uint32_t>(paths.size())).first;
    row.path_id = path_it->second;

    endpoints.insert(row.endpoint);
    index.id_index_.emplace(row.trace_id, index.rows_.size());
    index.rows_.push_back(std::move(row));
  }

  index.endpoint_count_ = endpoints.size();
  index.path_count_ = paths.size();
  return index;
}

size_t CorpusIndex::rare_threshold() const {
  return std::max<size_t>(1, rows_.size() / 1000);
}

const CorpusTraceInfo& CorpusIndex::by_trace_id(const std::string& trace_id) const {
  auto it = id_index_.find(trace_id);
  if (it == id_index_.end()) throw DataError("trace id not in corpus: " + trace_id);
  return rows_[it->second];
}

MetricsReport compute_metrics(const CorpusIndex& index, const std::vector<std::string>& sample_ids,
                              const std::unordered_map<std::string, bool>* labels) {
  MetricsReport report;
  report.corpus_size = index.size();
  report.sample_size = sample_ids.size();
  if (index.size() == 0) throw DataError("cannot evaluate against an empty corpus");

  std::set<EndpointKey> endpoints;
  std::set<uint32_t> paths;
  std::map<uint32_t, size_t> pattern_counts;
  size_t anomalous = 0, rare = 0, labeled_anomalous = 0, labeled_seen = 0;
  const size_t rare_cut = index.rare_threshold();

  for (const auto& id : sample_ids) {
    const CorpusTraceInfo& row = index.by_trace_id(id);
    endpoints.insert(row.endpoint);
    paths.insert(row.path_id);
    ++pattern_counts[row.pattern_id];
    if (row.anomalous) ++anomalous;
    if (index.pattern_freq()[row.pattern_id] <= rare_cut) ++rare;
    if (labels) {
      auto it = labels->find(id);
      if (it != labels->end()) {
        ++labeled_seen;
        if (it->second) ++labeled_anomalous;
      }
    }
  }

  const auto n = static_cast<double>(sample_ids.size());
  report.api_coverage =
      static_cast<double>(endpoints.size()) / static_cast<double>(index.endpoint_count());
  report.path_coverage =
      static_cast<double>(paths.size()) / static_cast<double>(index.path_count());
  report.pattern_coverage =
      static_cast<double>(pattern_counts.size()) / static_cast<double>(index.pattern_count());
  report.actual_rate = n / static_cast<double>(index.size());

  if (!sample_ids.empty()) {
    // summed over the ascending count multiset, so the value is independent
    // of pattern id assignment order
    std::vector<size_t> counts;
    counts.reserve(pattern_counts.size());
    for (const auto& [pattern, count] : pattern_counts) counts.push_back(count);
    std::sort(counts.begin(), counts.end());
    double entropy = 0.0;
    for (size_t count : counts) {
      const double p = static_cast<double>(count) / n;
      entropy -= p * std::log2(p);
    }
    report.shannon_entropy_bits = entropy;
    report.proportion_anomaly = static_cast<double>(anomalous) / n;
    report.proportion_rare = static_cast<double>(rare) / n;
    report.bcr = static_cast<double>(pattern_counts.size()) / n;
  }
  if (labels && labeled_seen == sample_ids.size() && !sample_ids.empty()) {
    report.proportion_anomaly_labeled = static_cast<double>(labeled_anomalous) / n;
  }
  return report;
}

std::vector<std::string> random_sample(const std::vector<std::string>& corpus_ids, double rate,
                                       uint64_t seed) {
  const size_t n = corpus_ids.size();
  auto k = static_cast<size_t>(std::llround(rate * static_cast<double>(n)));
  k = std::min(k, n);

  std::vector<size_t> perm(n);
  std::iota(perm.begin(), perm.end(), size_t{0});
  Rng rng(substream_seed(seed, 0x5a3d1eULL));
  for (size_t i = 0; i < k; ++i) {
    size_t j = i + static_cast<size_t>(rng.bounded(n - i));
    std::swap(perm[i], perm[j]);
  }
  std::vector<size_t> chosen(perm.begin(), perm.begin() + static_cast<long>(k));
  std::sort(chosen.begin(), chosen.end());

  std::vector<std::string> out;
  out.reserve(k);
  for (size_t i : chosen) out.push_back(corpus_ids[i]);
  return out;
}

std::string metrics_to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["sampler"] = r.sampler;
  j["corpus_size"] = r.corpus_size;
  j["sample_size"] = r.sample_size;
  j["api_coverage"] = r.api_coverage;
  j["path_coverage"] = r.path_coverage;
  j["pattern_coverage"] = r.pattern_coverage;
  j["shannon_entropy_bits"] = r.shannon_entropy_bits;
  j["proportion_anomaly"] = r.proportion_anomaly;
  j["proportion_rare"] = r.proportion_rare;
  j["bcr"] = r.bcr;
  j["actual_rate"] = r.actual_rate;
  if (r.proportion_anomaly_labeled) {
    j["proportion_anomaly_labeled"] = *r.proportion_anomaly_labeled;
  }
  if (r.seed) j["seed"] = *r.seed;
  if (r.runtime) {
    j["runtime"] = {{"mean_ms", r.runtime->mean_ms},
                    {"p50_ms", r.runtime->p50_ms},
                    {"p99_ms", r.runtime->p99_ms},
                    {"traces", r.runtime->traces}};
  }
  return j.dump(2);
}

std::string metrics_csv_header() {
  return "sampler,rate,seed,sample_size,api_coverage,path_coverage,pattern_coverage,"
         "shannon_entropy_bits,proportion_anomaly,proportion_rare,bcr,actual_rate";
}

namespace {
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}
}  // namespace

std::string metrics_csv_row(const MetricsReport& r) {
  std::ostringstream out;
  out << r.sampler << ',' << fmt(r.actual_rate) << ',';
  if (r.seed) {
    out << *r.seed;
  } else {
    out << '-';
  }
  out << ',' << r.sample_size << ',' << fmt(r.api_coverage) << ',' << fmt(r.path_coverage) << ','
      << fmt(r.pattern_coverage) << ',' << fmt(r.shannon_entropy_bits) << ','
      << fmt(r.proportion_anomaly) << ',' << fmt(r.proportion_rare) << ',' << fmt(r.bcr) << ','
      << fmt(r.actual_rate);
  return out.str();
}

std::string metrics_table(const std::vector<MetricsReport>& reports) {
  static constexpr const char* kCols[] = {"sampler",    "n",       "api_cov", "path_cov",
                                          "pattern_cov", "entropy", "p_anom",  "p_rare",
                                          "bcr",         "rate"};
  std::vector<std::vector<std::string>> cells;
  cells.emplace_back(std::begin(kCols), std::end(kCols));
  for (const auto& r : reports) {
    cells.push_back({r.sampler, std::to_string(r.sample_size), fmt(r.api_coverage),
                     fmt(r.path_coverage), fmt(r.pattern_coverage), fmt(r.shannon_entropy_bits),
                     fmt(r.proportion_anomaly), fmt(r.proportion_rare), fmt(r.bcr),
                     fmt(r.actual_rate)});
  }
  std::vector<size_t> width(cells[0].size(), 0);
  for (const auto& row : cells) {
    for (size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (const auto& row : cells) {
    for (size_t c = 0; c < row.size(); ++c) {
      out << row[c] << std::string(width[c] - row[c].size() + 2, ' ');
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace tailsieve
