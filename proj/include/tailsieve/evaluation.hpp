#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tailsieve/trace_encoder.hpp"
#include "tailsieve/trace_model.hpp"

namespace tailsieve {

// DFS encoding of the span tree: "service/operation" labels, children sorted
// by their own encodings, runs of identical siblings collapsed. Orphan
// subtrees are appended after the root component, sorted, joined by '|'.
std::string canonical_path(const Trace& trace);

struct CorpusTraceInfo {
  std::string trace_id;
  EndpointKey endpoint;
  uint32_t pattern_id = 0;  // event-pair-set equivalence class
  uint32_t path_id = 0;
  bool anomalous = false;
  double anomaly = 0.0;
};

// Precomputed per-trace facts about a corpus: endpoint, canonical path id,
// pattern id (exact event-pair-set equality, digest-bucketed), anomaly flag.
// Anomaly scores replay the corpus in file order, feeding each trace's
// latency into its group window right after scoring it.
class CorpusIndex {
 public:
  static CorpusIndex build(const std::vector<Trace>& corpus, const AnomalyConfig& cfg = {});

  size_t size() const { return rows_.size(); }
  size_t endpoint_count() const { return endpoint_count_; }
  size_t path_count() const { return path_count_; }
  size_t pattern_count() const { return pattern_freq_.size(); }
  const std::vector<size_t>& pattern_freq() const { return pattern_freq_; }
  // rare patterns occur at most max(1, floor(0.001 * corpus size)) times
  size_t rare_threshold() const;

  const CorpusTraceInfo& row(size_t i) const { return rows_[i]; }
  // throws DataError for ids not present in the corpus
  const CorpusTraceInfo& by_trace_id(const std::string& trace_id) const;

 private:
  std::vector<CorpusTraceInfo> rows_;
  std::unordered_map<std::string, size_t> id_index_;
  std::vector<size_t> pattern_freq_;  // by pattern id
  size_t endpoint_count_ = 0;
  size_t path_count_ = 0;
};

struct RuntimeStats {
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p99_ms = 0.0;
  size_t traces = 0;
};

struct MetricsReport {
  std::string sampler;
  size_t corpus_size = 0;
  size_t sample_size = 0;
  double api_coverage = 0.0;
  double path_coverage = 0.0;
  double pattern_coverage = 0.0;
  double shannon_entropy_bits = 0.0;
  double proportion_anomaly = 0.0;
  double proportion_rare = 0.0;
  double bcr = 0.0;  // unique sampled patterns / sample size
  double actual_rate = 0.0;
  std::optional<double> proportion_anomaly_labeled;  // against ground truth
  std::optional<RuntimeStats> runtime;
  std::optional<uint64_t> seed;
};

// Scores one sample (list of corpus trace ids). Unknown ids are a hard
// error. `labels` optionally maps trace ids to ground-truth anomaly flags.
MetricsReport compute_metrics(const CorpusIndex& index, const std::vector<std::string>& sample_ids,
                              const std::unordered_map<std::string, bool>* labels = nullptr);

// Uniform sample without replacement of exactly round(rate * N) ids,
// returned in corpus order. Deterministic for a given seed.
std::vector<std::string> random_sample(const std::vector<std::string>& corpus_ids, double rate,
                                       uint64_t seed);

std::string metrics_to_json(const MetricsReport& report);
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsReport& report);
// fixed-width comparison table for the terminal
std::string metrics_table(const std::vector<MetricsReport>& reports);

}  // namespace tailsieve
