#pragma once

#include <cstdint>
#include <list>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tailsieve/trace_encoder.hpp"

namespace tailsieve {

// Jaccard similarity of two pair sets; two empty sets count as identical.
double jaccard(const EventPairSet& a, const EventPairSet& b);

// LRU cache of pairwise similarities keyed by the order-independent set
// digests. A digest collision is detected by comparing the stored sets and
// falls back to a fresh computation, so cached answers are always exact.
class SimilarityCache {
 public:
  explicit SimilarityCache(size_t capacity = size_t{1} << 20);

  double similarity(const std::shared_ptr<const EventPairSet>& a,
                    const std::shared_ptr<const EventPairSet>& b);

  uint64_t hits() const { return hits_; }
  uint64_t misses() const { return misses_; }
  double hit_rate() const {
    uint64_t total = hits_ + misses_;
    return total == 0 ? 0.0 : static_cast<double>(hits_) / static_cast<double>(total);
  }
  size_t size() const { return lru_.size(); }
  size_t capacity() const { return capacity_; }

 private:
  struct Entry {
    uint64_t key;
    std::shared_ptr<const EventPairSet> a, b;
    double sim;
  };

  size_t capacity_;
  std::list<Entry> lru_;  // front = most recent
  std::unordered_map<uint64_t, std::list<Entry>::iterator> index_;
  uint64_t hits_ = 0;
  uint64_t misses_ = 0;
};

struct SelectorConfig {
  // stop once the best candidate's conditional variance gain falls below
  // this; remaining slots are backfilled by anomaly score
  double epsilon = 1e-3;
  size_t cache_capacity = size_t{1} << 20;
  bool use_cache = true;

  std::vector<std::string> validate() const;
};

struct SelectionStep {
  size_t step = 0;
  std::string trace_id;
  double log_gain = 0.0;  // log of the clamped marginal gain; NaN for backfill
  bool backfill = false;
};

std::string selection_step_to_jsonl(const SelectionStep& step, int64_t window_start_ns);

// Greedy MAP inference over the quality/diversity kernel
//   L[i][j] = q_i * J(E_i, E_j) * q_j,  q_i = 1 + a_i / (1 + max_j a_j)
// using incrementally updated Cholesky factors, so each step costs one kernel
// column instead of a full determinant. Returns exactly k candidate indices:
// greedy picks first (early-stopped when gains die out), then backfill by
// (anomaly desc, arrival asc, trace_id asc).
std::vector<size_t> greedy_select(const std::vector<const EncodedTrace*>& candidates, size_t k,
                                  const SelectorConfig& cfg, SimilarityCache* cache,
                                  std::vector<SelectionStep>* steps = nullptr);

}  // namespace tailsieve
