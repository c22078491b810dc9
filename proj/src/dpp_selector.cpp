#include "tailsieve/dpp_selector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "tailsieve/util.hpp"

namespace tailsieve {

double jaccard(const EventPairSet& a, const EventPairSet& b) {
  const auto& pa = a.pairs();
  const auto& pb = b.pairs();
  if (pa.empty() && pb.empty()) return 1.0;
  size_t i = 0, j = 0, common = 0;
  while (i < pa.size() && j < pb.size()) {
    if (pa[i] == pb[j]) {
      ++common, ++i, ++j;
    } else if (pa[i] < pb[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const size_t unioned = pa.size() + pb.size() - common;
  return static_cast<double>(common) / static_cast<double>(unioned);
}

SimilarityCache::SimilarityCache(size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

double SimilarityCache::similarity(const std::shared_ptr<const EventPairSet>& a,
                                   const std::shared_ptr<const EventPairSet>& b) {
  uint64_t ha = a->hash64(), hb = b->hash64();
  if (ha > hb) std::swap(ha, hb);
  const uint64_t key = splitmix64(ha) ^ (splitmix64(hb) * 0x9e3779b97f4a7c15ULL);

  auto it = index_.find(key);
  if (it != index_.end()) {
    const Entry& e = *it->second;
    // digests collide across different sets; trust only a full match
    const bool same = (*e.a == *a && *e.b == *b) || (*e.a == *b && *e.b == *a);
    if (same) {
      ++hits_;
      lru_.splice(lru_.begin(), lru_, it->second);
      return e.sim;
    }
    ++misses_;
    double sim = jaccard(*a, *b);
    // the colliding slot adopts the newer pair
    it->second->a = a;
    it->second->b = b;
    it->second->sim = sim;
    lru_.splice(lru_.begin(), lru_, it->second);
    return sim;
  }

  ++misses_;
  double sim = jaccard(*a, *b);
  lru_.push_front(Entry{key, a, b, sim});
  index_.emplace(key, lru_.begin());
  if (lru_.size() > capacity_) {
    index_.erase(lru_.back().key);
    lru_.pop_back();
  }
  return sim;
}

std::vector<std::string> SelectorConfig::validate() const {
  std::vector<std::string> errors;
  if (epsilon < 0.0) errors.push_back("epsilon must be >= 0");
  if (cache_capacity == 0) errors.push_back("cache_capacity must be > 0");
  return errors;
}

std::string selection_step_to_jsonl(const SelectionStep& step, int64_t window_start_ns) {
  nlohmann::json j;
  j["window_start_ns"] = window_start_ns;
  j["step"] = step.step;
  j["chosen_trace_id"] = step.trace_id;
  if (std::isnan(step.log_gain)) {
    j["marginal_gain"] = nullptr;
  } else {
    j["marginal_gain"] = step.log_gain;
  }
  j["backfill"] = step.backfill;
  return j.dump();
}

std::vector<size_t> greedy_select(const std::vector<const EncodedTrace*>& candidates, size_t k,
                                  const SelectorConfig& cfg, SimilarityCache* cache,
                                  std::vector<SelectionStep>* steps) {
  const size_t n = candidates.size();
  k = std::min(k, n);
  std::vector<size_t> selected;
  if (k == 0) return selected;
  selected.reserve(k);

  double max_anomaly = 0.0;
  for (const auto* c : candidates) max_anomaly = std::max(max_anomaly, c->anomaly);
  std::vector<double> quality(n);
  for (size_t i = 0; i < n; ++i) {
    quality[i] = 1.0 + candidates[i]->anomaly / (1.0 + max_anomaly);
  }

  // marginal conditional variance per candidate, i.e. the determinant gain
  // the candidate would contribute if chosen next
  std::vector<double> d2(n);
  for (size_t i = 0; i < n; ++i) d2[i] = quality[i] * quality[i];
  std::vector<std::vector<double>> chol(n);  // per-candidate Cholesky row
  std::vector<char> taken(n, 0);

  auto sim = [&](size_t i, size_t j) {
    if (cfg.use_cache && cache) return cache->similarity(candidates[i]->eps, candidates[j]->eps);
    return jaccard(*candidates[i]->eps, *candidates[j]->eps);
  };

  while (selected.size() < k) {
    size_t best = n;
    for (size_t i = 0; i < n; ++i) {
      if (taken[i] || d2[i] <= 0.0) continue;  // numerically exhausted
      if (best == n || d2[i] > d2[best]) best = i;
    }
    if (best == n || d2[best] < cfg.epsilon) break;

    if (steps) {
      steps->push_back({selected.size(), candidates[best]->trace_id,
                        std::log(std::max(d2[best], 1e-12)), false});
    }
    taken[best] = 1;
    selected.push_back(best);

    const double d_best = std::sqrt(d2[best]);
    const auto& c_best = chol[best];
    for (size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      double dot = 0.0;
      for (size_t t = 0; t < c_best.size(); ++t) dot += c_best[t] * chol[i][t];
      const double l_ij = quality[i] * quality[best] * sim(i, best);
      const double e = (l_ij - dot) / d_best;
      chol[i].push_back(e);
      d2[i] -= e * e;
    }
    chol[best].push_back(d_best);
  }

  if (selected.size() < k) {
    // diversity gains are gone; spend the rest of the quota on the most
    // anomalous leftovers
    std::vector<size_t> rest;
    for (size_t i = 0; i < n; ++i) {
      if (!taken[i]) rest.push_back(i);
    }
    std::sort(rest.begin(), rest.end(), [&](size_t a, size_t b) {
      if (candidates[a]->anomaly != candidates[b]->anomaly) {
        return candidates[a]->anomaly > candidates[b]->anomaly;
      }
      if (candidates[a]->arrival_ns != candidates[b]->arrival_ns) {
        return candidates[a]->arrival_ns < candidates[b]->arrival_ns;
      }
      return candidates[a]->trace_id < candidates[b]->trace_id;
    });
    for (size_t i : rest) {
      if (selected.size() == k) break;
      if (steps) {
        steps->push_back({selected.size(), candidates[i]->trace_id,
                          std::numeric_limits<double>::quiet_NaN(), true});
      }
      selected.push_back(i);
    }
  }
  return selected;
}

}  // namespace tailsieve
